//! Kolmogorov-Smirnov distances with asymptotic critical values, used to
//! compare simulated statistic distributions.

/// Sup distance between the empirical CDF of `sample` and `cdf`.
pub fn one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Sup distance between two empirical CDFs.
pub fn two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`, the asymptotic Kolmogorov quantile.
fn kolmogorov_quantile(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn critical_value_one_sample(alpha: f64, n: usize) -> f64 {
    kolmogorov_quantile(alpha) / (n as f64).sqrt()
}

pub fn critical_value_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_quantile(alpha) * ((n + m) / (n * m)).sqrt()
}
