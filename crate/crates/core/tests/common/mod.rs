//! Independent oracles for the integration and acceptance tests. Nothing here
//! calls the library's solver or statistic code.

#![allow(dead_code)]

use otgof::PointSet;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum assignment cost over all `N!` bijections (Heap's algorithm).
pub fn brute_force_min_cost(points: &PointSet, targets: &PointSet) -> f64 {
    let n = points.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| sq_dist(points.row(i), targets.row(j)))
            .sum()
    };
    let mut best = cost(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Empirical characteristic function at `t`.
fn ecf(points: &PointSet, t: &[f64]) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for row in points.rows() {
        let d: f64 = row.iter().zip(t).map(|(x, s)| x * s).sum();
        re += d.cos();
        im += d.sin();
    }
    let k = points.len() as f64;
    (re / k, im / k)
}

/// `nm/N * int |phi_data - phi_ref|^2 w` for the Gaussian weight whose CF is
/// `exp(-a^2 |x|^2)`, by the tensor midpoint rule with `nodes` per axis on
/// `[-8a, 8a]^p`.
pub fn quadrature_statistic(data: &PointSet, reference: &PointSet, a: f64, nodes: usize) -> f64 {
    let p = data.dim();
    let half = 8.0 * a;
    let h = 2.0 * half / nodes as f64;
    let var2 = 4.0 * a * a;
    let norm = (std::f64::consts::PI * var2).powf(-0.5 * p as f64);
    let total = nodes.pow(p as u32);
    let mut t = vec![0.0; p];
    let mut sum = 0.0;
    for mut idx in 0..total {
        for coord in t.iter_mut() {
            *coord = -half + h * ((idx % nodes) as f64 + 0.5);
            idx /= nodes;
        }
        let r2: f64 = t.iter().map(|v| v * v).sum();
        let w = norm * (-r2 / var2).exp();
        let (a1, b1) = ecf(data, &t);
        let (a2, b2) = ecf(reference, &t);
        sum += ((a1 - a2).powi(2) + (b1 - b2).powi(2)) * w;
    }
    let (n, m) = (data.len() as f64, reference.len() as f64);
    n * m / (n + m) * sum * h.powi(p as i32)
}

/// Chi-square CDF by composite Simpson on the substitution `x = s^2`, which
/// keeps the integrand smooth at the origin for every `dof >= 1`.
pub fn chisq_cdf_by_quadrature(x: f64, dof: f64) -> f64 {
    let half = 0.5 * dof;
    let log_norm = -half * 2f64.ln() - statrs::function::gamma::ln_gamma(half);
    let f = |s: f64| {
        if s == 0.0 {
            return if dof == 1.0 { 2.0 * log_norm.exp() } else { 0.0 };
        }
        2.0 * (log_norm + (dof - 1.0) * s.ln() - 0.5 * s * s).exp()
    };
    let upper = x.sqrt();
    let steps = 4000;
    let h = upper / steps as f64;
    let mut acc = f(0.0) + f(upper);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    acc * h / 3.0
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
