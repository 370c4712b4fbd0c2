//! Samplers, the chi-square quantile and the moment estimators used by the
//! tests and simulation studies.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::rng::{stream, Purpose, StreamRng};

/// Anything that draws iid points in `R^p`.
pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, count: usize, rng: &mut StreamRng) -> PointSet;
}

/// Symmetric positive-definite square root by eigendecomposition.
///
/// `matrix` is row-major `p x p`. Fails if it is not symmetric or has an
/// eigenvalue that is not positive.
pub fn spd_sqrt(matrix: &[f64], p: usize) -> Result<Vec<f64>> {
    if matrix.len() != p * p || p == 0 {
        return Err(Error::DimensionMismatch {
            expected: p * p,
            found: matrix.len(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite entry".into()));
    }
    let scale = matrix
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for i in 0..p {
        for j in (i + 1)..p {
            if (matrix[i * p + j] - matrix[j * p + i]).abs() > 1e-10 * scale {
                return Err(Error::NotPositiveDefinite(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    let m = DMatrix::from_row_slice(p, p, matrix);
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 1e-13 * max.abs()) || !(max > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("eigenvalues in [{min:e}, {max:e}]")));
    }
    let root =
        &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let mut out = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            // symmetrize away rounding
            out[i * p + j] = 0.5 * (root[(i, j)] + root[(j, i)]);
        }
    }
    Ok(out)
}

fn affine_into(mean: &[f64], root: &[f64], z: &[f64], scale: f64, out: &mut [f64]) {
    let p = mean.len();
    for i in 0..p {
        let dot: f64 = (0..p).map(|k| root[i * p + k] * z[k]).sum();
        out[i] = mean[i] + scale * dot;
    }
}

/// Multivariate normal `N_p(mu, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvNormalParams {
    mean: Vec<f64>,
    cov: Vec<f64>,
    root: Vec<f64>,
}

impl MvNormalParams {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let root = spd_sqrt(&cov, mean.len())?;
        Ok(Self { mean, cov, root })
    }

    pub fn standard(dim: usize) -> Self {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = 1.0;
        }
        Self {
            mean: vec![0.0; dim],
            root: cov.clone(),
            cov,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance.
    pub fn cov(&self) -> &[f64] {
        &self.cov
    }

    /// Row-major symmetric square root of the covariance.
    pub fn cov_sqrt(&self) -> &[f64] {
        &self.root
    }

    /// `mu + Sigma^{1/2} z`.
    pub fn transform(&self, z: &[f64], out: &mut [f64]) {
        affine_into(&self.mean, &self.root, z, 1.0, out);
    }
}

impl Sampler for MvNormalParams {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample(&self, count: usize, rng: &mut StreamRng) -> PointSet {
        let p = self.dim();
        let mut data = vec![0.0; count * p];
        let mut z = vec![0.0; p];
        for row in data.chunks_exact_mut(p) {
            z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
            affine_into(&self.mean, &self.root, &z, 1.0, row);
        }
        PointSet::new(p, data).expect("dimension is positive")
    }
}

/// Multivariate t `T_p(mu, Sigma, df)` with scale matrix `Sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvTParams {
    mean: Vec<f64>,
    scale: Vec<f64>,
    root: Vec<f64>,
    df: f64,
    chi: ChiSquared<f64>,
}

impl MvTParams {
    pub fn new(mean: Vec<f64>, scale: Vec<f64>, df: f64) -> Result<Self> {
        if !(df.is_finite() && df > 0.0) {
            return Err(Error::Config(format!("degrees of freedom must be positive, got {df}")));
        }
        let root = spd_sqrt(&scale, mean.len())?;
        let chi = ChiSquared::new(df).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            mean,
            scale,
            root,
            df,
            chi,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn df(&self) -> f64 {
        self.df
    }
}

impl Sampler for MvTParams {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample(&self, count: usize, rng: &mut StreamRng) -> PointSet {
        let p = self.dim();
        let mut data = vec![0.0; count * p];
        let mut z = vec![0.0; p];
        for row in data.chunks_exact_mut(p) {
            z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
            let w: f64 = self.chi.sample(rng);
            affine_into(&self.mean, &self.root, &z, (self.df / w).sqrt(), row);
        }
        PointSet::new(p, data).expect("dimension is positive")
    }
}

/// Uniform law on the cube `(lo, hi)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBox {
    lo: f64,
    hi: f64,
    dim: usize,
}

impl UniformBox {
    pub fn new(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("uniform box needs lo < hi, got ({lo}, {hi})")));
        }
        if dim == 0 {
            return Err(Error::Config("uniform box dimension must be positive".into()));
        }
        Ok(Self { lo, hi, dim })
    }
}

impl Sampler for UniformBox {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, count: usize, rng: &mut StreamRng) -> PointSet {
        let width = self.hi - self.lo;
        let data = (0..count * self.dim)
            .map(|_| self.lo + width * rng.random::<f64>())
            .collect();
        PointSet::new(self.dim, data).expect("dimension is positive")
    }
}

/// `count` draws from `N_p(mu, Sigma)` on the stream keyed by `seed`.
pub fn sample_mvnormal(params: &MvNormalParams, count: usize, seed: u64) -> PointSet {
    params.sample(count, &mut stream(seed, Purpose::Study, 0))
}

pub fn sample_mvt(params: &MvTParams, count: usize, seed: u64) -> PointSet {
    params.sample(count, &mut stream(seed, Purpose::Study, 0))
}

pub fn sample_uniform_box(lo: f64, hi: f64, dim: usize, count: usize, seed: u64) -> Result<PointSet> {
    Ok(UniformBox::new(lo, hi, dim)?.sample(count, &mut stream(seed, Purpose::Study, 0)))
}

/// Chi-square CDF with `dof` degrees of freedom.
pub fn chisq_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * dof, 0.5 * x)
    }
}

fn chisq_pdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * dof;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Quantile `H_p^{-1}(u)` of the chi-square law with `dof` degrees of freedom.
///
/// Two degrees of freedom use the closed form `-2 ln(1 - u)`; otherwise a
/// safeguarded Newton iteration on the regularized lower incomplete gamma.
pub fn chisq_quantile(u: f64, dof: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Config(format!("probability {u} outside [0, 1)")));
    }
    if !(dof > 0.0) {
        return Err(Error::Config(format!("degrees of freedom must be positive, got {dof}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if dof == 2.0 {
        return Ok(-2.0 * (-u).ln_1p());
    }
    let mut lo = 0.0;
    let mut hi = dof.max(1.0);
    while chisq_cdf(hi, dof) < u {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = chisq_cdf(x, dof) - u;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = chisq_pdf(x, dof);
        let newton = x - f / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Sample mean and covariance (normalized by `n - 1`) of row-major `data`.
pub fn mean_and_cov(data: &PointSet) -> (Vec<f64>, Vec<f64>) {
    let p = data.dim();
    let n = data.len();
    let mean = data.mean();
    let mut cov = vec![0.0; p * p];
    for row in data.rows() {
        for i in 0..p {
            let di = row[i] - mean[i];
            for j in i..p {
                cov[i * p + j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..p {
        for j in i..p {
            let v = cov[i * p + j] / denom;
            cov[i * p + j] = v;
            cov[j * p + i] = v;
        }
    }
    (mean, cov)
}

/// Sample mean and sample covariance as normal-family estimates.
pub fn estimate_normal(data: &PointSet) -> Result<MvNormalParams> {
    let p = data.dim();
    if data.len() < p + 1 {
        return Err(Error::Estimation(format!(
            "need at least {} observations in dimension {p}, got {}",
            p + 1,
            data.len()
        )));
    }
    let (mean, cov) = mean_and_cov(data);
    MvNormalParams::new(mean, cov).map_err(|e| Error::Estimation(format!("rank-deficient sample covariance ({e})")))
}

/// Moment estimator for the t family with known `df > 2`: location by the
/// sample mean, scale by `(df - 2) / df` times the sample covariance.
pub fn estimate_t_moments(data: &PointSet, df: f64) -> Result<MvTParams> {
    if !(df > 2.0) {
        return Err(Error::Estimation(format!("moment estimator needs df > 2, got {df}")));
    }
    let normal = estimate_normal(data)?;
    let factor = (df - 2.0) / df;
    let scale = normal.cov().iter().map(|v| v * factor).collect();
    MvTParams::new(normal.mean().to_vec(), scale, df).map_err(|e| Error::Estimation(e.to_string()))
}
