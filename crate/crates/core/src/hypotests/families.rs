use crate::distributions::{
    chisq_quantile, estimate_normal, estimate_t_moments, spd_sqrt, MvNormalParams, MvTParams, Sampler,
};
use crate::error::{Error, Result};
use crate::lowdisc::spherical_grid;
use crate::points::{norm, PointSet};
use crate::rng::StreamRng;

/// A parametric null family with an estimator and a sampler sharing one
/// parameterisation.
pub trait ParametricFamily: Sync {
    type Params: Send + Sync;

    fn name(&self) -> String;
    fn estimate(&self, data: &PointSet) -> Result<Self::Params>;
    fn sample(&self, params: &Self::Params, count: usize, rng: &mut StreamRng) -> PointSet;
    /// Member with zero location and identity shape in dimension `p`.
    fn standard(&self, p: usize) -> Result<Self::Params>;

    /// Deterministic reference of `m` points for the fitted law, if the
    /// family has one.
    fn grid_reference(&self, _params: &Self::Params, _base: &NormalGridBase) -> Option<PointSet> {
        None
    }
}

/// The spherical grid pushed to `N_p(0, I)`: `sqrt(H_p^{-1}(|y|)) y / |y|`.
///
/// Fitting a normal law only needs an affine map of these points, so they
/// are computed once per `(p, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalGridBase {
    points: PointSet,
}

impl NormalGridBase {
    pub fn new(p: usize, m: usize) -> Result<Self> {
        let grid = spherical_grid(p, m)?;
        let mut points = grid.points().clone();
        for i in 0..points.len() {
            let row = points.row_mut(i);
            let r = norm(row);
            if !(r > 0.0) {
                return Err(Error::Config(format!("grid point {i} has zero norm")));
            }
            let s = chisq_quantile(r, p as f64)?.sqrt() / r;
            row.iter_mut().for_each(|v| *v *= s);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// `mu + root * z` for every base point `z`.
    pub fn affine(&self, mean: &[f64], root: &[f64]) -> PointSet {
        let p = self.points.dim();
        let mut out = self.points.clone();
        for i in 0..out.len() {
            let z = self.points.row(i);
            let row = out.row_mut(i);
            for a in 0..p {
                row[a] = mean[a] + (0..p).map(|b| root[a * p + b] * z[b]).sum::<f64>();
            }
        }
        out
    }
}

/// Grid reference for a fitted normal law: `mu + Sigma^{1/2} sqrt(H_p^{-1}(|y|)) y / |y|`
/// over the `m`-point spherical grid.
pub fn normality_grid_reference(mean: &[f64], cov: &[f64], m: usize) -> Result<PointSet> {
    let p = mean.len();
    let root = spd_sqrt(cov, p)?;
    Ok(NormalGridBase::new(p, m)?.affine(mean, &root))
}

/// `N_p(mu, Sigma)` fitted by sample mean and covariance.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalFamily;

impl ParametricFamily for NormalFamily {
    type Params = MvNormalParams;

    fn name(&self) -> String {
        "normal".into()
    }

    fn estimate(&self, data: &PointSet) -> Result<MvNormalParams> {
        estimate_normal(data)
    }

    fn standard(&self, p: usize) -> Result<MvNormalParams> {
        Ok(MvNormalParams::standard(p))
    }

    fn sample(&self, params: &MvNormalParams, count: usize, rng: &mut StreamRng) -> PointSet {
        params.sample(count, rng)
    }

    fn grid_reference(&self, params: &MvNormalParams, base: &NormalGridBase) -> Option<PointSet> {
        Some(base.affine(params.mean(), params.cov_sqrt()))
    }
}

/// Multivariate t with known degrees of freedom and a pluggable estimator.
#[derive(Debug, Clone, Copy)]
pub struct StudentFamily {
    pub df: f64,
    pub estimator: fn(&PointSet, f64) -> Result<MvTParams>,
}

impl StudentFamily {
    /// Moment estimator; needs `df > 2`.
    pub fn new(df: f64) -> Self {
        Self {
            df,
            estimator: estimate_t_moments,
        }
    }
}

impl ParametricFamily for StudentFamily {
    type Params = MvTParams;

    fn name(&self) -> String {
        format!("t(df={})", self.df)
    }

    fn estimate(&self, data: &PointSet) -> Result<MvTParams> {
        (self.estimator)(data, self.df)
    }

    fn standard(&self, p: usize) -> Result<MvTParams> {
        let identity = (0..p * p).map(|i| if i % (p + 1) == 0 { 1.0 } else { 0.0 }).collect();
        MvTParams::new(vec![0.0; p], identity, self.df)
    }

    fn sample(&self, params: &MvTParams, count: usize, rng: &mut StreamRng) -> PointSet {
        params.sample(count, rng)
    }
}
