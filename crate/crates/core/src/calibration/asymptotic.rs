//! Limiting null law of `D_{n,m}` when both sample sizes grow.
//!
//! The limit is `int Z(t)^2 w(t) dt` for a centred Gaussian process `Z` with
//! covariance `Cov(cos t.Y + sin t.Y, cos s.Y + sin s.Y)`, `Y` uniform on the
//! reference measure. The integral is truncated to `[-K, K]^p`, split into
//! `G` equal cells and evaluated at the cell centres; the reference measure
//! is approximated by a Halton grid of `M` points.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_alpha, CriticalEntry, Method, NullDistribution, TableKey};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::Kernel;
use crate::lowdisc::{Grid, GridKind};
use crate::points::PointSet;
use crate::rng::{stream, Purpose};

/// Relative eigenvalue floor below which the covariance is declared indefinite.
const NEGATIVE_TOLERANCE: f64 = 1e-8;
/// Relative eigenvalue cut below which directions are dropped from the factor.
const RANK_CUT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConfig {
    /// Half-width `K` of the frequency box.
    pub half_width: f64,
    /// Size `M` of the grid standing in for the reference measure.
    pub reference_size: usize,
    /// Number of cells `G`; must be a perfect `p`-th power.
    pub cells: usize,
    /// Number of simulated functionals `B`.
    pub reps: usize,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            reference_size: 2000,
            cells: 1600,
            reps: 10_000,
        }
    }
}

impl AsymptoticConfig {
    /// Defaults with the half-width widened to [`default_half_width`].
    pub fn for_kernel(kernel: &Kernel) -> Self {
        Self {
            half_width: default_half_width(kernel),
            ..Self::default()
        }
    }

    pub fn detail(&self) -> String {
        format!("K={};G={}", self.half_width, self.cells)
    }

    fn cells_per_axis(&self, p: usize) -> Result<usize> {
        let c = (self.cells as f64).powf(1.0 / p as f64).round() as usize;
        if c == 0 || c.checked_pow(p as u32) != Some(self.cells) {
            return Err(Error::Config(format!(
                "cell count {} is not a perfect {p}-th power",
                self.cells
            )));
        }
        Ok(c)
    }
}

/// `max(8, 4 a)`. The Gaussian weight has standard deviation `a sqrt(2)` per
/// axis, so the box keeps at least `2 sqrt(2)` of them for every `a`; a fixed
/// `K = 8` drops about 12% of the weight mass at `a = 3` and 29% at `a = 4`,
/// which biases the simulated quantile down by about the same fraction.
pub fn default_half_width(kernel: &Kernel) -> f64 {
    (4.0 * kernel.scale()).max(8.0)
}

/// Discretised covariance and its factorisation, ready for simulation.
#[derive(Debug, Clone)]
pub struct AsymptoticPlan {
    frequencies: PointSet,
    /// `w(t_i) * cell volume`.
    weights: Vec<f64>,
    covariance: DMatrix<f64>,
    /// Retained eigenvectors (columns) and square roots of their eigenvalues.
    vectors: DMatrix<f64>,
    root_values: DVector<f64>,
}

impl AsymptoticPlan {
    pub fn new(kind: GridKind, p: usize, kernel: &Kernel, cfg: &AsymptoticConfig) -> Result<Self> {
        if !(cfg.half_width.is_finite() && cfg.half_width > 0.0) {
            return Err(Error::Config("frequency box half-width must be positive".into()));
        }
        if cfg.reference_size < 2 {
            return Err(Error::Config("reference grid needs at least 2 points".into()));
        }
        let per_axis = cfg.cells_per_axis(p)?;
        let frequencies = cell_centres(p, per_axis, cfg.half_width);
        let volume = (2.0 * cfg.half_width / per_axis as f64).powi(p as i32);
        let weights = frequencies
            .rows()
            .map(|t| kernel.weight_density(t).map(|w| w * volume))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| {
                Error::Config(format!(
                    "no closed-form weight density for {kernel}; asymptotic calibration supports stable kernels with gamma 1 or 2"
                ))
            })?;

        let reference = Grid::new(kind, p, cfg.reference_size)?;
        let covariance = covariance(reference.points(), &frequencies);
        let eig = SymmetricEigen::new(covariance.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min < -NEGATIVE_TOLERANCE * max {
            return Err(Error::Factorization {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > RANK_CUT * max)
            .collect();
        let vectors = eig.eigenvectors.select_columns(&keep);
        let root_values = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i].sqrt()));
        Ok(Self {
            frequencies,
            weights,
            covariance,
            vectors,
            root_values,
        })
    }

    pub fn frequencies(&self) -> &PointSet {
        &self.frequencies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn rank(&self) -> usize {
        self.root_values.len()
    }

    /// One draw of the discretised functional. `Z = R^{1/2} xi` with the
    /// symmetric root `V L^{1/2} V^T` restricted to the retained directions.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let g = self.weights.len();
        let xi = DVector::from_iterator(g, (0..g).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut coeffs = self.vectors.tr_mul(&xi);
        coeffs.component_mul_assign(&self.root_values);
        let z = &self.vectors * coeffs;
        z.iter().zip(&self.weights).map(|(zi, w)| zi * zi * w).sum()
    }

    pub fn simulate(&self, reps: usize, seed: u64, exec: Execution) -> NullDistribution {
        NullDistribution::new(exec.map(reps, |rep| {
            let mut rng = stream(seed, Purpose::Asymptotic, rep as u64);
            self.draw(&mut rng)
        }))
    }
}

/// Centres of the `per_axis^p` equal cells of `[-k, k]^p`, first axis fastest.
fn cell_centres(p: usize, per_axis: usize, k: f64) -> PointSet {
    let width = 2.0 * k / per_axis as f64;
    let total = per_axis.pow(p as u32);
    let mut data = Vec::with_capacity(total * p);
    for mut idx in 0..total {
        for _ in 0..p {
            data.push(-k + width * ((idx % per_axis) as f64 + 0.5));
            idx /= per_axis;
        }
    }
    PointSet::new(p, data).expect("cell centres are well formed")
}

/// Covariance of `cos t.Y + sin t.Y` over the frequencies, `Y` uniform on `reference`.
pub fn covariance(reference: &PointSet, frequencies: &PointSet) -> DMatrix<f64> {
    let mm = reference.len();
    let g = frequencies.len();
    let mut a = DMatrix::<f64>::zeros(mm, g);
    for (i, t) in frequencies.rows().enumerate() {
        let mut col = a.column_mut(i);
        for (j, y) in reference.rows().enumerate() {
            let (s, c) = t.iter().zip(y).map(|(u, v)| u * v).sum::<f64>().sin_cos();
            col[j] = c + s;
        }
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let mut r = a.tr_mul(&a);
    r /= mm as f64;
    r
}

pub fn asymptotic_null_distribution(
    kind: GridKind,
    p: usize,
    kernel: &Kernel,
    cfg: &AsymptoticConfig,
    seed: u64,
    exec: Execution,
) -> Result<NullDistribution> {
    if cfg.reps < super::MIN_REPS {
        return Err(Error::Config(format!(
            "at least {} replications required, got {}",
            super::MIN_REPS,
            cfg.reps
        )));
    }
    let plan = AsymptoticPlan::new(kind, p, kernel, cfg)?;
    Ok(plan.simulate(cfg.reps, seed, exec))
}

/// Limiting critical value `c_{infinity,alpha}`.
pub fn asymptotic_critical_value(
    kind: GridKind,
    p: usize,
    kernel: &Kernel,
    alpha: f64,
    cfg: &AsymptoticConfig,
    seed: u64,
    exec: Execution,
) -> Result<CriticalEntry> {
    check_alpha(alpha)?;
    let dist = asymptotic_null_distribution(kind, p, kernel, cfg, seed, exec)?;
    Ok(CriticalEntry {
        key: TableKey {
            p,
            grid: kind,
            grid_size: cfg.reference_size,
            kernel: *kernel,
            n: 0,
            m: 0,
            alpha,
            method: Method::Asymptotic,
            detail: cfg.detail(),
        },
        value: dist.quantile(alpha),
        reps: cfg.reps,
        seed,
    })
}
