//! Critical values for the simple test.
//!
//! Under the null the data ranks are a uniformly random `n`-subset of the
//! grid, whatever the data law. [`mc_null_distribution`] exploits this and
//! never solves a transport problem; [`pipeline_null_distribution`] runs the
//! full sample-pool-rank pipeline and exists to validate the shortcut.
//! [`asymptotic`] simulates the limiting Gaussian-process functional.

pub mod asymptotic;
mod table;

pub use asymptotic::{asymptotic_critical_value, default_half_width, AsymptoticConfig};
pub use table::{CriticalEntry, CriticalTable, InsertOutcome, Method, TableKey};

use rand::seq::index;

use crate::distributions::Sampler;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::Kernel;
use crate::lowdisc::Grid;
use crate::points::PointSet;
use crate::rng::{stream, Purpose};
use crate::stats::{statistic_d, GridKernel};
use crate::transport::{ranks, PooledSample};

/// Smallest replication count accepted for Monte-Carlo calibration.
pub const MIN_REPS: usize = 100;

/// 1-based rank of the order statistic used as the `(1 - alpha)` quantile of
/// `reps` values: `ceil((1 - alpha) * reps)`, clamped to `1..=reps`.
///
/// The product is nudged down by `1e-9` before rounding up so that exact
/// products such as `0.95 * 2000` are not pushed to the next rank by
/// representation error.
pub fn quantile_rank(alpha: f64, reps: usize) -> usize {
    let k = ((1.0 - alpha) * reps as f64 - 1e-9).ceil() as usize;
    k.clamp(1, reps)
}

/// Sorted sample of simulated statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    sorted: Vec<f64>,
}

impl NullDistribution {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical `(1 - alpha)` quantile; see [`quantile_rank`].
    pub fn quantile(&self, alpha: f64) -> f64 {
        self.sorted[quantile_rank(alpha, self.sorted.len()) - 1]
    }

    /// Fraction of simulated statistics at or above `observed`.
    pub fn p_value(&self, observed: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v < observed);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_mc(grid: &Grid, n: usize, m: usize, reps: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::EmptyBlock);
    }
    if n + m != grid.len() {
        return Err(Error::CardinalityMismatch {
            left: n + m,
            right: grid.len(),
        });
    }
    if reps < MIN_REPS {
        return Err(Error::Config(format!(
            "at least {MIN_REPS} replications required, got {reps}"
        )));
    }
    Ok(())
}

/// Null distribution of `D_{n,m}` from uniformly random `n`-subsets of the grid.
pub fn mc_null_distribution(
    grid: &Grid,
    n: usize,
    m: usize,
    kernel: &Kernel,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<NullDistribution> {
    check_mc(grid, n, m, reps)?;
    let gk = GridKernel::new(grid.points(), kernel);
    let size = grid.len();
    let stats = exec.map(reps, |rep| {
        let mut rng = stream(seed, Purpose::Calibration, rep as u64);
        let subset = index::sample(&mut rng, size, n).into_vec();
        gk.statistic_for_subset(&subset)
    });
    Ok(NullDistribution::new(stats))
}

/// Critical value `c_{n,m,alpha}` by the subset shortcut.
#[allow(clippy::too_many_arguments)]
pub fn mc_critical_value(
    grid: &Grid,
    n: usize,
    m: usize,
    kernel: &Kernel,
    alpha: f64,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<CriticalEntry> {
    check_alpha(alpha)?;
    let dist = mc_null_distribution(grid, n, m, kernel, reps, seed, exec)?;
    Ok(CriticalEntry {
        key: TableKey::monte_carlo(grid, n, m, kernel, alpha),
        value: dist.quantile(alpha),
        reps,
        seed,
    })
}

/// Null distribution of `D_{n,m}` from the full pipeline: draw both samples
/// from `null`, pool them (data first), rank against `grid`, evaluate.
#[allow(clippy::too_many_arguments)]
pub fn pipeline_null_distribution<S: Sampler + ?Sized>(
    null: &S,
    grid: &Grid,
    n: usize,
    m: usize,
    kernel: &Kernel,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<NullDistribution> {
    check_mc(grid, n, m, reps)?;
    if null.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: null.dim(),
        });
    }
    let stats = exec.try_map(reps, |rep| {
        let mut rng = stream(seed, Purpose::Calibration, rep as u64);
        let data = null.sample(n, &mut rng);
        let reference = null.sample(m, &mut rng);
        pipeline_statistic(data, reference, grid, kernel)
    })?;
    Ok(NullDistribution::new(stats))
}

pub(crate) fn pipeline_statistic(data: PointSet, reference: PointSet, grid: &Grid, kernel: &Kernel) -> Result<f64> {
    let pooled = PooledSample::new(data, reference)?;
    let (dr, rr) = ranks(&pooled, grid)?;
    Ok(statistic_d(&dr, &rr, kernel)?.value)
}

/// Critical value by the full pipeline.
#[allow(clippy::too_many_arguments)]
pub fn mc_critical_value_via_pipeline<S: Sampler + ?Sized>(
    null: &S,
    grid: &Grid,
    n: usize,
    m: usize,
    kernel: &Kernel,
    alpha: f64,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<CriticalEntry> {
    check_alpha(alpha)?;
    let dist = pipeline_null_distribution(null, grid, n, m, kernel, reps, seed, exec)?;
    Ok(CriticalEntry {
        key: TableKey::monte_carlo(grid, n, m, kernel, alpha),
        value: dist.quantile(alpha),
        reps,
        seed,
    })
}
