use std::time::Instant;

use super::families::{NormalGridBase, ParametricFamily};
use super::report::TestReport;
use crate::calibration::{pipeline_statistic, NullDistribution};
use crate::distributions::Sampler;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::Kernel;
use crate::lowdisc::{Grid, GridKind};
use crate::points::PointSet;
use crate::rng::{stream, Purpose, StreamRng};

/// Draws allowed per bootstrap slot before the run is aborted.
pub const MAX_ATTEMPTS: usize = 10;

/// Smallest bootstrap size accepted.
pub const MIN_BOOTSTRAP: usize = 100;

/// Smallest warp-speed study accepted.
pub const MIN_WARP_REPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// `m` fresh draws from the fitted law.
    RandomSample,
    /// The spherical grid pushed to the fitted law (normal family only).
    GridPoints,
}

impl ReferenceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceMode::RandomSample => "random-sample",
            ReferenceMode::GridPoints => "grid-points",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositeCalibration {
    /// Parametric bootstrap with re-estimation in every replication.
    Bootstrap,
    /// Study mode: one bootstrap null at the family's standard member,
    /// shared by every data set. The statistic is affine invariant for the
    /// normal family, so this null is exact there up to Monte-Carlo error.
    Standard,
}

pub struct CompositeTestSpec<'a, F: ParametricFamily> {
    pub family: &'a F,
    pub n: usize,
    pub m: usize,
    pub grid: GridKind,
    pub kernel: Kernel,
    pub alpha: f64,
    /// Bootstrap replications `B`.
    pub reps: usize,
    pub reference: ReferenceMode,
    pub calibration: CompositeCalibration,
}

impl<F: ParametricFamily> Clone for CompositeTestSpec<'_, F> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<F: ParametricFamily> Copy for CompositeTestSpec<'_, F> {}

/// A composite test with grid and reference base built for dimension `p`.
pub struct CompositeTest<'a, F: ParametricFamily> {
    spec: CompositeTestSpec<'a, F>,
    grid: Grid,
    base: Option<NormalGridBase>,
}

impl<'a, F: ParametricFamily> CompositeTest<'a, F> {
    pub fn new(spec: CompositeTestSpec<'a, F>, p: usize) -> Result<Self> {
        if !(spec.alpha >= 0.0 && spec.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in [0, 1), got {}", spec.alpha)));
        }
        if spec.n == 0 || spec.m == 0 {
            return Err(Error::EmptyBlock);
        }
        if spec.reps < MIN_BOOTSTRAP {
            return Err(Error::Config(format!(
                "at least {MIN_BOOTSTRAP} bootstrap replications required, got {}",
                spec.reps
            )));
        }
        let grid = Grid::new(spec.grid, p, spec.n + spec.m)?;
        let base = match spec.reference {
            ReferenceMode::GridPoints => Some(NormalGridBase::new(p, spec.m)?),
            ReferenceMode::RandomSample => None,
        };
        Ok(Self { spec, grid, base })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn reference(&self, params: &F::Params, rng: &mut StreamRng) -> Result<PointSet> {
        match &self.base {
            None => Ok(self.spec.family.sample(params, self.spec.m, rng)),
            Some(base) => self.spec.family.grid_reference(params, base).ok_or_else(|| {
                Error::Config(format!(
                    "the {} family has no grid-point reference",
                    self.spec.family.name()
                ))
            }),
        }
    }

    /// Fits the family to `data`, builds the reference and evaluates `D~_{n,m}`.
    fn fitted_statistic(&self, data: PointSet, rng: &mut StreamRng) -> Result<(F::Params, f64)> {
        let params = self.spec.family.estimate(&data)?;
        let reference = self.reference(&params, rng)?;
        let d = pipeline_statistic(data, reference, &self.grid, &self.spec.kernel)?;
        Ok((params, d))
    }

    /// One bootstrap statistic for slot `slot`: sample `n` points from the
    /// fitted law, refit, rebuild the reference, evaluate. Estimation
    /// failures are retried with fresh draws up to [`MAX_ATTEMPTS`] times.
    pub fn bootstrap_statistic(&self, params: &F::Params, seed: u64, slot: usize) -> Result<f64> {
        retry(slot, |attempt| {
            let mut rng = stream(seed, Purpose::Bootstrap, attempt_index(slot, attempt));
            let xb = self.spec.family.sample(params, self.spec.n, &mut rng);
            Ok(self.fitted_statistic(xb, &mut rng)?.1)
        })
    }

    fn check_data(&self, data: &PointSet) -> Result<()> {
        if data.dim() != self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                found: data.dim(),
            });
        }
        if data.len() != self.spec.n {
            return Err(Error::CardinalityMismatch {
                left: self.spec.n,
                right: data.len(),
            });
        }
        data.ensure_finite()
    }

    /// Observed statistic and calibration distribution for `data`.
    pub fn observe(&self, data: &PointSet, seed: u64, exec: Execution) -> Result<(f64, NullDistribution)> {
        self.check_data(data)?;
        let (params, d) = self.fitted_statistic(data.clone(), &mut stream(seed, Purpose::Observed, 0))?;
        let null = match self.spec.calibration {
            CompositeCalibration::Bootstrap => {
                NullDistribution::new(exec.try_map(self.spec.reps, |b| self.bootstrap_statistic(&params, seed, b))?)
            }
            CompositeCalibration::Standard => self.standard_null(seed, exec)?,
        };
        Ok((d, null))
    }

    pub fn run(&self, data: &PointSet, seed: u64, exec: Execution) -> Result<TestReport> {
        if self.spec.alpha == 0.0 {
            return Err(Error::Config("alpha must be positive for a single test".into()));
        }
        let start = Instant::now();
        let (d, null) = self.observe(data, seed, exec)?;
        Ok(TestReport::new(
            "composite",
            d,
            null.quantile(self.spec.alpha),
            Some(null.p_value(d)),
            seed,
            self.config(),
            start.elapsed(),
        ))
    }

    /// `B` bootstrap statistics for data from the family's standard member.
    pub fn standard_null(&self, seed: u64, exec: Execution) -> Result<NullDistribution> {
        let params = self.spec.family.standard(self.grid.dim())?;
        Ok(NullDistribution::new(exec.try_map(self.spec.reps, |b| {
            self.bootstrap_statistic(&params, seed, b)
        })?))
    }

    /// Fraction of `reps` data sets from `data_law` whose statistic exceeds
    /// `critical`.
    pub fn rejection_rate_at<S: Sampler + ?Sized>(
        &self,
        data_law: &S,
        critical: f64,
        reps: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<f64> {
        let s = &self.spec;
        let rejected = exec.try_map(reps, |r| {
            let d = retry(r, |attempt| {
                let mut rng = stream(seed, Purpose::Study, attempt_index(r, attempt));
                let data = data_law.sample(s.n, &mut rng);
                Ok(self.fitted_statistic(data, &mut rng)?.1)
            })?;
            Ok::<_, Error>(d > critical)
        })?;
        Ok(rejected.iter().filter(|&&x| x).count() as f64 / reps.max(1) as f64)
    }

    fn config(&self) -> Vec<(String, String)> {
        let s = &self.spec;
        let mut c = vec![
            ("family".to_string(), s.family.name()),
            ("p".into(), self.grid.dim().to_string()),
            ("n".into(), s.n.to_string()),
            ("m".into(), s.m.to_string()),
            ("grid".into(), s.grid.to_string()),
            ("grid_size".into(), self.grid.len().to_string()),
            ("kernel".into(), s.kernel.family().to_string()),
            ("a".into(), s.kernel.scale().to_string()),
            ("gamma".into(), s.kernel.exponent().to_string()),
            ("alpha".into(), s.alpha.to_string()),
            ("reference".into(), s.reference.as_str().into()),
        ];
        match s.calibration {
            CompositeCalibration::Bootstrap => {
                c.push(("calibration".into(), "bootstrap".into()));
                c.push(("bootstrap_reps".into(), s.reps.to_string()));
            }
            CompositeCalibration::Standard => {
                c.push(("calibration".into(), "standard-bootstrap".into()));
                c.push(("bootstrap_reps".into(), s.reps.to_string()));
            }
        }
        c
    }
}

fn attempt_index(slot: usize, attempt: usize) -> u64 {
    (slot as u64) * MAX_ATTEMPTS as u64 + attempt as u64
}

fn retry<T>(slot: usize, mut f: impl FnMut(usize) -> Result<T>) -> Result<T> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        match f(attempt) {
            Err(e @ Error::Estimation(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(Error::BootstrapAbort {
        replication: slot,
        attempts: MAX_ATTEMPTS,
        source: Box::new(last.expect("at least one attempt")),
    })
}

/// Fits, bootstraps and decides in one go.
pub fn run_composite_test<F: ParametricFamily>(
    data: &PointSet,
    spec: CompositeTestSpec<'_, F>,
    seed: u64,
    exec: Execution,
) -> Result<TestReport> {
    let start = Instant::now();
    let mut report = CompositeTest::new(spec, data.dim())?.run(data, seed, exec)?;
    report.elapsed = start.elapsed();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpSpeedResult {
    pub rate: f64,
    pub critical_value: f64,
    pub observed: Vec<f64>,
    pub bootstrap: Vec<f64>,
}

/// Rejection rate by the warp-speed method: each replication draws one data
/// set from `alternative` and one bootstrap statistic from its fit; every
/// observed statistic is compared with the `(1 - alpha)` quantile of the
/// pooled bootstrap statistics. `alpha = 0` never rejects.
pub fn warp_speed_study<F: ParametricFamily, S: Sampler + ?Sized>(
    alternative: &S,
    spec: CompositeTestSpec<'_, F>,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<WarpSpeedResult> {
    if reps < MIN_WARP_REPS {
        return Err(Error::Config(format!(
            "at least {MIN_WARP_REPS} warp-speed replications required, got {reps}"
        )));
    }
    let test = CompositeTest::new(spec, alternative.dim())?;
    let pairs = exec.try_map(reps, |r| {
        let (params, d) = retry(r, |attempt| {
            let mut rng = stream(seed, Purpose::Study, attempt_index(r, attempt));
            let data = alternative.sample(spec.n, &mut rng);
            test.fitted_statistic(data, &mut rng)
        })?;
        Ok::<_, Error>((d, test.bootstrap_statistic(&params, seed, r)?))
    })?;
    let (observed, bootstrap): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let critical_value = if spec.alpha == 0.0 {
        f64::INFINITY
    } else {
        NullDistribution::new(bootstrap.clone()).quantile(spec.alpha)
    };
    let rate = observed.iter().filter(|&&d| d > critical_value).count() as f64 / reps as f64;
    Ok(WarpSpeedResult {
        rate,
        critical_value,
        observed,
        bootstrap,
    })
}
