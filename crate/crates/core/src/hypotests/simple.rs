use std::time::Instant;

use super::report::TestReport;
use crate::calibration::{check_alpha, mc_null_distribution, pipeline_statistic, CriticalTable, TableKey};
use crate::distributions::Sampler;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::Kernel;
use crate::lowdisc::{Grid, GridKind};
use crate::points::PointSet;
use crate::rng::{stream, Purpose};

/// Where the artificial reference sample comes from.
#[derive(Clone, Copy)]
pub enum NullReference<'a> {
    /// Fresh draw of `m` points from `F_0` for every run.
    Sample(&'a dyn Sampler),
    /// A fixed set of `m` points, used as is.
    Points(&'a PointSet),
}

impl NullReference<'_> {
    fn dim(&self) -> usize {
        match self {
            NullReference::Sample(s) => s.dim(),
            NullReference::Points(p) => p.dim(),
        }
    }
}

#[derive(Clone, Copy)]
pub enum SimpleCalibration<'a> {
    /// Exact-key lookup; a missing entry is an error.
    Table(&'a CriticalTable),
    /// Monte-Carlo calibration at run time; also yields a p-value.
    OnTheFly { reps: usize },
}

#[derive(Clone, Copy)]
pub struct SimpleTestSpec<'a> {
    pub null: NullReference<'a>,
    pub n: usize,
    pub m: usize,
    pub grid: GridKind,
    pub kernel: Kernel,
    pub alpha: f64,
    pub calibration: SimpleCalibration<'a>,
}

/// A simple test with its grid and critical value fixed, ready to be applied
/// to many data sets.
pub struct SimpleTest<'a> {
    spec: SimpleTestSpec<'a>,
    grid: Grid,
    critical: f64,
    null_values: Option<crate::calibration::NullDistribution>,
    calibration_seed: u64,
}

impl<'a> SimpleTest<'a> {
    /// Builds the grid and resolves the critical value. On-the-fly
    /// calibration draws from the `Calibration` streams of `seed`.
    pub fn prepare(spec: SimpleTestSpec<'a>, seed: u64, exec: Execution) -> Result<Self> {
        check_alpha(spec.alpha)?;
        if spec.n == 0 || spec.m == 0 {
            return Err(Error::EmptyBlock);
        }
        if let NullReference::Points(p) = spec.null {
            if p.len() != spec.m {
                return Err(Error::CardinalityMismatch {
                    left: spec.m,
                    right: p.len(),
                });
            }
            p.ensure_finite()?;
        }
        let grid = Grid::new(spec.grid, spec.null.dim(), spec.n + spec.m)?;
        let (critical, null_values) = match spec.calibration {
            SimpleCalibration::Table(table) => {
                let key = TableKey::monte_carlo(&grid, spec.n, spec.m, &spec.kernel, spec.alpha);
                (table.require(&key)?.value, None)
            }
            SimpleCalibration::OnTheFly { reps } => {
                let dist = mc_null_distribution(&grid, spec.n, spec.m, &spec.kernel, reps, seed, exec)?;
                (dist.quantile(spec.alpha), Some(dist))
            }
        };
        Ok(Self {
            spec,
            grid,
            critical,
            null_values,
            calibration_seed: seed,
        })
    }

    pub fn critical_value(&self) -> f64 {
        self.critical
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `D_{n,m}` for `data` against a reference drawn from stream `index` of `seed`.
    pub fn statistic(&self, data: &PointSet, seed: u64, index: u64) -> Result<f64> {
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
        data.ensure_finite()?;
        let reference = match self.spec.null {
            NullReference::Sample(s) => s.sample(self.spec.m, &mut stream(seed, Purpose::Observed, index)),
            NullReference::Points(p) => p.clone(),
        };
        pipeline_statistic(data.clone(), reference, &self.grid, &self.spec.kernel)
    }

    pub fn run(&self, data: &PointSet, seed: u64) -> Result<TestReport> {
        let start = Instant::now();
        let d = self.statistic(data, seed, 0)?;
        let p_value = self.null_values.as_ref().map(|dist| dist.p_value(d));
        Ok(TestReport::new(
            "simple",
            d,
            self.critical,
            p_value,
            seed,
            self.config(),
            start.elapsed(),
        ))
    }

    /// Fraction of `reps` data sets from `data_law` that are rejected.
    /// Data set `r` comes from `Study` stream `r`, its reference from
    /// `Observed` stream `r`.
    pub fn rejection_rate<S: Sampler + ?Sized>(
        &self,
        data_law: &S,
        reps: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<f64> {
        let rejections = exec.try_map(reps, |r| {
            let data = data_law.sample(self.spec.n, &mut stream(seed, Purpose::Study, r as u64));
            Ok::<_, Error>(self.statistic(&data, seed, r as u64)? > self.critical)
        })?;
        Ok(rejections.iter().filter(|&&x| x).count() as f64 / reps.max(1) as f64)
    }

    /// p-values of `reps` data sets from `data_law`; needs on-the-fly calibration.
    pub fn p_values<S: Sampler + ?Sized>(
        &self,
        data_law: &S,
        reps: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Vec<f64>> {
        let dist = self
            .null_values
            .as_ref()
            .ok_or_else(|| Error::Config("p-values need on-the-fly calibration".into()))?;
        exec.try_map(reps, |r| {
            let data = data_law.sample(self.spec.n, &mut stream(seed, Purpose::Study, r as u64));
            Ok(dist.p_value(self.statistic(&data, seed, r as u64)?))
        })
    }

    fn config(&self) -> Vec<(String, String)> {
        let s = &self.spec;
        let mut c = vec![
            ("p".to_string(), self.grid.dim().to_string()),
            ("n".into(), s.n.to_string()),
            ("m".into(), s.m.to_string()),
            ("grid".into(), s.grid.to_string()),
            ("grid_size".into(), self.grid.len().to_string()),
            ("kernel".into(), s.kernel.family().to_string()),
            ("a".into(), s.kernel.scale().to_string()),
            ("gamma".into(), s.kernel.exponent().to_string()),
            ("alpha".into(), s.alpha.to_string()),
            (
                "reference".into(),
                match s.null {
                    NullReference::Sample(_) => "sample",
                    NullReference::Points(_) => "points",
                }
                .into(),
            ),
        ];
        match s.calibration {
            SimpleCalibration::Table(_) => c.push(("calibration".into(), "table".into())),
            SimpleCalibration::OnTheFly { reps } => {
                c.push(("calibration".into(), "on-the-fly".into()));
                c.push(("calibration_reps".into(), reps.to_string()));
                c.push(("calibration_seed".into(), self.calibration_seed.to_string()));
            }
        }
        c
    }
}

/// Prepares and runs a simple test in one go.
pub fn run_simple_test(data: &PointSet, spec: SimpleTestSpec<'_>, seed: u64, exec: Execution) -> Result<TestReport> {
    let start = Instant::now();
    let test = SimpleTest::prepare(spec, seed, exec)?;
    let mut report = test.run(data, seed)?;
    report.elapsed = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{mc_critical_value, InsertOutcome};
    use crate::distributions::{sample_mvnormal, MvNormalParams, UniformBox};
    use crate::ks;

    fn spec<'a>(null: &'a dyn Sampler, calibration: SimpleCalibration<'a>) -> SimpleTestSpec<'a> {
        SimpleTestSpec {
            null: NullReference::Sample(null),
            n: 20,
            m: 80,
            grid: GridKind::Spherical,
            kernel: Kernel::gaussian(2.0).unwrap(),
            alpha: 0.05,
            calibration,
        }
    }

    #[test]
    fn table_and_on_the_fly_agree() {
        let null = MvNormalParams::standard(2);
        let on_the_fly = spec(&null, SimpleCalibration::OnTheFly { reps: 500 });
        let data = sample_mvnormal(&null, 20, 4);
        let a = run_simple_test(&data, on_the_fly, 9, Execution::Parallel).unwrap();

        let grid = Grid::new(GridKind::Spherical, 2, 100).unwrap();
        let entry = mc_critical_value(&grid, 20, 80, &on_the_fly.kernel, 0.05, 500, 9, Execution::Sequential).unwrap();
        let mut table = CriticalTable::new();
        assert_eq!(table.insert(entry, false).unwrap(), InsertOutcome::Added);
        let b = run_simple_test(
            &data,
            spec(&null, SimpleCalibration::Table(&table)),
            9,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.critical_value, b.critical_value);
        assert_eq!(a.reject, b.reject);
        assert!(b.p_value.is_none());
        let p = a.p_value.unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(
            a.to_record(false),
            run_simple_test(&data, on_the_fly, 9, Execution::Sequential)
                .unwrap()
                .to_record(false)
        );
    }

    #[test]
    fn errors() {
        let null = MvNormalParams::standard(2);
        let empty = CriticalTable::new();
        let data = sample_mvnormal(&null, 20, 4);
        assert!(matches!(
            run_simple_test(
                &data,
                spec(&null, SimpleCalibration::Table(&empty)),
                1,
                Execution::Sequential
            ),
            Err(Error::MissingEntry(_))
        ));
        let test = SimpleTest::prepare(
            spec(&null, SimpleCalibration::OnTheFly { reps: 200 }),
            1,
            Execution::Sequential,
        )
        .unwrap();
        let mut bad = data.clone();
        bad.row_mut(3)[1] = f64::NAN;
        assert!(matches!(test.run(&bad, 1), Err(Error::NonFinite { .. })));
        assert!(test.run(&sample_mvnormal(&null, 19, 4), 1).is_err());
        assert!(test.run(&PointSet::new(3, vec![0.0; 60]).unwrap(), 1).is_err());
    }

    #[test]
    fn statistic_ignores_row_order() {
        let null = MvNormalParams::standard(2);
        let test = SimpleTest::prepare(
            spec(&null, SimpleCalibration::OnTheFly { reps: 200 }),
            1,
            Execution::Sequential,
        )
        .unwrap();
        let data = sample_mvnormal(&null, 20, 4);
        let order: Vec<usize> = (0..20).rev().collect();
        let a = test.statistic(&data, 3, 0).unwrap();
        let b = test.statistic(&data.select(&order), 3, 0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn fixed_reference_points() {
        let null = MvNormalParams::standard(2);
        let reference = sample_mvnormal(&null, 80, 5);
        let s = SimpleTestSpec {
            null: NullReference::Points(&reference),
            ..spec(&null, SimpleCalibration::OnTheFly { reps: 200 })
        };
        let data = sample_mvnormal(&null, 20, 4);
        let a = run_simple_test(&data, s, 1, Execution::Sequential).unwrap();
        let b = run_simple_test(&data, s, 2, Execution::Sequential).unwrap();
        assert_eq!(a.statistic, b.statistic);
        let short = sample_mvnormal(&null, 79, 5);
        let s2 = SimpleTestSpec {
            null: NullReference::Points(&short),
            ..s
        };
        assert!(SimpleTest::prepare(s2, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn level_is_distribution_free_and_p_values_uniform() {
        let normal = MvNormalParams::standard(2);
        let uniform = UniformBox::new(0.0, 1.0, 2).unwrap();
        let cal = SimpleCalibration::OnTheFly { reps: 4000 };
        let e = Execution::Parallel;
        let normal_test = SimpleTest::prepare(spec(&normal, cal), 11, e).unwrap();
        let uniform_test = SimpleTest::prepare(spec(&uniform, cal), 11, e).unwrap();
        let l1 = normal_test.rejection_rate(&normal, 1000, 12, e).unwrap();
        let l2 = uniform_test.rejection_rate(&uniform, 1000, 12, e).unwrap();
        assert!((l1 - 0.05).abs() <= 0.015, "level under normal {l1}");
        assert!((l2 - 0.05).abs() <= 0.015, "level under uniform {l2}");

        let p = normal_test.p_values(&normal, 500, 14, e).unwrap();
        assert!(ks::one_sample(&p, |x| x.clamp(0.0, 1.0)) < ks::critical_value_one_sample(0.05, 500));
    }
}
