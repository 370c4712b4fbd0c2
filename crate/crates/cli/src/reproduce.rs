//! Regenerates the simulation tables: critical values, level and power of
//! the simple test, composite normality test with a shared bootstrap null,
//! and warp-speed level and power.
//!
//! `desk` runs a reduced design that finishes in minutes on one core;
//! `full` runs the complete design with the original replication counts.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use otgof::calibration::{asymptotic_critical_value, mc_critical_value, AsymptoticConfig};
use otgof::distributions::{MvNormalParams, MvTParams, Sampler, UniformBox};
use otgof::hypotests::{
    warp_speed_study, CompositeCalibration, CompositeTest, CompositeTestSpec, NormalFamily, NullReference,
    ReferenceMode, SimpleCalibration, SimpleTest, SimpleTestSpec,
};
use otgof::{Execution, Grid, GridKind, Kernel, Result};

use crate::commands::emit;
use crate::Outcome;

const ALPHA: f64 = 0.05;
const P: usize = 2;
const EXEC: Execution = Execution::Parallel;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// Monte-Carlo and asymptotic critical values.
    Crit,
    /// Level and power of the simple test against N(0, I).
    LevelPower,
    /// Composite normality test, random and grid references.
    Composite,
    /// Composite normality test by the warp-speed method.
    Warp,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Desk,
    Full,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub table: TableId,
    #[arg(long, value_enum, default_value_t = Budget::Desk)]
    pub budget: Budget,
    /// Restrict to these grid kinds (comma separated); composite and warp use the first.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<GridKind>,
    /// Restrict to these kernel scales.
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<f64>,
    /// Restrict to these sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Restrict to these reference sizes.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Override the number of data replications per cell.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Sizes, scales and replication counts of one run.
#[derive(Debug, Clone)]
struct Design {
    grids: Vec<GridKind>,
    scales: Vec<f64>,
    ns: Vec<usize>,
    ms: Vec<usize>,
    /// Data replications per cell (power cells of the simple test use `power_reps`).
    reps: usize,
    power_reps: usize,
    /// Replications behind each Monte-Carlo critical value.
    calibration_reps: usize,
}

fn design(id: TableId, budget: Budget) -> Design {
    use GridKind::{Rectangular, Spherical};
    let full = budget == Budget::Full;
    let half_steps = |hi: f64| {
        (1..)
            .map(|i| i as f64 * 0.5)
            .take_while(|&a| a <= hi)
            .collect::<Vec<_>>()
    };
    let ns = vec![20, 50, 80];
    let calibration_reps = if full { 10_000 } else { 2000 };
    match id {
        TableId::Crit => Design {
            grids: vec![Rectangular, Spherical],
            scales: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            ns,
            ms: vec![200, 500],
            reps: 0,
            power_reps: 0,
            calibration_reps,
        },
        TableId::LevelPower if full => Design {
            grids: vec![Rectangular, Spherical],
            scales: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            ns,
            ms: vec![200, 500],
            reps: 1000,
            power_reps: 1000,
            calibration_reps,
        },
        TableId::LevelPower => Design {
            grids: vec![Spherical],
            scales: vec![2.0],
            ns,
            ms: vec![200],
            reps: 1000,
            power_reps: 200,
            calibration_reps,
        },
        TableId::Composite => Design {
            grids: vec![Spherical],
            scales: if full { half_steps(3.5) } else { vec![2.0] },
            ns,
            ms: if full { vec![200, 1000] } else { vec![200] },
            reps: if full { 1000 } else { 500 },
            power_reps: 0,
            calibration_reps,
        },
        TableId::Warp => Design {
            grids: vec![Spherical],
            scales: if full { vec![2.0, 2.5, 3.0] } else { vec![2.0] },
            ns,
            ms: if full { vec![200, 1000] } else { vec![200] },
            reps: if full { 1000 } else { 500 },
            power_reps: 0,
            calibration_reps: 0,
        },
    }
}

fn asymptotic_config(budget: Budget, kernel: &Kernel) -> AsymptoticConfig {
    let desk = AsymptoticConfig::for_kernel(kernel);
    match budget {
        Budget::Desk => desk,
        // 8100 = 90^2 is the nearest admissible cell count to 8000.
        Budget::Full => AsymptoticConfig {
            cells: 8100,
            reps: 40_000,
            ..desk
        },
    }
}

fn restrict<T: Copy + PartialEq>(all: &mut Vec<T>, keep: &[T]) {
    if !keep.is_empty() {
        all.retain(|x| keep.contains(x));
    }
}

struct Law {
    label: &'static str,
    sampler: Box<dyn Sampler>,
}

fn law(label: &'static str) -> Law {
    let normal = |mean: [f64; 2], cov: [f64; 4]| -> Box<dyn Sampler> {
        Box::new(MvNormalParams::new(mean.to_vec(), cov.to_vec()).expect("valid covariance"))
    };
    let sampler: Box<dyn Sampler> = match label {
        "N(0,I)" => Box::new(MvNormalParams::standard(P)),
        "N(1,S21)" => normal([1.0, 1.0], [2.0, 1.0, 1.0, 1.0]),
        "N(1,S10.3)" => normal([1.0, 1.0], [10.0, 3.0, 3.0, 1.0]),
        "U(-1,1)^2" => Box::new(UniformBox::new(-1.0, 1.0, P).unwrap()),
        "U(-2,2)^2" => Box::new(UniformBox::new(-2.0, 2.0, P).unwrap()),
        "T(0,I,3)" => Box::new(MvTParams::new(vec![0.0; P], vec![1.0, 0.0, 0.0, 1.0], 3.0).unwrap()),
        other => unreachable!("unknown law {other}"),
    };
    Law { label, sampler }
}

/// Whitespace-aligned table with a `#` preamble.
struct Table {
    preamble: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for line in &self.preamble {
            let _ = writeln!(out, "# {line}");
        }
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

fn percent(rate: f64) -> String {
    format!("{:.1}", 100.0 * rate)
}

fn progress(what: &str) {
    eprintln!("otgof reproduce: {what}");
}

fn crit(d: &Design, budget: Budget, seed: u64) -> Result<Table> {
    let cfg = asymptotic_config(budget, &Kernel::gaussian(1.0)?);
    let mut header = vec!["grid".to_string(), "a".into(), "c_inf".into()];
    for &m in &d.ms {
        for &n in &d.ns {
            header.push(format!("m{m}/n{n}"));
        }
    }
    let mut rows = Vec::new();
    for &kind in &d.grids {
        for &a in &d.scales {
            progress(&format!("critical values {kind} a={a}"));
            let kernel = Kernel::gaussian(a)?;
            let cfg = asymptotic_config(budget, &kernel);
            let asym = asymptotic_critical_value(kind, P, &kernel, ALPHA, &cfg, seed, EXEC)?;
            let mut row = vec![kind.to_string(), a.to_string(), format!("{:.4}", asym.value)];
            for &m in &d.ms {
                for &n in &d.ns {
                    let grid = Grid::new(kind, P, n + m)?;
                    let e = mc_critical_value(&grid, n, m, &kernel, ALPHA, d.calibration_reps, seed, EXEC)?;
                    row.push(format!("{:.4}", e.value));
                }
            }
            rows.push(row);
        }
    }
    Ok(Table {
        preamble: vec![
            format!(
                "c_inf: asymptotic, K=max(8,4a) M={} G={} B={}",
                cfg.reference_size, cfg.cells, cfg.reps
            ),
            format!("m/n columns: Monte-Carlo, {} replications each", d.calibration_reps),
        ],
        header,
        rows,
    })
}

fn level_power(d: &Design, seed: u64) -> Result<Table> {
    let null = MvNormalParams::standard(P);
    let laws: Vec<Law> = ["N(0,I)", "U(-1,1)^2", "U(-2,2)^2", "T(0,I,3)"]
        .into_iter()
        .map(law)
        .collect();
    let mut header = vec!["law".to_string(), "m".into(), "a".into()];
    for &kind in &d.grids {
        for &n in &d.ns {
            header.push(format!("{}/n{n}", kind.as_str().chars().next().unwrap()));
        }
    }
    let mut rows = Vec::new();
    for &m in &d.ms {
        for &a in &d.scales {
            let mut cells: Vec<Vec<String>> = laws.iter().map(|_| Vec::new()).collect();
            for &kind in &d.grids {
                for &n in &d.ns {
                    progress(&format!("level/power {kind} m={m} a={a} n={n}"));
                    let spec = SimpleTestSpec {
                        null: NullReference::Sample(&null),
                        n,
                        m,
                        grid: kind,
                        kernel: Kernel::gaussian(a)?,
                        alpha: ALPHA,
                        calibration: SimpleCalibration::OnTheFly {
                            reps: d.calibration_reps,
                        },
                    };
                    let test = SimpleTest::prepare(spec, seed, EXEC)?;
                    for (i, l) in laws.iter().enumerate() {
                        let reps = if i == 0 { d.reps } else { d.power_reps };
                        cells[i].push(percent(test.rejection_rate(l.sampler.as_ref(), reps, seed, EXEC)?));
                    }
                }
            }
            for (l, c) in laws.iter().zip(cells) {
                let mut row = vec![l.label.to_string(), m.to_string(), a.to_string()];
                row.extend(c);
                rows.push(row);
            }
        }
    }
    Ok(Table {
        preamble: vec![
            "null N(0,I); rejection rates in percent; the N(0,I) rows are levels".into(),
            format!(
                "level cells: {} replications; power cells: {} replications; critical values: {} Monte-Carlo replications",
                d.reps, d.power_reps, d.calibration_reps
            ),
            "column prefix: r = rectangular grid, s = spherical grid".into(),
        ],
        header,
        rows,
    })
}

fn composite(d: &Design, seed: u64) -> Result<Table> {
    let laws: Vec<Law> = ["N(0,I)", "N(1,S21)", "U(-1,1)^2", "T(0,I,3)"]
        .into_iter()
        .map(law)
        .collect();
    let mut header = vec!["ref".to_string(), "law".into(), "m".into(), "a".into()];
    header.extend(d.ns.iter().map(|n| format!("n{n}")));
    let mut rows = Vec::new();
    for (tag, mode) in [("R", ReferenceMode::RandomSample), ("G", ReferenceMode::GridPoints)] {
        for &m in &d.ms {
            for &a in &d.scales {
                progress(&format!("composite {tag} m={m} a={a}"));
                let mut tests = Vec::new();
                let mut crit_row = vec![tag.to_string(), "critical".into(), m.to_string(), a.to_string()];
                for &n in &d.ns {
                    let spec = CompositeTestSpec {
                        family: &NormalFamily,
                        n,
                        m,
                        grid: d.grids[0],
                        kernel: Kernel::gaussian(a)?,
                        alpha: ALPHA,
                        reps: d.calibration_reps,
                        reference: mode,
                        calibration: CompositeCalibration::Standard,
                    };
                    let test = CompositeTest::new(spec, P)?;
                    let critical = test.standard_null(seed, EXEC)?.quantile(ALPHA);
                    crit_row.push(format!("{critical:.4}"));
                    tests.push((test, critical));
                }
                rows.push(crit_row);
                for l in &laws {
                    let mut row = vec![tag.to_string(), l.label.to_string(), m.to_string(), a.to_string()];
                    for (test, critical) in &tests {
                        let rate = test.rejection_rate_at(l.sampler.as_ref(), *critical, d.reps, seed, EXEC)?;
                        row.push(percent(rate));
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(Table {
        preamble: vec![
            "null family: normal, parameters estimated; rejection rates in percent".into(),
            "N(0,I) and N(1,S21) rows are levels; S21 = [[2,1],[1,1]], mean (1,1)".into(),
            format!(
                "{} data replications per cell; critical values from {} bootstrap replications at N(0,I), shared by all laws",
                d.reps, d.calibration_reps
            ),
            "critical rows give those values; ref: R = random reference sample, G = transformed grid points".into(),
        ],
        header,
        rows,
    })
}

fn warp(d: &Design, seed: u64) -> Result<Table> {
    let laws: Vec<Law> = ["N(1,S21)", "N(1,S10.3)", "U(-1,1)^2", "T(0,I,3)"]
        .into_iter()
        .map(law)
        .collect();
    let mut header = vec!["law".to_string(), "m".into(), "a".into()];
    header.extend(d.ns.iter().map(|n| format!("n{n}")));
    let mut rows = Vec::new();
    for l in &laws {
        for &m in &d.ms {
            for &a in &d.scales {
                progress(&format!("warp-speed {} m={m} a={a}", l.label));
                let mut row = vec![l.label.to_string(), m.to_string(), a.to_string()];
                for &n in &d.ns {
                    let spec = CompositeTestSpec {
                        family: &NormalFamily,
                        n,
                        m,
                        grid: d.grids[0],
                        kernel: Kernel::gaussian(a)?,
                        alpha: ALPHA,
                        reps: d.reps,
                        reference: ReferenceMode::GridPoints,
                        calibration: CompositeCalibration::Bootstrap,
                    };
                    row.push(percent(
                        warp_speed_study(l.sampler.as_ref(), spec, d.reps, seed, EXEC)?.rate,
                    ));
                }
                rows.push(row);
            }
        }
    }
    Ok(Table {
        preamble: vec![
            "null family: normal, parameters estimated; grid-point reference; rejection rates in percent".into(),
            "N(1,S21) and N(1,S10.3) rows are levels; S21 = [[2,1],[1,1]], S10.3 = [[10,3],[3,1]]".into(),
            format!("warp-speed method, {} replications per cell", d.reps),
        ],
        header,
        rows,
    })
}

pub fn run(args: &ReproduceArgs) -> Result<Outcome> {
    let mut d = design(args.table, args.budget);
    match args.table {
        TableId::Composite | TableId::Warp if !args.grid.is_empty() => d.grids = args.grid[..1].to_vec(),
        _ => restrict(&mut d.grids, &args.grid),
    }
    restrict(&mut d.scales, &args.a);
    restrict(&mut d.ns, &args.n);
    restrict(&mut d.ms, &args.m);
    if let Some(r) = args.reps {
        d.reps = r;
        d.power_reps = r;
    }
    if d.grids.is_empty() || d.scales.is_empty() || d.ns.is_empty() || d.ms.is_empty() {
        return Err(otgof::Error::Config("the filters leave no cells to compute".into()));
    }
    let mut table = match args.table {
        TableId::Crit => crit(&d, args.budget, args.seed)?,
        TableId::LevelPower => level_power(&d, args.seed)?,
        TableId::Composite => composite(&d, args.seed)?,
        TableId::Warp => warp(&d, args.seed)?,
    };
    let id = args.table.to_possible_value().unwrap();
    let budget = args.budget.to_possible_value().unwrap();
    table.preamble.insert(
        0,
        format!(
            "otgof reproduce {} budget={} seed={} p={P} alpha={ALPHA} kernel=stable gamma=2 grids={}",
            id.get_name(),
            budget.get_name(),
            args.seed,
            d.grids.iter().map(|g| g.as_str()).collect::<Vec<_>>().join(",")
        ),
    );
    emit(args.output.as_deref(), &table.render())?;
    Ok(Outcome::Done)
}
