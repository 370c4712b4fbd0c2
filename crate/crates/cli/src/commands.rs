use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use otgof::calibration::{
    asymptotic_critical_value, default_half_width, mc_critical_value, AsymptoticConfig, CriticalEntry, CriticalTable,
    InsertOutcome,
};
use otgof::csvio::read_points;
use otgof::hypotests::{
    run_composite_test, run_simple_test, CompositeCalibration, CompositeTestSpec, NormalFamily, NullReference,
    ParametricFamily, ReferenceMode, SimpleCalibration, SimpleTestSpec, StudentFamily, TestReport,
};
use otgof::{Error, Execution, Grid, PointSet, Result};

use crate::laws::{parse_law, FamilySpec};
use crate::{default_table_path, Format, KernelArgs, Outcome, OutputArgs};

#[derive(Args, Debug)]
pub struct SimpleArgs {
    /// Data CSV, one observation per row.
    #[arg(long)]
    pub data: PathBuf,
    /// The data file starts with a header row.
    #[arg(long)]
    pub header: bool,
    /// Null law to draw the reference sample from (normal, uniform:LO:HI, t:DF, ...).
    #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
    pub null: Option<String>,
    /// CSV of reference points from the null law, used as is.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Reference sample size; required with --null.
    #[arg(long, short)]
    pub m: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Critical-value table; defaults to critical_values.csv in $OTGOF_TABLE_DIR.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Simulate the critical value instead of looking it up; also gives a p-value.
    #[arg(long)]
    pub calibrate_on_the_fly: bool,
    /// Replications for on-the-fly calibration.
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CompositeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Null family: normal or t:DF.
    #[arg(long, default_value = "normal")]
    pub family: FamilySpec,
    #[arg(long, short, default_value_t = 1000)]
    pub m: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap replications B.
    #[arg(long, short = 'B', default_value_t = 1000)]
    pub bootstrap: usize,
    /// Reference sample: a random draw from the fitted law, or transformed grid points.
    #[arg(long, value_enum, default_value_t = RefMode::Random)]
    pub reference_mode: RefMode,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum RefMode {
    Random,
    Grid,
}

impl From<RefMode> for ReferenceMode {
    fn from(m: RefMode) -> Self {
        match m {
            RefMode::Random => ReferenceMode::RandomSample,
            RefMode::Grid => ReferenceMode::GridPoints,
        }
    }
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Dimension p.
    #[arg(long, short, default_value_t = 2)]
    pub p: usize,
    #[arg(long, short)]
    pub n: usize,
    #[arg(long, short)]
    pub m: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Overwrite an existing entry holding a different value.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct AsymptoticArgs {
    #[arg(long, short, default_value_t = 2)]
    pub p: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Half-width K of the frequency box; defaults to max(8, 4a).
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Grid size M standing in for the reference measure.
    #[arg(long, default_value_t = 2000)]
    pub reference_size: usize,
    /// Frequency cells G; a perfect p-th power.
    #[arg(long, default_value_t = 1600)]
    pub cells: usize,
    /// Simulated functionals B.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct GridDumpArgs {
    #[arg(long, short, default_value_t = 2)]
    pub p: usize,
    /// Number of grid points N.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value = "spherical")]
    pub grid: otgof::GridKind,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn read_csv(path: &Path, header: bool) -> Result<PointSet> {
    let file = File::open(path).map_err(|e| with_path(path, e.into()))?;
    read_points(BufReader::new(file), header).map_err(|e| with_path(path, e))
}

/// Writes `bytes` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, bytes: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| with_path(p, e.into())),
        None => {
            std::io::stdout().write_all(bytes.as_bytes())?;
            Ok(())
        }
    }
}

fn finish(report: TestReport, output: &OutputArgs) -> Result<Outcome> {
    let body = match output.format {
        Format::Text => report.to_text(false),
        Format::Record => report.to_record(false) + "\n",
    };
    emit(output.output.as_deref(), &body)?;
    if output.output.is_some() {
        eprintln!("{}: {}", report.test, report.decision());
    }
    Ok(if report.reject {
        Outcome::Reject
    } else {
        Outcome::Retain
    })
}

pub fn test_simple(args: &SimpleArgs) -> Result<Outcome> {
    let kernel = args.kernel.kernel()?;
    let data = read_csv(&args.data, args.header)?;
    let p = data.dim();
    let reference_points = args
        .reference
        .as_deref()
        .map(|r| read_csv(r, args.header))
        .transpose()?;
    let law = args.null.as_deref().map(|s| parse_law(s, p)).transpose()?;
    let (null, m, null_desc) = match (&law, &reference_points) {
        (Some(law), _) => {
            let m = args
                .m
                .ok_or_else(|| Error::Config("--m is required with --null".into()))?;
            (
                NullReference::Sample(law.as_ref()),
                m,
                args.null.clone().unwrap_or_default(),
            )
        }
        (None, Some(points)) => {
            if let Some(m) = args.m {
                if m != points.len() {
                    return Err(Error::CardinalityMismatch {
                        left: m,
                        right: points.len(),
                    });
                }
            }
            let desc = format!("file:{}", args.reference.as_ref().unwrap().display());
            (NullReference::Points(points), points.len(), desc)
        }
        (None, None) => return Err(Error::Config("one of --null or --reference is required".into())),
    };
    let table_path = args.table.clone().unwrap_or_else(default_table_path);
    let table;
    let calibration = if args.calibrate_on_the_fly {
        SimpleCalibration::OnTheFly { reps: args.reps }
    } else {
        table = CriticalTable::load(&table_path)?;
        SimpleCalibration::Table(&table)
    };
    let spec = SimpleTestSpec {
        null,
        n: data.len(),
        m,
        grid: args.kernel.grid,
        kernel,
        alpha: args.alpha,
        calibration,
    };
    let mut report = run_simple_test(&data, spec, args.seed, Execution::Parallel).map_err(|e| match e {
        Error::MissingEntry(key) => Error::MissingEntry(format!(
            "{key} in {} (run calibrate first or pass --calibrate-on-the-fly)",
            table_path.display()
        )),
        other => other,
    })?;
    report.config.push(("data".into(), args.data.display().to_string()));
    report.config.push(("null".into(), null_desc));
    if !args.calibrate_on_the_fly {
        report.config.push(("table".into(), table_path.display().to_string()));
    }
    finish(report, &args.output)
}

fn composite_with<F: ParametricFamily>(family: &F, args: &CompositeArgs, data: &PointSet) -> Result<TestReport> {
    let spec = CompositeTestSpec {
        family,
        n: data.len(),
        m: args.m,
        grid: args.kernel.grid,
        kernel: args.kernel.kernel()?,
        alpha: args.alpha,
        reps: args.bootstrap,
        reference: args.reference_mode.into(),
        calibration: CompositeCalibration::Bootstrap,
    };
    run_composite_test(data, spec, args.seed, Execution::Parallel)
}

pub fn test_composite(args: &CompositeArgs) -> Result<Outcome> {
    let data = read_csv(&args.data, args.header)?;
    let mut report = match args.family {
        FamilySpec::Normal => composite_with(&NormalFamily, args, &data)?,
        FamilySpec::Student(df) => composite_with(&StudentFamily::new(df), args, &data)?,
    };
    report.config.push(("data".into(), args.data.display().to_string()));
    finish(report, &args.output)
}

fn store(entry: CriticalEntry, path: Option<&Path>, force: bool) -> Result<Outcome> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(default_table_path);
    let mut table = CriticalTable::load(&path)?;
    let line = format!(
        "{} critical_value={} reps={} seed={}",
        entry.key, entry.value, entry.reps, entry.seed
    );
    let outcome = table.insert(entry, force)?;
    if outcome != InsertOutcome::Unchanged {
        table.save(&path)?;
    }
    let verb = match outcome {
        InsertOutcome::Added => "added",
        InsertOutcome::Unchanged => "unchanged",
        InsertOutcome::Replaced => "replaced",
    };
    println!("{line} table={} {verb}", path.display());
    Ok(Outcome::Done)
}

pub fn calibrate(args: &CalibrateArgs) -> Result<Outcome> {
    let kernel = args.kernel.kernel()?;
    let grid = Grid::new(args.kernel.grid, args.p, args.n + args.m)?;
    let entry = mc_critical_value(
        &grid,
        args.n,
        args.m,
        &kernel,
        args.alpha,
        args.reps,
        args.seed,
        Execution::Parallel,
    )?;
    store(entry, args.table.as_deref(), args.force)
}

pub fn asymptotic(args: &AsymptoticArgs) -> Result<Outcome> {
    let kernel = args.kernel.kernel()?;
    let cfg = AsymptoticConfig {
        half_width: args.half_width.unwrap_or_else(|| default_half_width(&kernel)),
        reference_size: args.reference_size,
        cells: args.cells,
        reps: args.reps,
    };
    let entry = asymptotic_critical_value(
        args.kernel.grid,
        args.p,
        &kernel,
        args.alpha,
        &cfg,
        args.seed,
        Execution::Parallel,
    )?;
    store(entry, args.table.as_deref(), args.force)
}

pub fn grid_dump(args: &GridDumpArgs) -> Result<Outcome> {
    let grid = Grid::new(args.grid, args.p, args.size)?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(Outcome::Done)
}
