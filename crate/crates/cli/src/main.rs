use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod laws;
mod reproduce;

/// Goodness-of-fit tests on optimal-transport ranks.
///
/// Exit status: 0 when the null is retained or the command succeeded,
/// 1 when the null is rejected, 2 on any error.
#[derive(Parser, Debug)]
#[command(name = "otgof", version)]
struct Cli {
    /// Worker threads; defaults to all available cores. Results do not
    /// depend on this setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test data against a fully specified null law.
    TestSimple(commands::SimpleArgs),
    /// Test data against a parametric family with estimated parameters.
    TestComposite(commands::CompositeArgs),
    /// Monte-Carlo critical value, stored in the critical-value table.
    Calibrate(commands::CalibrateArgs),
    /// Asymptotic critical value, stored in the critical-value table.
    Asymptotic(commands::AsymptoticArgs),
    /// Regenerate one of the simulation tables.
    Reproduce(reproduce::ReproduceArgs),
    /// Write a Halton grid as CSV.
    GridDump(commands::GridDumpArgs),
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// Grid kind: spherical or rectangular.
    #[arg(long, default_value = "spherical")]
    pub grid: otgof::GridKind,
    /// Kernel family: stable or laplace.
    #[arg(long, default_value = "stable")]
    pub kernel: otgof::KernelFamily,
    /// Kernel scale a.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Kernel exponent gamma.
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
}

impl KernelArgs {
    pub fn kernel(&self) -> otgof::Result<otgof::Kernel> {
        otgof::Kernel::new(self.kernel, self.a, self.gamma)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write the artifact here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Report layout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Record,
}

/// `$OTGOF_TABLE_DIR/critical_values.csv`, or the working directory.
pub fn default_table_path() -> PathBuf {
    let dir = std::env::var_os("OTGOF_TABLE_DIR")
        .map(PathBuf::from)
        .unwrap_or_default();
    dir.join("critical_values.csv")
}

pub enum Outcome {
    Done,
    Retain,
    Reject,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::TestSimple(a) => commands::test_simple(&a),
        Command::TestComposite(a) => commands::test_composite(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Asymptotic(a) => commands::asymptotic(&a),
        Command::Reproduce(a) => reproduce::run(&a),
        Command::GridDump(a) => commands::grid_dump(&a),
    };
    match result {
        Ok(Outcome::Done | Outcome::Retain) => ExitCode::SUCCESS,
        Ok(Outcome::Reject) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
