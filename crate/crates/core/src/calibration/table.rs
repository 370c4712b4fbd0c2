//! Persisted critical values.
//!
//! One CSV file holds many entries. Lookups match every key field exactly;
//! a nearby `n` or `alpha` is never substituted.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily};
use crate::lowdisc::{Grid, GridKind};

pub const TABLE_VERSION: u32 = 1;

const HEADER: [&str; 15] = [
    "version",
    "p",
    "grid",
    "grid_size",
    "kernel",
    "a",
    "gamma",
    "n",
    "m",
    "alpha",
    "method",
    "detail",
    "reps",
    "seed",
    "critical_value",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MonteCarlo,
    Asymptotic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::Asymptotic => "asymptotic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "monte-carlo" | "mc" => Ok(Method::MonteCarlo),
            "asymptotic" | "asym" => Ok(Method::Asymptotic),
            other => Err(Error::Config(format!("unknown calibration method {other:?}"))),
        }
    }
}

/// Identifies one critical value.
///
/// For Monte-Carlo entries `grid_size = n + m` and `detail` is empty. For
/// asymptotic entries `grid_size` is the reference-measure size `M`, `n` and
/// `m` are 0 and `detail` records the frequency box and cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct TableKey {
    pub p: usize,
    pub grid: GridKind,
    pub grid_size: usize,
    pub kernel: Kernel,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub method: Method,
    pub detail: String,
}

impl TableKey {
    pub fn monte_carlo(grid: &Grid, n: usize, m: usize, kernel: &Kernel, alpha: f64) -> Self {
        Self {
            p: grid.dim(),
            grid: grid.kind(),
            grid_size: grid.len(),
            kernel: *kernel,
            n,
            m,
            alpha,
            method: Method::MonteCarlo,
            detail: String::new(),
        }
    }
}

impl fmt::Display for TableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} grid={} size={} kernel={} n={} m={} alpha={} method={}",
            self.p, self.grid, self.grid_size, self.kernel, self.n, self.m, self.alpha, self.method
        )?;
        if !self.detail.is_empty() {
            write!(f, " [{}]", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalEntry {
    pub key: TableKey,
    pub value: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Added,
    Unchanged,
    Replaced,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalTable {
    entries: Vec<CriticalEntry>,
}

impl CriticalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[CriticalEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, key: &TableKey) -> Option<&CriticalEntry> {
        self.entries.iter().find(|e| &e.key == key)
    }

    /// Like [`CriticalTable::lookup`] but reports the missing key.
    pub fn require(&self, key: &TableKey) -> Result<&CriticalEntry> {
        self.lookup(key).ok_or_else(|| Error::MissingEntry(key.to_string()))
    }

    /// Adds `entry`. An existing entry with the same key and a different
    /// value is only replaced when `force` is set.
    pub fn insert(&mut self, entry: CriticalEntry, force: bool) -> Result<InsertOutcome> {
        match self.entries.iter_mut().find(|e| e.key == entry.key) {
            None => {
                self.entries.push(entry);
                Ok(InsertOutcome::Added)
            }
            Some(old) if *old == entry => Ok(InsertOutcome::Unchanged),
            Some(old) if force => {
                *old = entry;
                Ok(InsertOutcome::Replaced)
            }
            Some(old) => Err(Error::KeyClash {
                key: entry.key.to_string(),
                existing: old.value,
                new: entry.value,
            }),
        }
    }

    /// Reads a table; a missing file gives an empty table.
    pub fn load(path: &Path) -> Result<Self> {
        match fs::File::open(path) {
            Ok(f) => Self::read(f),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn read<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected table header {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            entries.push(parse_row(&rec).map_err(|message| Error::Parse { line, message })?);
        }
        Ok(Self { entries })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for e in &self.entries {
            let k = &e.key;
            w.write_record([
                TABLE_VERSION.to_string(),
                k.p.to_string(),
                k.grid.to_string(),
                k.grid_size.to_string(),
                k.kernel.family().to_string(),
                k.kernel.scale().to_string(),
                k.kernel.exponent().to_string(),
                k.n.to_string(),
                k.m.to_string(),
                k.alpha.to_string(),
                k.method.to_string(),
                k.detail.clone(),
                e.reps.to_string(),
                e.seed.to_string(),
                e.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes to a sibling temporary file and renames it over `path`, so a
    /// crash never leaves a half-written table behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        fs::create_dir_all(dir)?;
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "table.csv".into());
        let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
        {
            let f = fs::File::create(&tmp)?;
            let mut buf = std::io::BufWriter::new(f);
            self.write(&mut buf)?;
            buf.flush()?;
            buf.get_ref().sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
    let raw = rec.get(i).ok_or_else(|| format!("missing column {}", HEADER[i]))?;
    raw.parse()
        .map_err(|_| format!("bad value {raw:?} in column {}", HEADER[i]))
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<CriticalEntry, String> {
    if rec.len() != HEADER.len() {
        return Err(format!("expected {} columns, found {}", HEADER.len(), rec.len()));
    }
    let version: u32 = field(rec, 0)?;
    if version != TABLE_VERSION {
        return Err(format!("unsupported table version {version}"));
    }
    let family: KernelFamily = field(rec, 4)?;
    let kernel = Kernel::new(family, field(rec, 5)?, field(rec, 6)?).map_err(|e| e.to_string())?;
    Ok(CriticalEntry {
        key: TableKey {
            p: field(rec, 1)?,
            grid: field(rec, 2)?,
            grid_size: field(rec, 3)?,
            kernel,
            n: field(rec, 7)?,
            m: field(rec, 8)?,
            alpha: field(rec, 9)?,
            method: field(rec, 10)?,
            detail: rec[11].to_string(),
        },
        reps: field(rec, 12)?,
        seed: field(rec, 13)?,
        value: field(rec, 14)?,
    })
}
