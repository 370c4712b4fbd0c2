//! Distribution specs given on the command line.
//!
//! ```text
//! normal[:MEAN[:COV]]     e.g. normal, normal:1,1:2,1,1,1
//! uniform[:LO:HI]         product of U(LO, HI), default U(0, 1)
//! t:DF[:MEAN[:SCALE]]     multivariate t with DF degrees of freedom
//! ```
//!
//! `MEAN` is a comma list of length p, `COV`/`SCALE` a row-major comma list
//! of length p * p. Without them the law is standard in dimension p.

use otgof::distributions::{MvNormalParams, MvTParams, Sampler, UniformBox};
use otgof::{Error, Result};

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {t:?}")))
        })
        .collect()
}

fn identity(p: usize) -> Vec<f64> {
    (0..p * p).map(|i| if i % (p + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

fn location(parts: &[&str], at: usize, p: usize) -> Result<Vec<f64>> {
    let v = parts
        .get(at)
        .map(|s| numbers(s))
        .transpose()?
        .unwrap_or_else(|| vec![0.0; p]);
    if v.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: v.len(),
        });
    }
    Ok(v)
}

fn shape(parts: &[&str], at: usize, p: usize) -> Result<Vec<f64>> {
    let v = parts
        .get(at)
        .map(|s| numbers(s))
        .transpose()?
        .unwrap_or_else(|| identity(p));
    if v.len() != p * p {
        return Err(Error::DimensionMismatch {
            expected: p * p,
            found: v.len(),
        });
    }
    Ok(v)
}

/// Builds the sampler named by `spec` in dimension `p`.
pub fn parse_law(spec: &str, p: usize) -> Result<Box<dyn Sampler>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let arity_error = || Error::Config(format!("malformed distribution spec {spec:?}"));
    match parts[0].to_ascii_lowercase().as_str() {
        "normal" if parts.len() <= 3 => Ok(Box::new(MvNormalParams::new(
            location(&parts, 1, p)?,
            shape(&parts, 2, p)?,
        )?)),
        "uniform" => {
            let (lo, hi) = match parts.len() {
                1 => (0.0, 1.0),
                3 => (numbers(parts[1])?[0], numbers(parts[2])?[0]),
                _ => return Err(arity_error()),
            };
            Ok(Box::new(UniformBox::new(lo, hi, p)?))
        }
        "t" if (2..=4).contains(&parts.len()) => {
            let df = numbers(parts[1])?;
            if df.len() != 1 {
                return Err(arity_error());
            }
            Ok(Box::new(MvTParams::new(
                location(&parts, 2, p)?,
                shape(&parts, 3, p)?,
                df[0],
            )?))
        }
        _ => Err(arity_error()),
    }
}

/// Parametric null family for the composite test: `normal` or `t:DF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    Normal,
    Student(f64),
}

impl std::str::FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["normal"] => Ok(FamilySpec::Normal),
            ["t", df] => {
                let df = numbers(df)?[0];
                if df.is_nan() || df <= 2.0 {
                    return Err(Error::Config(format!("moment estimator needs df > 2, got {df}")));
                }
                Ok(FamilySpec::Student(df))
            }
            _ => Err(Error::Config(format!("unknown family {s:?}, expected normal or t:DF"))),
        }
    }
}
