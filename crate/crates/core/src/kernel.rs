//! Weight kernels `C_w`, the characteristic functions of spherical weight laws.

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `exp(-||a x||^gamma)`, `0 < gamma <= 2`: CF of a spherical stable law.
    Stable,
    /// `(1 + ||a x||^2)^(-gamma)`, `gamma > 0`: CF of a generalized spherical Laplace law.
    Laplace,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Stable => "stable",
            KernelFamily::Laplace => "laplace",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stable" => Ok(KernelFamily::Stable),
            "laplace" => Ok(KernelFamily::Laplace),
            other => Err(Error::Config(format!("unknown kernel family {other:?}"))),
        }
    }
}

/// A validated kernel `C_{a,gamma}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    scale: f64,
    exponent: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, scale: f64, exponent: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("kernel scale must be positive, got {scale}")));
        }
        let ok = match family {
            KernelFamily::Stable => exponent > 0.0 && exponent <= 2.0,
            KernelFamily::Laplace => exponent.is_finite() && exponent > 0.0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "exponent {exponent} out of range for {family} kernel"
            )));
        }
        Ok(Self {
            family,
            scale,
            exponent,
        })
    }

    /// `exp(-a^2 ||x||^2)`, the kernel used throughout the simulation tables.
    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Stable, scale, 2.0)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_sq_norm(x.iter().map(|v| v * v).sum())
    }

    /// Kernel value at a point whose squared norm is `r2`.
    #[inline]
    pub fn eval_sq_norm(&self, r2: f64) -> f64 {
        let s2 = self.scale * self.scale * r2;
        match self.family {
            KernelFamily::Stable if self.exponent == 2.0 => (-s2).exp(),
            KernelFamily::Stable if self.exponent == 1.0 => (-s2.sqrt()).exp(),
            KernelFamily::Stable => (-s2.powf(0.5 * self.exponent)).exp(),
            KernelFamily::Laplace => (1.0 + s2).powf(-self.exponent),
        }
    }

    /// Density `w` of the weight law whose characteristic function is this
    /// kernel, where it has a closed form: Gaussian for stable `gamma = 2`,
    /// multivariate Cauchy for stable `gamma = 1`.
    pub fn weight_density(&self, t: &[f64]) -> Option<f64> {
        let p = t.len() as f64;
        let r2: f64 = t.iter().map(|v| v * v).sum();
        let a = self.scale;
        match self.family {
            KernelFamily::Stable if self.exponent == 2.0 => {
                // N(0, 2 a^2 I) has CF exp(-a^2 ||x||^2).
                let var2 = 4.0 * a * a;
                Some((std::f64::consts::PI * var2).powf(-0.5 * p) * (-r2 / var2).exp())
            }
            KernelFamily::Stable if self.exponent == 1.0 => {
                let half = 0.5 * (p + 1.0);
                let log_norm = ln_gamma(half) - half * std::f64::consts::PI.ln();
                Some(log_norm.exp() * a / (a * a + r2).powf(half))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(a={}, gamma={})", self.family, self.scale, self.exponent)
    }
}
