//! Halton sequences and the two reference grids used for multivariate ranks.
//!
//! A [`GridKind::Rectangular`] grid is the Halton sequence itself and targets
//! the uniform law on the unit cube. A [`GridKind::Spherical`] grid places
//! point `i` at `x_{i,1} * tau(x_{i,2}, ..., x_{i,p})`, where `tau` pushes the
//! uniform law on `[0,1]^{p-1}` to the uniform law on the unit sphere, so the
//! grid targets the spherically uniform law on the unit ball.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::points::PointSet;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Largest dimension for which Halton bases are tabulated.
pub const MAX_DIM: usize = PRIMES.len();

/// Mirrors the base-`base` digits of `index` across the radix point.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    debug_assert!(base >= 2);
    let b = u64::from(base);
    let inv_base = 1.0 / f64::from(base);
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % b) as f64 * scale;
        index /= b;
        scale *= inv_base;
    }
    value
}

/// Halton sequence in `[0,1]^p` using the first `p` primes as bases.
#[derive(Debug, Clone)]
pub struct HaltonSequence {
    bases: Vec<u32>,
    next: u64,
}

impl HaltonSequence {
    /// Sequence starting at index 1, which skips the all-zeros point.
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_start(dim, 1)
    }

    pub fn with_start(dim: usize, start: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Config(format!(
                "Halton dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if start == 0 {
            return Err(Error::Config("Halton start index must be positive".into()));
        }
        Ok(Self {
            bases: PRIMES[..dim].to_vec(),
            next: start,
        })
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.bases.iter().map(|&b| radical_inverse(index, b)).collect()
    }
}

impl Iterator for HaltonSequence {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let point = self.point(self.next);
        self.next += 1;
        Some(point)
    }
}

/// Maps `u` in `[0,1]^{p-1}` to the unit sphere in `R^p`, `p = u.len() + 1`.
///
/// Uses inverse-CDF spherical coordinates: the last coordinate `z` is drawn
/// from its marginal (`(1 + z) / 2 ~ Beta((p-1)/2, (p-1)/2)`) via `u[0]`, and the
/// remaining coordinates are `sqrt(1 - z^2)` times the map of `u[1..]` one
/// dimension lower. The recursion bottoms out at the circle,
/// `(cos 2*pi*u, sin 2*pi*u)`. For `p = 3` this is `z = 1 - 2 u[0]` with
/// azimuth `2*pi*u[1]`.
pub fn sphere_map(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::Config("sphere map needs dimension at least 2".into()));
    }
    if let Some(bad) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Config(format!("sphere map coordinate {bad} outside [0, 1]")));
    }
    let mut out = vec![0.0; u.len() + 1];
    fill_sphere(u, &mut out);
    Ok(out)
}

fn fill_sphere(u: &[f64], out: &mut [f64]) {
    let p = out.len();
    if p == 2 {
        let angle = 2.0 * PI * u[0];
        out[0] = angle.cos();
        out[1] = angle.sin();
        return;
    }
    let z = 1.0 - 2.0 * polar_quantile(u[0], p);
    let radius = (1.0 - z * z).max(0.0).sqrt();
    let (head, last) = out.split_at_mut(p - 1);
    fill_sphere(&u[1..], head);
    head.iter_mut().for_each(|x| *x *= radius);
    last[0] = z;
}

/// Quantile of `(1 + z) / 2` where `z` is one coordinate of a uniform point
/// on the sphere in `R^p`.
fn polar_quantile(u: f64, p: usize) -> f64 {
    if p == 3 {
        return u;
    }
    if u <= 0.0 || u >= 1.0 {
        return u;
    }
    let shape = (p as f64 - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(shape, shape, mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    Rectangular,
    Spherical,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::Rectangular => "rectangular",
            GridKind::Spherical => "spherical",
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "r" => Ok(GridKind::Rectangular),
            "spherical" | "sph" | "s" => Ok(GridKind::Spherical),
            other => Err(Error::Config(format!("unknown grid kind {other:?}"))),
        }
    }
}

/// An ordered set of reference points in the support of the reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    points: PointSet,
}

impl Grid {
    pub fn new(kind: GridKind, dim: usize, size: usize) -> Result<Self> {
        match kind {
            GridKind::Rectangular => rectangular_grid(dim, size),
            GridKind::Spherical => spherical_grid(dim, size),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// Writes the grid as CSV: a `#` comment echoing the configuration, a
    /// header `x1,...,xp`, then one point per row in shortest round-trip
    /// decimal form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# grid kind={} dim={} size={} halton_start=1",
            self.kind,
            self.dim(),
            self.len()
        )?;
        write_points_csv(&self.points, &mut out)?;
        Ok(())
    }
}

/// Writes `points` with an `x1,...,xp` header and round-trip decimal values.
pub fn write_points_csv<W: Write>(points: &PointSet, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=points.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in points.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// First `size` Halton points in `(0,1)^dim`.
pub fn rectangular_grid(dim: usize, size: usize) -> Result<Grid> {
    if size == 0 {
        return Err(Error::Config("grid size must be positive".into()));
    }
    let halton = HaltonSequence::new(dim)?;
    let mut data = Vec::with_capacity(dim * size);
    for point in halton.take(size) {
        data.extend(point);
    }
    Ok(Grid {
        kind: GridKind::Rectangular,
        points: PointSet::new(dim, data)?,
    })
}

/// Halton-driven grid in the open unit ball: radius from the first Halton
/// coordinate, direction from the sphere map of the rest.
pub fn spherical_grid(dim: usize, size: usize) -> Result<Grid> {
    if dim < 2 {
        return Err(Error::Config("spherical grid needs dimension at least 2".into()));
    }
    if size == 0 {
        return Err(Error::Config("grid size must be positive".into()));
    }
    let halton = HaltonSequence::new(dim)?;
    let mut data = Vec::with_capacity(dim * size);
    let mut direction = vec![0.0; dim];
    for x in halton.take(size) {
        fill_sphere(&x[1..], &mut direction);
        data.extend(direction.iter().map(|s| x[0] * s));
    }
    Ok(Grid {
        kind: GridKind::Spherical,
        points: PointSet::new(dim, data)?,
    })
}
