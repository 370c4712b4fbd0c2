//! Two-sample statistics on rank vectors.
//!
//! `D_{n,m}` is the weighted `L^2` distance between the empirical
//! characteristic functions of the data ranks and the reference ranks,
//! scaled by `nm / (n + m)`. With `C_w` the kernel it reduces to
//!
//! ```text
//! D = m/(n N) sum_{j,k} C(R_j - R_k) + n/(m N) sum_{j,k} C(R0_j - R0_k)
//!     - 2/N sum_{j,k} C(R_j - R0_k),        N = n + m
//! ```

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::points::{sq_dist, PointSet};

/// Value of `D_{n,m}` together with the configuration that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    pub n: usize,
    pub m: usize,
    pub kernel: Kernel,
}

fn check_blocks(data: &PointSet, reference: &PointSet) -> Result<()> {
    if data.is_empty() || reference.is_empty() {
        return Err(Error::EmptyBlock);
    }
    if data.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: reference.dim(),
        });
    }
    Ok(())
}

/// Sum of `f(||x_j - x_k||^2)` over all ordered pairs, diagonal included.
fn within_sum(block: &PointSet, diagonal: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut off = 0.0;
    for j in 0..block.len() {
        let rj = block.row(j);
        for k in (j + 1)..block.len() {
            off += f(sq_dist(rj, block.row(k)));
        }
    }
    block.len() as f64 * diagonal + 2.0 * off
}

fn cross_sum(a: &PointSet, b: &PointSet, f: impl Fn(f64) -> f64) -> f64 {
    a.rows()
        .map(|ra| b.rows().map(|rb| f(sq_dist(ra, rb))).sum::<f64>())
        .sum()
}

fn combine(n: f64, m: f64, within_data: f64, within_ref: f64, cross: f64) -> f64 {
    let total = n + m;
    m / (n * total) * within_data + n / (m * total) * within_ref - 2.0 / total * cross
}

/// Closed-form `D_{n,m}` for the given rank blocks.
pub fn statistic_d(data: &PointSet, reference: &PointSet, kernel: &Kernel) -> Result<StatisticValue> {
    check_blocks(data, reference)?;
    let f = |r2| kernel.eval_sq_norm(r2);
    let (n, m) = (data.len() as f64, reference.len() as f64);
    let value = combine(
        n,
        m,
        within_sum(data, 1.0, f),
        within_sum(reference, 1.0, f),
        cross_sum(data, reference, f),
    );
    Ok(StatisticValue {
        value,
        n: data.len(),
        m: reference.len(),
        kernel: *kernel,
    })
}

/// Energy statistic with exponent `gamma`: positive cross term, negative
/// within-block terms, same weights as `D_{n,m}`.
pub fn statistic_energy(data: &PointSet, reference: &PointSet, gamma: f64) -> Result<f64> {
    check_blocks(data, reference)?;
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("energy exponent must be positive, got {gamma}")));
    }
    let f = |r2: f64| r2.powf(0.5 * gamma);
    let (n, m) = (data.len() as f64, reference.len() as f64);
    Ok(-combine(
        n,
        m,
        within_sum(data, 0.0, f),
        within_sum(reference, 0.0, f),
        cross_sum(data, reference, f),
    ))
}

/// Left side of the block-mean identity: mean of `f` over the first `n`
/// permuted labels minus the mean over the remaining ones.
pub fn block_mean_contrast(values: &[f64], perm: &[usize], n: usize) -> f64 {
    let total = perm.len();
    let head: f64 = perm[..n].iter().map(|&i| values[i]).sum();
    let tail: f64 = perm[n..].iter().map(|&i| values[i]).sum();
    head / n as f64 - tail / (total - n) as f64
}

/// Right side of the block-mean identity: the same contrast written through
/// the first block and the permutation-free grand total.
pub fn block_mean_contrast_from_total(values: &[f64], perm: &[usize], n: usize) -> f64 {
    let big_n = perm.len() as f64;
    let n_f = n as f64;
    let head: f64 = perm[..n].iter().map(|&i| values[i]).sum();
    let grand: f64 = values.iter().sum();
    big_n / (n_f * (big_n - n_f)) * (head - n_f / big_n * grand)
}

/// Kernel matrix of a fixed grid, for evaluating `D_{n,m}` on many random
/// splits of the same grid.
///
/// For a data subset `S` only `sum_{j,k in S} K_jk` and `sum_{j in S} r_j`
/// (row sums) are needed: the reference-block and cross sums follow from the
/// grand total. Each evaluation is `O(n^2)`.
#[derive(Debug, Clone)]
pub struct GridKernel {
    size: usize,
    matrix: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
}

impl GridKernel {
    pub fn new(points: &PointSet, kernel: &Kernel) -> Self {
        let size = points.len();
        let mut matrix = vec![0.0; size * size];
        for j in 0..size {
            matrix[j * size + j] = 1.0;
            for k in (j + 1)..size {
                let v = kernel.eval_sq_norm(sq_dist(points.row(j), points.row(k)));
                matrix[j * size + k] = v;
                matrix[k * size + j] = v;
            }
        }
        let row_sums: Vec<f64> = matrix.chunks_exact(size).map(|r| r.iter().sum()).collect();
        let total = row_sums.iter().sum();
        Self {
            size,
            matrix,
            row_sums,
            total,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `D_{n,m}` when the grid points at `data_idx` are the data ranks and all
    /// other grid points are the reference ranks.
    pub fn statistic_for_subset(&self, data_idx: &[usize]) -> f64 {
        let n = data_idx.len();
        let m = self.size - n;
        let mut within_data = 0.0;
        let mut rows = 0.0;
        for &j in data_idx {
            let row = &self.matrix[j * self.size..(j + 1) * self.size];
            within_data += data_idx.iter().map(|&k| row[k]).sum::<f64>();
            rows += self.row_sums[j];
        }
        let cross = rows - within_data;
        let within_ref = self.total - within_data - 2.0 * cross;
        combine(n as f64, m as f64, within_data, within_ref, cross)
    }
}
