//! Exact discrete optimal transport between a pooled sample and a grid.
//!
//! The empirical transport map is the bijection from sample points to grid
//! points minimizing the total squared Euclidean distance. It is found with a
//! dense Jonker-Volgenant solver: column reduction, reduction transfer,
//! augmenting row reduction, then shortest augmenting paths. `O(N^3)` in the
//! worst case, far less on typical inputs.
//!
//! Tie-breaking: wherever the solver picks among equally cheap rows or
//! columns it takes the lowest index, so results are reproducible for a
//! fixed input.

use crate::error::{Error, Result};
use crate::lowdisc::Grid;
use crate::points::{sq_dist, PointSet};

const UNASSIGNED: usize = usize::MAX;

/// Optimal bijection from pooled rows to grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct RankAssignment {
    /// `sigma[i]` is the grid index assigned to pooled row `i`.
    pub sigma: Vec<usize>,
    /// Sum of squared distances between each row and its grid point.
    pub cost: f64,
}

/// Data block followed by reference block; row order is part of the contract.
#[derive(Debug, Clone)]
pub struct PooledSample {
    data: PointSet,
    reference: PointSet,
}

impl PooledSample {
    pub fn new(data: PointSet, reference: PointSet) -> Result<Self> {
        if data.is_empty() || reference.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if data.dim() != reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                found: reference.dim(),
            });
        }
        data.ensure_finite()?;
        reference.ensure_finite()?;
        Ok(Self { data, reference })
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn m(&self) -> usize {
        self.reference.len()
    }

    pub fn data(&self) -> &PointSet {
        &self.data
    }

    pub fn reference(&self) -> &PointSet {
        &self.reference
    }

    pub fn pooled(&self) -> PointSet {
        self.data
            .concat(&self.reference)
            .expect("dimensions checked at construction")
    }
}

/// Solves the assignment problem between `points` and `grid`.
pub fn solve_assignment(points: &PointSet, grid: &Grid) -> Result<RankAssignment> {
    solve_to_targets(points, grid.points())
}

/// Same as [`solve_assignment`] for an arbitrary target point set.
pub fn solve_to_targets(points: &PointSet, targets: &PointSet) -> Result<RankAssignment> {
    if points.dim() != targets.dim() {
        return Err(Error::DimensionMismatch {
            expected: targets.dim(),
            found: points.dim(),
        });
    }
    if points.len() != targets.len() {
        return Err(Error::CardinalityMismatch {
            left: points.len(),
            right: targets.len(),
        });
    }
    points.ensure_finite()?;
    targets.ensure_finite()?;
    let n = points.len();
    let mut cost = Vec::with_capacity(n * n);
    for z in points.rows() {
        cost.extend(targets.rows().map(|g| sq_dist(z, g)));
    }
    let sigma = lapjv(n, &cost);
    let total = sigma.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(RankAssignment { sigma, cost: total })
}

/// Multivariate ranks of both blocks: rows `0..n` of the pooled sample give the
/// data ranks, rows `n..N` the reference ranks.
pub fn ranks(pooled: &PooledSample, grid: &Grid) -> Result<(PointSet, PointSet)> {
    let (data_idx, ref_idx) = rank_indices(pooled, grid)?;
    Ok((grid.points().select(&data_idx), grid.points().select(&ref_idx)))
}

/// Grid indices assigned to the data block and the reference block.
pub fn rank_indices(pooled: &PooledSample, grid: &Grid) -> Result<(Vec<usize>, Vec<usize>)> {
    if grid.len() != pooled.n() + pooled.m() {
        return Err(Error::CardinalityMismatch {
            left: pooled.n() + pooled.m(),
            right: grid.len(),
        });
    }
    let assignment = solve_assignment(&pooled.pooled(), grid)?;
    let mut sigma = assignment.sigma;
    let reference = sigma.split_off(pooled.n());
    Ok((sigma, reference))
}

/// Dense linear assignment on a row-major `n x n` cost matrix.
///
/// Returns `x` with `x[row] = column`.
pub fn lapjv(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    let c = |i: usize, j: usize| cost[i * n + j];

    let mut x = vec![UNASSIGNED; n]; // row -> column
    let mut y = vec![UNASSIGNED; n]; // column -> row
    let mut v = vec![0.0; n];
    let mut matches = vec![0u32; n];

    // Column reduction, scanning columns from last to first.
    for j in (0..n).rev() {
        let mut imin = 0;
        let mut min = c(0, j);
        for i in 1..n {
            let h = c(i, j);
            if h < min {
                min = h;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            x[imin] = j;
            y[j] = imin;
        } else if x[imin] != UNASSIGNED && x[imin] > j {
            // Keep the lower column index for a row that minimizes several columns.
            y[x[imin]] = UNASSIGNED;
            x[imin] = j;
            y[j] = imin;
        }
    }

    // Reduction transfer from uniquely assigned rows.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = x[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    min = min.min(c(i, j) - v[j]);
                }
            }
            v[j1] -= min - (c(i, j1) - v[j1]);
        }
    }

    augmenting_row_reduction(n, cost, &mut x, &mut y, &mut v, &free);
    let free: Vec<usize> = (0..n).filter(|&i| x[i] == UNASSIGNED).collect();

    // Shortest augmenting paths for the remaining free rows.
    let mut d = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &f in &free {
        for j in 0..n {
            d[j] = c(f, j) - v[j];
            pred[j] = f;
            collist[j] = j;
        }
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = 0.0;
        let endofpath;
        'search: loop {
            if up == low {
                // Collect the columns at the new minimum distance.
                last = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                let found = collist[low..up].iter().copied().filter(|&j| y[j] == UNASSIGNED).min();
                if let Some(j) = found {
                    endofpath = j;
                    break 'search;
                }
            }
            // Scan one column at the current minimum.
            let j1 = collist[low];
            low += 1;
            let i = y[j1];
            let u1 = c(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = collist[k];
                let v2 = c(i, j) - v[j] - u1;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if y[j] == UNASSIGNED {
                            endofpath = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
                k += 1;
            }
        }

        // Price update for columns settled before the final minimum level.
        for &j in &collist[..last] {
            v[j] += d[j] - min;
        }

        // Flip the alternating path.
        let mut j = endofpath;
        loop {
            let i = pred[j];
            y[j] = i;
            let next = x[i];
            x[i] = j;
            if i == f {
                break;
            }
            j = next;
        }
    }
    x
}

/// Two passes of augmenting row reduction over the free rows.
///
/// Purely a warm start: the pass count is capped, and any row left unassigned
/// is handled by the augmenting-path phase.
fn augmenting_row_reduction(n: usize, cost: &[f64], x: &mut [usize], y: &mut [usize], v: &mut [f64], free: &[usize]) {
    let c = |i: usize, j: usize| cost[i * n + j];
    let mut current: Vec<usize> = free.to_vec();
    let step_cap = 8 * n + 64;
    for _pass in 0..2 {
        let mut next = Vec::with_capacity(current.len());
        let mut k = 0;
        let mut steps = 0;
        while k < current.len() {
            steps += 1;
            if steps > step_cap {
                return;
            }
            let i = current[k];
            k += 1;
            let mut umin = c(i, 0) - v[0];
            let mut j1 = 0;
            let mut usubmin = f64::INFINITY;
            let mut j2 = UNASSIGNED;
            for j in 1..n {
                let h = c(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = y[j1];
            let strict = umin < usubmin;
            if strict {
                v[j1] -= usubmin - umin;
            } else if i0 != UNASSIGNED {
                j1 = j2;
                i0 = y[j2];
            }
            if i0 != UNASSIGNED {
                x[i0] = UNASSIGNED;
            }
            x[i] = j1;
            y[j1] = i;
            if i0 != UNASSIGNED {
                if strict {
                    // Re-examine the displaced row immediately.
                    k -= 1;
                    current[k] = i0;
                } else {
                    next.push(i0);
                }
            }
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force(n: usize, cost: &[f64]) -> f64 {
        fn rec(n: usize, row: usize, used: &mut [bool], cost: &[f64], acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(n, row + 1, used, cost, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(n, 0, &mut vec![false; n], cost, 0.0, &mut best);
        best
    }

    fn is_permutation(x: &[usize]) -> bool {
        let mut seen = vec![false; x.len()];
        x.iter().all(|&j| j < x.len() && !std::mem::replace(&mut seen[j], true))
    }

    fn ps(rows: &[[f64; 2]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn perfect_match_is_identity() {
        let p = ps(&[[0.0, 0.0], [1.0, 1.0]]);
        let a = solve_to_targets(&p, &p).unwrap();
        assert_eq!(a.sigma, vec![0, 1]);
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn crossing_pairs_swap() {
        let p = ps(&[[0.0, 0.0], [1.0, 0.0]]);
        let g = ps(&[[0.9, 0.0], [0.1, 0.0]]);
        let a = solve_to_targets(&p, &g).unwrap();
        assert_eq!(a.sigma, vec![1, 0]);
        assert!((a.cost - 0.02).abs() < 1e-15);
    }

    #[test]
    fn ranks_split_blocks() {
        let pooled = PooledSample::new(ps(&[[0.0, 0.0]]), ps(&[[5.0, 5.0]])).unwrap();
        let targets = ps(&[[0.1, 0.1], [0.9, 0.9]]);
        let a = solve_to_targets(&pooled.pooled(), &targets).unwrap();
        assert_eq!(a.sigma, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let p = ps(&[[0.0, 0.0], [1.0, 0.0]]);
        let q = PointSet::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(solve_to_targets(&p, &q), Err(Error::DimensionMismatch { .. })));
        let r = ps(&[[0.0, 0.0]]);
        assert!(matches!(
            solve_to_targets(&p, &r),
            Err(Error::CardinalityMismatch { .. })
        ));
        let bad = ps(&[[0.0, f64::INFINITY], [1.0, 0.0]]);
        assert!(matches!(solve_to_targets(&bad, &p), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut rng = stream(11, Purpose::Study, 0);
        for trial in 0..400 {
            let n = 1 + trial % 7;
            let cost: Vec<f64> = if trial % 3 == 0 {
                // integer costs produce plenty of ties
                (0..n * n).map(|_| rng.random_range(0..4) as f64).collect()
            } else {
                (0..n * n).map(|_| rng.random::<f64>()).collect()
            };
            let x = lapjv(n, &cost);
            assert!(is_permutation(&x));
            let got: f64 = x.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            let best = brute_force(n, &cost);
            assert!(
                (got - best).abs() <= 1e-12 * best.max(1.0),
                "trial {trial}: {got} vs {best}"
            );
        }
    }

    #[test]
    fn large_instance_is_permutation_and_locally_optimal() {
        let mut rng = stream(5, Purpose::Study, 1);
        let n = 300;
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let grid = crate::lowdisc::spherical_grid(2, n).unwrap();
        let a = solve_assignment(&ps(&pts), &grid).unwrap();
        assert!(is_permutation(&a.sigma));
        // No pairwise swap improves the cost (cyclical monotonicity of order 2).
        for i in 0..n {
            for k in (i + 1)..n {
                let (gi, gk) = (grid.point(a.sigma[i]), grid.point(a.sigma[k]));
                let now = sq_dist(&pts[i], gi) + sq_dist(&pts[k], gk);
                let swapped = sq_dist(&pts[i], gk) + sq_dist(&pts[k], gi);
                assert!(swapped >= now - 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn scale_equivariance(seed in 0u64..1000, n in 2usize..40, scale in 0.1f64..10.0) {
            let mut rng = stream(seed, Purpose::Study, 2);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>() * 4.0 - 2.0, rng.random()]).collect();
            let grid = crate::lowdisc::rectangular_grid(2, n).unwrap();
            let a = solve_to_targets(&ps(&pts), grid.points()).unwrap();
            let scaled = solve_to_targets(&ps(&pts).map(|v| v * scale), &grid.points().map(|v| v * scale)).unwrap();
            prop_assert_eq!(&a.sigma, &scaled.sigma);
            prop_assert!((scaled.cost - scale * scale * a.cost).abs() < 1e-9 * scaled.cost.max(1.0));
        }

        #[test]
        fn relabeling_data_rows_permutes_ranks(seed in 0u64..1000) {
            let mut rng = stream(seed, Purpose::Study, 3);
            let data: Vec<[f64; 2]> = (0..6).map(|_| [rng.random(), rng.random()]).collect();
            let reference: Vec<[f64; 2]> = (0..9).map(|_| [rng.random(), rng.random()]).collect();
            let grid = crate::lowdisc::spherical_grid(2, 15).unwrap();
            let pooled = PooledSample::new(ps(&data), ps(&reference)).unwrap();
            let (dr, rr) = ranks(&pooled, &grid).unwrap();
            let mut rev = data.clone();
            rev.reverse();
            let pooled2 = PooledSample::new(ps(&rev), ps(&reference)).unwrap();
            let (dr2, rr2) = ranks(&pooled2, &grid).unwrap();
            for i in 0..6 {
                prop_assert_eq!(dr.row(i), dr2.row(5 - i));
            }
            prop_assert_eq!(&rr, &rr2);
            // Union of rank vectors is the grid itself.
            let mut all: Vec<Vec<u64>> = dr.concat(&rr2).unwrap().rows().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
            let mut g: Vec<Vec<u64>> = grid.points().rows().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
            all.sort();
            g.sort();
            prop_assert_eq!(all, g);
        }
    }
}
