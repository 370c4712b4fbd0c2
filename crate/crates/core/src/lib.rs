//! Goodness-of-fit tests built on optimal-transport ranks and characteristic
//! function distances.
//!
//! A sample is pooled with a reference sample, the pool is matched one-to-one
//! to a low-discrepancy grid by an exact assignment, and the grid images of
//! the two blocks are compared with a kernel statistic. Under the null the
//! data ranks are a uniformly random subset of the grid, so critical values
//! depend only on the grid, the kernel and the sample sizes.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::mut_range_bound
)]

pub mod calibration;
pub mod csvio;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod hypotests;
pub mod kernel;
pub mod ks;
pub mod lowdisc;
pub mod points;
pub mod rng;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{Kernel, KernelFamily};
pub use lowdisc::{Grid, GridKind};
pub use points::PointSet;
