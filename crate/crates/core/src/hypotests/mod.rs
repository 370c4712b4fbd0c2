//! Simple and composite goodness-of-fit tests.

mod composite;
mod families;
mod report;
mod simple;

pub use composite::{
    run_composite_test, warp_speed_study, CompositeCalibration, CompositeTest, CompositeTestSpec, ReferenceMode,
    WarpSpeedResult, MAX_ATTEMPTS,
};
pub use families::{normality_grid_reference, NormalFamily, NormalGridBase, ParametricFamily, StudentFamily};
pub use report::TestReport;
pub use simple::{run_simple_test, NullReference, SimpleCalibration, SimpleTest, SimpleTestSpec};
