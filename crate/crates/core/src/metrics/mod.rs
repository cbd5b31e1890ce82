//! Metric kernels. All arithmetic is f64 and every reduction runs in input
//! row order, so results do not depend on the thread count.

mod accuracy;
mod diversity;
mod fid;
mod robustness;

pub use accuracy::{accuracy, Tally};
pub use diversity::{diversity, Diversity};
pub use fid::{
    class_fid, fid, fid_detail, fid_from_moments, Moments, FidDetail, FidResult, CLAMP_REL_TOL, DEFAULT_MIN_PER_CLASS,
    REGULARIZATION_EPS,
};
pub use robustness::{accuracy_gap, effective_robustness, fit_baseline, fit_baseline_with, AxisTransform, BaselineFit};
