//! Regression mean-shift mode seeking.
//!
//! Given samples `(Xᵢ, Yᵢ)`, this crate estimates local modes of the
//! regression function `E[Y | X = x]` by a mean-shift style ascent on a
//! kernel regression surface, partitions the sample inputs by the mode their
//! ascent reaches, selects the bandwidth by gradient cross-validation, and
//! traces ridges with a subspace-constrained variant.
//!
//! ```
//! use regms_core::{
//!     partition_samples, simulate_bimodal, DensityFloor, FittedModel, IterationConfig, Kernel,
//!     ResponseTransform, SimulationSpec,
//! };
//!
//! let data = simulate_bimodal(&SimulationSpec::new(100, 1)).unwrap();
//! let model = FittedModel::fit(
//!     &data,
//!     &ResponseTransform::t1_default(),
//!     Kernel::Biweight,
//!     2.5,
//!     DensityFloor::default(),
//! )
//! .unwrap();
//! let part = partition_samples(&model, &IterationConfig::for_bandwidth(2.5)).unwrap();
//! assert!(part.mode_count() >= 1);
//! ```

pub mod bandwidth;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod kernels;
pub mod modeseek;
pub mod scms;
pub mod simulation;
pub mod transforms;

pub use bandwidth::{
    cv_gradient, pilot_nw_bandwidth, pilot_scaling_factor, select_bandwidth, BandwidthGrid,
    CvContext, GridSpec,
};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimators::{DensityFloor, FittedModel, NwEstimator};
pub use kernels::{Kernel, Profile};
pub use modeseek::{
    hausdorff, ms_iterate, ms_step, partition_samples, IterationConfig, ModeSeekResult, Partition,
    StallReason,
};
pub use scms::{scms_iterate, scms_step, RidgeConfig, RidgePoint};
pub use simulation::{simulate_bimodal, SimulationSpec};
pub use transforms::{ResponseTransform, TransformedResponses};

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
