//! Diastasis, calibration constant and entropy estimates for radial Kähler
//! metrics on the unit ball of ℂⁿ.
//!
//! A metric is given by its potential `Φ = λ(−α log(1 − ‖z‖²) + Σ a_k ‖z‖^{2k})`
//! (see [`MetricSpec`]). From it the crate computes Calabi's diastasis, the
//! supremum of its gradient, and the diastatic and volume entropies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod diastasis;
pub mod entropy;
pub mod error;
pub mod model;
pub mod quad;
pub mod report;
pub mod rigidity;
pub mod verify;

pub use num_complex;

pub use calibration::{calibration_constant, grad_norm, CalibrationEstimate, SearchGrid};
pub use diastasis::{diastasis_eval, hyperbolic_closed_forms, polarize_radial, PolarizedKernel};
pub use entropy::{
    diastatic_entropy, volume_entropy_growth, volume_entropy_integral, EntropyEstimate,
    EntropyOptions, Method, Mode, Quantity,
};
pub use error::{Error, Result};
pub use model::{metric_tensor, validate_spec, MetricSpec, RadialPoint, ValidationReport};
pub use report::{ResultItem, RunReport};
pub use rigidity::{lower_bound_check, scale_metric, scaling_law_check, Verdict};
