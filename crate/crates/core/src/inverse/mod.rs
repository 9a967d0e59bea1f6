//! Order recovery from boundary flux data: exponent peeling from one-point
//! curves, linearized full-boundary recovery, sign probes, and the empirical
//! stability constant.

mod dense;
pub mod exponents;
pub mod linearized;
pub mod probes;

pub use exponents::{
    detect_leading_m, recover_exponents, synthetic_curve, ExponentModel, RecoveryOptions,
};
pub use linearized::{
    background_field, linearized_columns, linearized_recovery, reciprocity_check, stability_report,
    ReciprocityReport, RecoveryResult, StabilityReport,
};
pub use probes::{distinguishability_experiment, hopf_probe, DistinguishabilityReport};
