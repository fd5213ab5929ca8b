//! Stability of ions in a quadrupole Paul trap driven by CSL (Continuous
//! Spontaneous Localization) forcing.
//!
//! The pipeline goes from trap settings to dimensionless Mathieu parameters
//! ([`params`]), through the equations of motion ([`dynamics`]) and an
//! adaptive Dormand–Prince integrator ([`integrator`]), to one-period
//! transfer matrices and trace-criterion verdicts ([`floquet`]). Grid scans
//! over `(a, q)` and over the collapse parameters live in [`scan`]; the
//! `trapstab` binary is a thin shell over [`cli`].

// `!(x > 0.0)` is the NaN-rejecting form used throughout input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod floquet;
pub mod integrator;
pub mod params;
pub mod scan;

pub use dynamics::{CslMathieuSystem, CslParams, ShapeMode, State};
pub use floquet::{
    Classification, Construction, Criterion, MonodromyPolicy, StabilityVerdict, TransferMatrix, VerdictMethod,
};
pub use integrator::IntegratorSettings;
pub use params::{MathieuParams, PhysicalConstants, TrapConfig};
pub use scan::{Axis, GridSpec, ScanResult};
