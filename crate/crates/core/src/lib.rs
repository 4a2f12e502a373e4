//! Gaussian-state simulation of continuous QND probing of atomic ensembles.
//!
//! The engine tracks first and second moments of atomic and light canonical
//! variables through bilinear couplings, decay, absorption and homodyne
//! readout of the light. Closed-form results live in [`analytic`]; the four
//! standard setups (homogeneous, thin inhomogeneous, optically thick and
//! rotation estimation) are assembled in [`scenarios`].
//!
//! Everything is generic over [`Real`] (`f32` or `f64`). The `*64` aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod physics;
pub mod scalar;
pub mod scenarios;

pub use error::{Error, Result};
pub use scalar::Real;

pub use analytic::{CollectiveKind, CollectiveVariable, EstimationParams, SqueezeCurveParams};
pub use gaussian::{
    apply_step, measure_light_x, run_sequence, squeezing_minimum, vacuum_state, variance_of,
    GaussianState, MeasurementRecord, Mode, StepOperators, TimeSeries, TrajectoryRecord,
};
pub use numerics::{sym_eig_min, SymMatrix};
pub use physics::{derive_rates, CouplingRates, PhysicalParams, RateConvention};

pub type SymMatrix64 = SymMatrix<f64>;
pub type GaussianState64 = GaussianState<f64>;
pub type StepOperators64 = StepOperators<f64>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type CouplingRates64 = CouplingRates<f64>;
pub type SqueezeCurveParams64 = SqueezeCurveParams<f64>;
pub type EstimationParams64 = EstimationParams<f64>;
pub type CollectiveVariable64 = CollectiveVariable<f64>;

pub type SymMatrix32 = SymMatrix<f32>;
pub type GaussianState32 = GaussianState<f32>;
pub type StepOperators32 = StepOperators<f32>;
