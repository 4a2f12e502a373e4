//! Gaussian-state engine: covariance and mean propagation, noise, and
//! measurement-conditioned reduction of the atom + light system.
//!
//! Covariances are stored in the factor-two convention
//! `γ_ij = 2 Re⟨Δy_i Δy_j⟩`, so the vacuum (or coherent spin state) has
//! `γ = 1` and physical variances are `γ_ii / 2`.

mod measure;
mod state;
mod step;
mod trajectory;

pub use measure::{discard_light, light_x_moments, measure_light_x, measure_light_x_in_place, MeasurementRecord};
pub use state::{squeezing_minimum, vacuum_state, variance_of, GaussianState, Mode, Quadrature, Variable};
pub use step::{apply_step, Coupling, NoiseBlock, NoiseEntry, Propagator, StepOperators, Transform};
pub use trajectory::{run_sequence, Sample, TimeSeries, Trajectory, TrajectoryRecord};
