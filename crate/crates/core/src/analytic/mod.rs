//! Closed-form results for squeezing and parameter estimation. These serve
//! both as calculators and as oracles for the numeric engine.

mod collective;
mod estimation;
mod squeeze;

pub use collective::{
    collective_decomposition, var_symmetric, CollectiveDecomposition, CollectiveKind,
    CollectiveVariable,
};
pub use estimation::{
    covariance_after_rotation, gain, var_theta_curve, var_theta_inhom, var_theta_inhom_limit,
    var_theta_inhom_symmetric, var_theta_limit,
    var_theta_simple, EstimationParams,
};
pub use squeeze::{dp_min, t_min_approx, t_min_exact, var_p_noiseless, var_p_noisy, SqueezeCurveParams};
