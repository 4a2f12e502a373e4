use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;
use crate::scalar::Real;

/// Squeeze → rotate → probe protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationParams<T = f64> {
    /// Single-sample rotation lever arm `√(⟨J_x⟩/ℏ)`.
    pub alpha: T,
    /// Per-slice lever arms; empty means "use `alpha` for every slice".
    pub alphas: Vec<T>,
    pub var_theta0: T,
    pub t1: T,
    pub t2: T,
    /// True rotation angle used to generate readouts in trajectory runs.
    pub theta_true: Option<T>,
}

impl<T: Real> EstimationParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 >= T::zero() && self.t2 >= self.t1) {
            return Err(Error::invalid(format!(
                "need 0 <= t1 <= t2, got t1 = {}, t2 = {}",
                self.t1, self.t2
            )));
        }
        if !(self.var_theta0 > T::zero()) {
            return Err(Error::invalid("prior variance of theta must be > 0"));
        }
        if !(self.alpha >= T::zero()) || self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("rotation couplings must be finite and alpha >= 0"));
        }
        Ok(())
    }

    /// Lever arm of slice `i`.
    pub fn alpha_for(&self, i: usize) -> T {
        self.alphas.get(i).copied().unwrap_or(self.alpha)
    }
}

/// Covariance of `(θ, x_at, p_at)` right after the rotation impulse, in the
/// factor-two convention.
pub fn covariance_after_rotation<T: Real>(
    var_p_t1: T,
    var_x_t1: T,
    alpha: T,
    var_theta0: T,
) -> SymMatrix<T> {
    let two = T::lit(2.0);
    let mut g = SymMatrix::zeros(3);
    g.set(0, 0, two * var_theta0);
    g.set_sym(0, 2, alpha * two * var_theta0);
    g.set(1, 1, two * var_x_t1);
    g.set(2, 2, two * var_p_t1 + alpha * alpha * two * var_theta0);
    g
}

/// `Var(θ(t))` during noiseless probing after the rotation at `t2`.
///
/// `cov_t2` is the factor-two covariance of `(θ, x_at, p_at)` at `t2`.
/// The reduction of the θ variance is
/// `Cov(θ,p)² / Var(p) · (1 − 1/(1 + 2 Var(p) κ² (t − t2)))`.
pub fn var_theta_curve<T: Real>(t: T, t2: T, cov_t2: &SymMatrix<T>, kappa_sq: T) -> Result<T> {
    if cov_t2.dim() != 3 {
        return Err(Error::invalid("expected the 3x3 covariance of (theta, x_at, p_at)"));
    }
    if !(t >= t2) {
        return Err(Error::invalid("probe time precedes the end of the rotation"));
    }
    let half = T::lit(0.5);
    let var_theta0 = cov_t2.get(0, 0) * half;
    let cov_tp = cov_t2.get(0, 2) * half;
    let var_p = cov_t2.get(2, 2) * half;
    if !(var_p > T::zero()) {
        return Err(Error::invalid("Var(p) at t2 must be > 0"));
    }
    let x = T::lit(2.0) * var_p * kappa_sq * (t - t2);
    Ok(var_theta0 - cov_tp * cov_tp / var_p * (T::one() - (T::one() + x).recip()))
}

/// Long-probing limit `Var(θ₀)Var(p)/(Var(p) + α²Var(θ₀))`.
pub fn var_theta_limit<T: Real>(var_p_t1: T, alpha: T, var_theta0: T) -> T {
    var_theta0 * var_p_t1 / (var_p_t1 + alpha * alpha * var_theta0)
}

/// Broad-prior limit `Var(p)/α²`.
pub fn var_theta_simple<T: Real>(var_p_t1: T, alpha: T) -> T {
    var_p_t1 / (alpha * alpha)
}

/// Ratio of θ variances with and without pre-squeezing, `2 Var(p^S)`.
pub fn gain<T: Real>(var_p_squeezed: T) -> T {
    T::lit(2.0) * var_p_squeezed
}

fn effective_lever<T: Real>(kappas: &[T], alphas: &[T]) -> Result<T> {
    if kappas.len() != alphas.len() || kappas.is_empty() {
        return Err(Error::invalid("kappas and alphas must be nonempty and of equal length"));
    }
    let norm = kappas.iter().map(|&k| k * k).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Err(Error::invalid("all couplings are zero"));
    }
    let lever = kappas.iter().zip(alphas).map(|(&k, &a)| k * a).sum::<T>() / norm;
    if lever == T::zero() {
        return Err(Error::invalid("zero rotation lever arm"));
    }
    Ok(lever)
}

/// Broad-prior θ limit read out through the probed direction `P_eff`.
pub fn var_theta_inhom<T: Real>(var_p_eff: T, kappas: &[T], alphas: &[T]) -> Result<T> {
    let lever = effective_lever(kappas, alphas)?;
    Ok(var_p_eff / (lever * lever))
}

/// Same read-out as [`var_theta_inhom`] but keeping the finite prior,
/// `Var(θ₀)V/(V + λ²Var(θ₀))` with `λ = Σκα/√Σκ²`.
pub fn var_theta_inhom_limit<T: Real>(
    var_p_eff: T,
    kappas: &[T],
    alphas: &[T],
    var_theta0: T,
) -> Result<T> {
    let lever = effective_lever(kappas, alphas)?;
    Ok(var_theta_limit(var_p_eff, lever, var_theta0))
}

/// Broad-prior θ limit predicted from the symmetric collective variable.
pub fn var_theta_inhom_symmetric<T: Real>(var_p_sym: T, alphas: &[T]) -> Result<T> {
    if alphas.is_empty() {
        return Err(Error::invalid("need at least one lever arm"));
    }
    let n = T::from_usize_lossy(alphas.len());
    let lever = alphas.iter().copied().sum::<T>() / n.sqrt();
    if lever == T::zero() {
        return Err(Error::invalid("zero rotation lever arm"));
    }
    Ok(var_p_sym / (lever * lever))
}
