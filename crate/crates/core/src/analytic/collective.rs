use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CollectiveKind {
    /// Coupling-weighted combination, the direction the probe addresses.
    EffectiveAsymmetric,
    /// Equal-weight combination over slices.
    Symmetric,
    /// Eigenvector of the atomic covariance block.
    Eigen,
    Custom,
}

/// Unit-norm linear combination of the atomic variables
/// `(x_1, p_1, …, x_n, p_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectiveVariable<T = f64> {
    coefficients: Vec<T>,
    kind: CollectiveKind,
}

impl<T: Real> CollectiveVariable<T> {
    /// Wraps coefficients that must already have unit norm.
    pub fn new(coefficients: Vec<T>, kind: CollectiveKind) -> Result<Self> {
        let norm = coefficients.iter().map(|&c| c * c).sum::<T>().sqrt();
        let tol = T::structural_eps() * T::lit(10.0);
        if coefficients.is_empty() || !((norm - T::one()).abs() <= tol) {
            return Err(Error::invalid(format!(
                "collective variable must have unit norm, got {norm}"
            )));
        }
        Ok(Self { coefficients, kind })
    }

    /// Normalizes arbitrary weights.
    pub fn from_weights(weights: Vec<T>, kind: CollectiveKind) -> Result<Self> {
        let norm = weights.iter().map(|&c| c * c).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::invalid("collective weights must not all vanish"));
        }
        Ok(Self {
            coefficients: weights.into_iter().map(|w| w / norm).collect(),
            kind,
        })
    }

    /// Momentum combination `Σ w_i p_i / ‖w‖` over `n = weights.len()` slices.
    pub fn momentum(weights: &[T], kind: CollectiveKind) -> Result<Self> {
        let mut c = vec![T::zero(); 2 * weights.len()];
        for (i, &w) in weights.iter().enumerate() {
            c[2 * i + 1] = w;
        }
        Self::from_weights(c, kind)
    }

    pub fn position(weights: &[T], kind: CollectiveKind) -> Result<Self> {
        let mut c = vec![T::zero(); 2 * weights.len()];
        for (i, &w) in weights.iter().enumerate() {
            c[2 * i] = w;
        }
        Self::from_weights(c, kind)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn kind(&self) -> CollectiveKind {
        self.kind
    }

    /// `|⟨self, other⟩|`.
    pub fn overlap(&self, other: &Self) -> T {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            .abs()
    }
}

/// Split of the symmetric collective variables into the probed
/// (coupling-weighted) direction and an orthogonal remainder:
/// `(X, P) = a (X_eff, P_eff) + b (X_⊥, P_⊥)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectiveDecomposition<T = f64> {
    pub a: T,
    pub b: T,
    pub p_eff: CollectiveVariable<T>,
    pub x_eff: CollectiveVariable<T>,
    pub p_sym: CollectiveVariable<T>,
    pub x_sym: CollectiveVariable<T>,
    /// Per-slice weights of `b P_⊥` (unnormalized, norm `b`).
    pub perp_weights: Vec<T>,
}

/// Builds the effective and symmetric collective variables for per-slice
/// couplings `kappas` (amplitudes, not squares).
pub fn collective_decomposition<T: Real>(kappas: &[T]) -> Result<CollectiveDecomposition<T>> {
    if kappas.is_empty() {
        return Err(Error::invalid("need at least one slice coupling"));
    }
    if kappas.iter().any(|k| !k.is_finite()) {
        return Err(Error::invalid("couplings must be finite"));
    }
    let sum_sq: T = kappas.iter().map(|&k| k * k).sum();
    if !(sum_sq > T::zero()) {
        return Err(Error::invalid("all slice couplings are zero"));
    }
    let n = T::from_usize_lossy(kappas.len());
    let sum: T = kappas.iter().copied().sum();
    let norm = sum_sq.sqrt();
    let a = sum / n.sqrt() / norm;
    let perp_weights: Vec<T> = kappas
        .iter()
        .map(|&k| (T::one() - k * sum / sum_sq) / n.sqrt())
        .collect();
    let b = perp_weights.iter().map(|&w| w * w).sum::<T>().sqrt();
    let ones = vec![T::one(); kappas.len()];
    Ok(CollectiveDecomposition {
        a,
        b,
        p_eff: CollectiveVariable::momentum(kappas, CollectiveKind::EffectiveAsymmetric)?,
        x_eff: CollectiveVariable::position(kappas, CollectiveKind::EffectiveAsymmetric)?,
        p_sym: CollectiveVariable::momentum(&ones, CollectiveKind::Symmetric)?,
        x_sym: CollectiveVariable::position(&ones, CollectiveKind::Symmetric)?,
        perp_weights,
    })
}

/// Variance of the symmetric variable when the orthogonal part stays at the
/// coherent-state value: `a² var_eff + (1 − a²)/2`.
pub fn var_symmetric<T: Real>(var_eff: T, a: T) -> T {
    a * a * var_eff + (T::one() - a * a) * T::lit(0.5)
}
