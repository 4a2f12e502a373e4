use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters of the single-sample squeezing curve `Var(p_at)(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeCurveParams<T = f64> {
    kappa_sq: T,
    eta: T,
    epsilon: T,
    var0: T,
}

impl<T: Real> SqueezeCurveParams<T> {
    pub fn new(kappa_sq: T, eta: T, epsilon: T, var0: T) -> Result<Self> {
        if !(kappa_sq >= T::zero()) || !(eta >= T::zero()) {
            return Err(Error::invalid("kappa_sq and eta must be >= 0"));
        }
        if !(epsilon >= T::zero() && epsilon < T::one()) {
            return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1)")));
        }
        if !(var0 > T::zero()) {
            return Err(Error::invalid("initial variance must be > 0"));
        }
        Ok(Self {
            kappa_sq,
            eta,
            epsilon,
            var0,
        })
    }

    /// Coherent initial state, `var0 = 1/2`.
    pub fn coherent(kappa_sq: T, eta: T, epsilon: T) -> Result<Self> {
        Self::new(kappa_sq, eta, epsilon, T::lit(0.5))
    }

    pub fn kappa_sq(&self) -> T {
        self.kappa_sq
    }
    pub fn eta(&self) -> T {
        self.eta
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    pub fn var0(&self) -> T {
        self.var0
    }

    /// `κ²(1 − ε)`, the coupling seen by the detector.
    pub fn effective_coupling(&self) -> T {
        self.kappa_sq * (T::one() - self.epsilon)
    }

    /// `η / (2κ²(1−ε))`.
    fn h(&self) -> T {
        self.eta / (T::lit(2.0) * self.effective_coupling())
    }

    /// `β = √((η/κ²(1−ε)) (η/κ²(1−ε) + 2))`, always derived.
    pub fn beta(&self) -> T {
        let r = self.eta / self.effective_coupling();
        (r * (r + T::lit(2.0))).sqrt()
    }

    /// Right-hand side of the variance rate equation including decay and
    /// absorption: `−2κ²(1−ε)e^{−ηt}V² − ηV + ηe^{ηt}`.
    pub fn rate(&self, t: T, var: T) -> T {
        let two = T::lit(2.0);
        let e = (self.eta * t).exp();
        -two * self.effective_coupling() / e * var * var - self.eta * var + self.eta * e
    }
}

/// Noiseless squeezing `1 / (2κ²t + 1/var0)`.
pub fn var_p_noiseless<T: Real>(t: T, kappa_sq: T, var0: T) -> T {
    (T::lit(2.0) * kappa_sq * t + var0.recip()).recip()
}

/// Squeezing with atomic decay and photon absorption.
///
/// The textbook form is a ratio of `1 ± q·e^{−2βk t}` terms that cancel for
/// small `βkt`; dividing through by `1 + e^{−2βkt}` gives the equivalent
/// `e^{ηt} [ (β/2)(u + (β/2)T) / (uT + β/2) − h ]` with
/// `T = tanh(βkt)`, `u = var0 + h`, `h = η/2k`, `k = κ²(1−ε)`, in which
/// every sum has positive terms.
pub fn var_p_noisy<T: Real>(t: T, p: &SqueezeCurveParams<T>) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::invalid("time must be >= 0"));
    }
    let k = p.effective_coupling();
    if !(k > T::zero()) {
        return Err(Error::invalid("kappa_sq (1 - epsilon) must be > 0"));
    }
    if p.eta == T::zero() {
        return Ok(var_p_noiseless(t, k, p.var0));
    }
    let h = p.h();
    let beta = p.beta();
    let half_beta = beta * T::lit(0.5);
    let u = p.var0 + h;
    let th = (beta * k * t).tanh();
    let ratio = half_beta * (u + half_beta * th) / (u * th + half_beta);
    Ok((ratio - h) * (p.eta * t).exp())
}

/// Time of minimum variance from the logarithmic formula
/// `t = ln( (u − β/2)/(u + β/2) · 4βk/η ) / (2βk)`.
pub fn t_min_exact<T: Real>(p: &SqueezeCurveParams<T>) -> Result<T> {
    if !(p.eta > T::zero()) {
        return Err(Error::NoMinimum);
    }
    let k = p.effective_coupling();
    if !(k > T::zero()) {
        return Err(Error::invalid("kappa_sq (1 - epsilon) must be > 0"));
    }
    let beta = p.beta();
    let half_beta = beta * T::lit(0.5);
    let u = p.var0 + p.h();
    let arg = (u - half_beta) / (u + half_beta) * T::lit(4.0) * beta * k / p.eta;
    Ok(arg.ln() / (T::lit(2.0) * beta * k))
}

/// Leading-order minimum time for `η/2κ²(1−ε) ≪ 1`; independent of `var0`.
pub fn t_min_approx<T: Real>(p: &SqueezeCurveParams<T>) -> Result<T> {
    if !(p.eta > T::zero()) {
        return Err(Error::NoMinimum);
    }
    let one_m = T::one() - p.epsilon;
    let kappa = p.kappa_sq.sqrt();
    if !(kappa > T::zero()) {
        return Err(Error::invalid("kappa_sq must be > 0"));
    }
    let two = T::lit(2.0);
    let pre = (two * (two * p.eta * one_m).sqrt() * kappa).recip();
    Ok(pre * (T::lit(4.0) * (two * one_m).sqrt() * kappa / p.eta.sqrt()).ln())
}

/// Standard deviation at the optimum, `√((1/κ) √(η / 2(1−ε)))`.
pub fn dp_min<T: Real>(p: &SqueezeCurveParams<T>) -> Result<T> {
    let kappa = p.kappa_sq.sqrt();
    if !(kappa > T::zero()) {
        return Err(Error::invalid("kappa_sq must be > 0"));
    }
    let inner = (p.eta / (T::lit(2.0) * (T::one() - p.epsilon))).sqrt();
    Ok((inner / kappa).sqrt())
}
