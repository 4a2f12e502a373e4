use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::GaussianState;

/// Outcome of one homodyne (polarization-rotation) readout of `x_ph`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementRecord<T = f64> {
    pub time: T,
    /// Deviation of the outcome from the pre-measurement mean of `x_ph`.
    pub chi: T,
    pub outcome: T,
}

fn light_pair<T: Real>(state: &GaussianState<T>) -> Result<(usize, usize)> {
    let d = state.dim();
    match state.light_indices() {
        Some((x, p)) if p + 1 == d => Ok((x, p)),
        Some(_) => Err(Error::invalid("light pair must be the final two variables")),
        None => Err(Error::invalid("state has no light pair to measure")),
    }
}

/// Mean and factor-two variance `B(1,1)` of `x_ph` before readout.
pub fn light_x_moments<T: Real>(state: &GaussianState<T>) -> Result<(T, T)> {
    let (x, _) = light_pair(state)?;
    Ok((state.mean[x], state.cov.get(x, x)))
}

/// Conditions the state on reading `x_ph = ⟨x_ph⟩ + chi`, then replaces the
/// light pair by a fresh vacuum segment.
///
/// With `A`, `B`, `C` the non-light, light and cross blocks:
/// `A → A − C (πBπ)⁻ Cᵀ` and `⟨y₁⟩ → ⟨y₁⟩ + C (πBπ)⁻ (chi, 0)ᵀ`, where
/// `(πBπ)⁻ = diag(1/B(1,1), 0)`.
pub fn measure_light_x_in_place<T: Real>(
    state: &mut GaussianState<T>,
    chi: T,
    time: T,
) -> Result<MeasurementRecord<T>> {
    let (x, _) = light_pair(state)?;
    let b11 = state.cov.get(x, x);
    if !(b11 > T::zero()) {
        return Err(Error::DegenerateCovariance { value: b11.as_f64() });
    }
    let predicted = state.mean[x];
    // c = γ(·, x_ph) over the conditioned block; γ -= c cᵀ / B(1,1).
    let c: Vec<T> = state.cov.row(x)[..x].to_vec();
    for i in 0..x {
        if c[i] == T::zero() {
            continue;
        }
        state.mean[i] = state.mean[i] + c[i] / b11 * chi;
        let row = state.cov.row_mut(i);
        for j in 0..x {
            row[j] = row[j] - c[i] * c[j] / b11;
        }
    }
    reset_light(state, x);
    Ok(MeasurementRecord {
        time,
        chi,
        outcome: predicted + chi,
    })
}

/// Value-semantics wrapper around [`measure_light_x_in_place`].
pub fn measure_light_x<T: Real>(
    state: &GaussianState<T>,
    chi: T,
    time: T,
) -> Result<(GaussianState<T>, MeasurementRecord<T>)> {
    let mut out = state.clone();
    let rec = measure_light_x_in_place(&mut out, chi, time)?;
    Ok((out, rec))
}

/// Traces out the light segment without reading it and resets it to vacuum.
pub fn discard_light<T: Real>(state: &mut GaussianState<T>) -> Result<()> {
    let (x, _) = light_pair(state)?;
    reset_light(state, x);
    Ok(())
}

fn reset_light<T: Real>(state: &mut GaussianState<T>, x: usize) {
    let d = state.dim();
    for light in [x, x + 1] {
        for j in 0..d {
            state.cov.set_sym(light, j, T::zero());
        }
        state.cov.set(light, light, T::one());
        state.mean[light] = T::zero();
    }
}
