use crate::error::{Error, Result};
use crate::scalar::Real;

/// Samples `(t_k, y_k)` of an integrated curve, including the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve<T = f64> {
    pub t: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> SampledCurve<T> {
    pub fn last(&self) -> (T, T) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

/// Fixed-step classical RK4 for `dy/dt = f(t, y)` on `[0, t_end]`.
///
/// The final step is shortened so the curve ends exactly at `t_end`.
pub fn integrate_scalar_ode<T, F>(f: F, y0: T, t_end: T, dt: T) -> Result<SampledCurve<T>>
where
    T: Real,
    F: Fn(T, T) -> T,
{
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::invalid(format!("step size must be positive, got {dt}")));
    }
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::invalid(format!("t_end must be >= 0, got {t_end}")));
    }
    if !y0.is_finite() {
        return Err(Error::Divergence { time: 0.0 });
    }

    let steps = (t_end / dt).ceil().to_usize().unwrap_or(0);
    let mut t_out = Vec::with_capacity(steps + 1);
    let mut y_out = Vec::with_capacity(steps + 1);
    t_out.push(T::zero());
    y_out.push(y0);

    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut y = y0;
    for k in 0..steps {
        let t = dt * T::from_usize_lossy(k);
        let h = if k + 1 == steps { t_end - t } else { dt };
        if h <= T::zero() {
            break;
        }
        let k1 = f(t, y);
        let k2 = f(t + h / two, y + h / two * k1);
        let k3 = f(t + h / two, y + h / two * k2);
        let k4 = f(t + h, y + h * k3);
        y = y + h / six * (k1 + two * k2 + two * k3 + k4);
        let t_next = t + h;
        if !y.is_finite() {
            return Err(Error::Divergence {
                time: t_next.as_f64(),
            });
        }
        t_out.push(t_next);
        y_out.push(y);
    }
    Ok(SampledCurve { t: t_out, y: y_out })
}
