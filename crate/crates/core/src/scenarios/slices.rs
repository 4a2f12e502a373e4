use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::CouplingRates;
use crate::scalar::Real;

/// Largest per-slice absorption for which a slice is treated as thin.
pub const MAX_SLICE_EPSILON: f64 = 0.05;

/// Per-slice rates at the start of the light exposure.
///
/// For optically thick samples the values already include the attenuation
/// of the beam by the preceding slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig<T = f64> {
    pub kappas_sq: Vec<T>,
    pub etas: Vec<T>,
    pub epsilons: Vec<T>,
    pub atoms_per_slice: T,
}

impl<T: Real> SliceConfig<T> {
    pub fn n_slices(&self) -> usize {
        self.kappas_sq.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.kappas_sq.len();
        if n == 0 {
            return Err(Error::config("need at least one slice"));
        }
        if self.etas.len() != n || self.epsilons.len() != n {
            return Err(Error::config(format!(
                "slice vectors differ in length: {} couplings, {} decay rates, {} absorptions",
                n,
                self.etas.len(),
                self.epsilons.len()
            )));
        }
        for i in 0..n {
            if !(self.kappas_sq[i] >= T::zero()) || !self.kappas_sq[i].is_finite() {
                return Err(Error::config(format!("slice {i}: kappa_sq must be finite and >= 0")));
            }
            if !(self.etas[i] >= T::zero()) || !self.etas[i].is_finite() {
                return Err(Error::config(format!("slice {i}: eta must be finite and >= 0")));
            }
            if !(self.epsilons[i] >= T::zero()) {
                return Err(Error::config(format!("slice {i}: epsilon must be >= 0")));
            }
        }
        if !(self.atoms_per_slice >= T::zero()) {
            return Err(Error::config("atoms_per_slice must be >= 0"));
        }
        Ok(())
    }

    /// Rejects slices too thick for a per-slice effective coupling.
    pub fn check_thin_slices(&self) -> Result<()> {
        let limit = T::lit(MAX_SLICE_EPSILON);
        for (i, &e) in self.epsilons.iter().enumerate() {
            if e > limit {
                return Err(Error::config(format!(
                    "slice {i} absorbs epsilon = {e}, above the per-slice bound {MAX_SLICE_EPSILON}; use more slices"
                )));
            }
        }
        Ok(())
    }

    /// `Σ κ_i²`.
    pub fn total_kappa_sq(&self) -> T {
        self.kappas_sq.iter().copied().sum()
    }

    pub fn total_epsilon(&self) -> T {
        self.epsilons.iter().copied().sum()
    }

    /// `κ_i = √κ_i²`, the weights of `P_eff`.
    pub fn kappas(&self) -> Vec<T> {
        self.kappas_sq.iter().map(|k| k.sqrt()).collect()
    }

    /// One slice carrying the full rates.
    pub fn homogeneous(rates: &CouplingRates<T>, n_atoms: T) -> Result<Self> {
        rates.validate()?;
        Ok(Self {
            kappas_sq: vec![rates.kappa_sq],
            etas: vec![rates.eta],
            epsilons: vec![rates.epsilon],
            atoms_per_slice: n_atoms,
        })
    }

    /// Optically thin sample with spread couplings and `η_i ∝ κ_i²`.
    ///
    /// `rates.eta` is the decay rate at the mean coupling and `rates.epsilon`
    /// the absorption of the whole sample, shared evenly between slices.
    pub fn thin(spread: &SpreadSpec<T>, n: usize, rates: &CouplingRates<T>, n_atoms: T) -> Result<Self> {
        rates.validate()?;
        let kappas_sq = spread.kappas_sq(n)?;
        let nn = T::from_usize_lossy(n);
        let mean = spread.kappa0_sq / nn;
        let etas = kappas_sq
            .iter()
            .map(|&k| if mean > T::zero() { rates.eta * k / mean } else { rates.eta })
            .collect();
        Ok(Self {
            kappas_sq,
            etas,
            epsilons: vec![rates.epsilon / nn; n],
            atoms_per_slice: n_atoms / nn,
        })
    }

    /// Optically thick sample cut into slices with absorptions `epsilons`.
    ///
    /// Slice `i` sees the beam attenuated by `A_i = Σ_{i'<i} ε_{i'}`, so
    /// `κ_i² = (κ₀²/n) e^{−A_i}` and `η_i = η₀ e^{−A_i}`.
    pub fn thick(kappa0_sq: T, eta0: T, epsilons: &[T], n_atoms: T) -> Result<Self> {
        let n = epsilons.len();
        if n == 0 {
            return Err(Error::config("need at least one slice"));
        }
        let nn = T::from_usize_lossy(n);
        let mut kappas_sq = Vec::with_capacity(n);
        let mut etas = Vec::with_capacity(n);
        let mut absorbed = T::zero();
        for &e in epsilons {
            let att = (-absorbed).exp();
            kappas_sq.push(kappa0_sq / nn * att);
            etas.push(eta0 * att);
            absorbed = absorbed + e;
        }
        let s = Self {
            kappas_sq,
            etas,
            epsilons: epsilons.to_vec(),
            atoms_per_slice: n_atoms / nn,
        };
        s.validate()?;
        Ok(s)
    }

    /// Noise prefactor of the light in slice `i`: `e^{A_i}`, `A_i` the
    /// absorption of all earlier slices.
    pub fn light_prefactor_at(&self, i: usize) -> T {
        self.epsilons[..i].iter().copied().sum::<T>().exp()
    }

    /// Prefactor after the beam has left slice `i`: `e^{Σ_{i'≤i} ε}`.
    pub fn light_prefactor_after(&self, i: usize) -> T {
        self.epsilons[..=i].iter().copied().sum::<T>().exp()
    }

    /// Mean Stokes component `⟨S_x⟩` (relative to its input value) after
    /// each slice.
    pub fn stokes_profile(&self) -> Vec<T> {
        let mut s = T::one();
        self.epsilons
            .iter()
            .map(|&e| {
                s = s * (-e).exp();
                s
            })
            .collect()
    }

    /// Fraction of the input photons absorbed by the whole sample.
    pub fn total_absorption(&self) -> T {
        T::one() - self.stokes_profile().last().copied().unwrap_or(T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpreadRule {
    /// Evenly spaced, endpoints included.
    #[default]
    Grid,
    /// Independent uniform draws.
    Random { seed: u64 },
}

/// Couplings spread uniformly over `[κ₀²(1−δ), κ₀²(1+δ)]/n`, rescaled so
/// that `Σ κ_i² = κ₀²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec<T = f64> {
    pub kappa0_sq: T,
    pub delta: T,
    #[serde(default)]
    pub rule: SpreadRule,
}

impl<T: Real> SpreadSpec<T> {
    pub fn grid(kappa0_sq: T, delta: T) -> Self {
        Self {
            kappa0_sq,
            delta,
            rule: SpreadRule::Grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= T::zero() && self.delta < T::one()) {
            return Err(Error::config(format!("delta = {} outside [0, 1)", self.delta)));
        }
        if !(self.kappa0_sq >= T::zero()) || !self.kappa0_sq.is_finite() {
            return Err(Error::config("kappa0_sq must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn kappas_sq(&self, n: usize) -> Result<Vec<T>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::config("need at least one slice"));
        }
        let lo = T::one() - self.delta;
        let hi = T::one() + self.delta;
        let raw: Vec<T> = match self.rule {
            SpreadRule::Grid if n == 1 => vec![T::one()],
            SpreadRule::Grid => (0..n)
                .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
                .collect(),
            SpreadRule::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random_range(0.0..1.0);
                        lo + (hi - lo) * T::lit(u)
                    })
                    .collect()
            }
        };
        let sum: T = raw.iter().copied().sum();
        Ok(raw.iter().map(|&r| self.kappa0_sq * r / sum).collect())
    }

    /// Unnormalized spread interval for one slice, `κ₀²(1 ± δ)/n`.
    pub fn interval(&self, n: usize) -> (T, T) {
        let nn = T::from_usize_lossy(n);
        (
            self.kappa0_sq * (T::one() - self.delta) / nn,
            self.kappa0_sq * (T::one() + self.delta) / nn,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_even_and_normalized() {
        let s = SpreadSpec::grid(1.83e6, 0.5);
        let k = s.kappas_sq(10).unwrap();
        let sum: f64 = k.iter().sum();
        assert!((sum / 1.83e6 - 1.0).abs() < 1e-14);
        let (lo, hi) = s.interval(10);
        assert!((k[0] / lo - 1.0).abs() < 1e-14);
        assert!((k[9] / hi - 1.0).abs() < 1e-14);
        let d = k[1] - k[0];
        for w in k.windows(2) {
            assert!(((w[1] - w[0]) / d - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_spread_is_flat() {
        let k = SpreadSpec::grid(2.0f64, 0.0).kappas_sq(4).unwrap();
        assert!(k.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn random_rule_is_seeded() {
        let mut s = SpreadSpec::grid(1.0, 0.3);
        s.rule = SpreadRule::Random { seed: 7 };
        let a = s.kappas_sq(10).unwrap();
        assert_eq!(a, s.kappas_sq(10).unwrap());
        let sum: f64 = a.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
        s.rule = SpreadRule::Random { seed: 8 };
        assert_ne!(a, s.kappas_sq(10).unwrap());
    }

    #[test]
    fn bad_delta_rejected() {
        assert!(SpreadSpec::grid(1.0, 1.0).kappas_sq(3).is_err());
        assert!(SpreadSpec::grid(1.0, -0.1).kappas_sq(3).is_err());
    }

    #[test]
    fn thin_etas_follow_intensity() {
        let rates: CouplingRates<f64> = CouplingRates {
            kappa_sq: 1.83e6,
            eta: 1.7577,
            epsilon: 0.028,
        };
        let c = SliceConfig::thin(&SpreadSpec::grid(1.83e6f64, 0.5), 10, &rates, 2e12).unwrap();
        let mean = 1.83e6 / 10.0;
        for i in 0..10 {
            assert!((c.etas[i] / (1.7577 * c.kappas_sq[i] / mean) - 1.0).abs() < 1e-14);
        }
        assert!((c.total_epsilon() - 0.028).abs() < 1e-15);
        assert_eq!(c.atoms_per_slice, 2e11);
    }

    #[test]
    fn thick_attenuation() {
        let c = SliceConfig::thick(1.83e6, 1.7577, &[0.028; 25], 2e12).unwrap();
        assert!((c.total_absorption() - (1.0 - (-0.7f64).exp())).abs() < 1e-12);
        assert!((c.total_absorption() - 0.503).abs() < 1e-3);
        assert_eq!(c.light_prefactor_at(0), 1.0);
        for i in 0..25 {
            let expect = (0.028 * (i + 1) as f64).exp();
            assert!((c.light_prefactor_after(i) / expect - 1.0).abs() < 1e-13);
            let att = (-0.028 * i as f64).exp();
            assert!((c.etas[i] / (1.7577 * att) - 1.0).abs() < 1e-13);
        }
        assert!(c.check_thin_slices().is_ok());
        let thickest = SliceConfig::thick(1.0, 1.0, &[0.06], 1.0).unwrap();
        assert!(thickest.check_thin_slices().is_err());
    }
}
