//! Effective coupling and noise rates from laboratory parameters (SI units).
//!
//! Two forms of the off-resonant scattering factor are provided. The full
//! Lorentzian `(Γ²/4)/(Γ²/4 + Δ²)` is the default; the far-detuned shorthand
//! `Γ²/Δ²` is also available. The two differ by a factor 4 at large detuning,
//! so rates derived under one must not be mixed with the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// `(Γ²/4)/(Γ²/4 + Δ²)`.
    #[default]
    Lorentzian,
    /// `Γ²/Δ²`.
    FarDetuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub n_atoms: f64,
    /// Photons per second.
    pub photon_flux: f64,
    /// Beam cross-section, m².
    pub area: f64,
    /// Angular detuning, rad/s.
    pub detuning: f64,
    /// Excited-state decay rate, 1/s.
    pub linewidth: f64,
    /// m.
    pub wavelength: f64,
    /// Transition dipole moment, C·m.
    pub dipole: f64,
    /// Beam segment duration, s.
    pub tau: f64,
    /// Optical angular frequency, rad/s.
    pub omega: f64,
}

impl PhysicalParams {
    /// Cs D-line numbers: 2 mm², 2·10¹² atoms, 5·10¹⁴ photons/s, detuning
    /// 2π·10 GHz, 852 nm, Γ = 3.1·10⁷ s⁻¹, d = 2.61·10⁻²⁹ C·m.
    pub fn cesium_reference() -> Self {
        let wavelength = 852e-9;
        Self {
            n_atoms: 2e12,
            photon_flux: 5e14,
            area: 2e-6,
            detuning: 2.0 * std::f64::consts::PI * 10e9,
            linewidth: 3.1e7,
            wavelength,
            dipole: 2.61e-29,
            tau: 1e-8,
            omega: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_atoms", self.n_atoms),
            ("photon_flux", self.photon_flux),
            ("area", self.area),
            ("detuning", self.detuning),
            ("linewidth", self.linewidth),
            ("wavelength", self.wavelength),
            ("dipole", self.dipole),
            ("tau", self.tau),
            ("omega", self.omega),
        ];
        for (name, v) in fields {
            let ok = match name {
                "n_atoms" | "photon_flux" => v >= 0.0 && v.is_finite(),
                _ => v > 0.0 && v.is_finite(),
            };
            if !ok {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Resonant absorption cross-section `λ²/2π`.
    pub fn cross_section(&self) -> f64 {
        self.wavelength * self.wavelength / (2.0 * std::f64::consts::PI)
    }

    /// `A/σ`.
    pub fn area_ratio(&self) -> f64 {
        self.area / self.cross_section()
    }

    /// True when `Δ` is not large compared with `Γ`.
    pub fn near_resonance(&self) -> bool {
        self.detuning < 10.0 * self.linewidth
    }

    pub fn scattering_factor(&self, convention: RateConvention) -> f64 {
        let g2 = self.linewidth * self.linewidth;
        let d2 = self.detuning * self.detuning;
        match convention {
            RateConvention::Lorentzian => (g2 / 4.0) / (g2 / 4.0 + d2),
            RateConvention::FarDetuned => g2 / d2,
        }
    }

    /// Single-atom coupling `d²ω/(A c ε₀ ℏ)`.
    pub fn atom_chi(&self) -> f64 {
        self.dipole * self.dipole * self.omega / (self.area * SPEED_OF_LIGHT * EPSILON_0 * HBAR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRates<T = f64> {
    /// κ², 1/s.
    pub kappa_sq: T,
    /// Atomic decay rate η, 1/s.
    pub eta: T,
    /// Photon absorption probability ε.
    pub epsilon: T,
}

impl<T: Real> CouplingRates<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_sq >= T::zero()) || !(self.eta >= T::zero()) {
            return Err(Error::invalid("kappa_sq and eta must be >= 0"));
        }
        if !(self.epsilon >= T::zero()) {
            return Err(Error::invalid("epsilon must be >= 0"));
        }
        if !(self.epsilon < T::one()) {
            return Err(Error::OpticallyThick {
                epsilon: self.epsilon.as_f64(),
            });
        }
        Ok(())
    }

    pub fn noiseless(kappa_sq: T) -> Self {
        Self {
            kappa_sq,
            eta: T::zero(),
            epsilon: T::zero(),
        }
    }
}

/// Derives `κ²`, `η` and `ε` under the given scattering convention.
pub fn derive_rates(p: &PhysicalParams, convention: RateConvention) -> Result<CouplingRates<f64>> {
    p.validate()?;
    let lorentz = p.scattering_factor(convention);
    let depth = p.cross_section() / p.area;
    let eta = p.photon_flux * depth * lorentz;
    let epsilon = p.n_atoms * depth * lorentz;
    let ratio = p.atom_chi() / p.detuning;
    let kappa_sq = p.n_atoms * p.photon_flux * ratio * ratio;
    let rates = CouplingRates {
        kappa_sq,
        eta,
        epsilon,
    };
    rates.validate()?;
    Ok(rates)
}

/// Per-segment coupling `κ_τ = √(κ² τ)`.
pub fn kappa_tau<T: Real>(kappa_sq: T, tau: T) -> T {
    (kappa_sq * tau).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxRequirement {
    /// Lower bound on `Φ · t_min` for percent-level absorption.
    pub flux_time_product: f64,
    /// The same bound divided by the probing-time cap.
    pub min_flux: f64,
}

/// Longest practical probing time used for [`flux_requirement`].
pub const MAX_PROBE_TIME: f64 = 1e-3;

/// Photon budget for optimal squeezing at ≤ 1 % absorption:
/// `Φ t_min ≳ 100 √(A/σ) √N_at`.
pub fn flux_requirement(p: &PhysicalParams) -> FluxRequirement {
    flux_requirement_from(p.area_ratio(), p.n_atoms)
}

/// [`flux_requirement`] from `A/σ` and the atom number directly.
pub fn flux_requirement_from(area_ratio: f64, n_atoms: f64) -> FluxRequirement {
    let product = 100.0 * area_ratio.sqrt() * n_atoms.sqrt();
    FluxRequirement {
        flux_time_product: product,
        min_flux: product / MAX_PROBE_TIME,
    }
}
