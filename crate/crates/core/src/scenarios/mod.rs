//! The standard probing setups, expressed as phase lists over the Gaussian
//! engine.

mod run;
mod slices;

pub use run::{run, run_detailed, RunOutput};
pub use slices::{SliceConfig, SpreadRule, SpreadSpec, MAX_SLICE_EPSILON};

use serde::{Deserialize, Serialize};

use crate::analytic::{CollectiveKind, CollectiveVariable, EstimationParams};
use crate::error::{Error, Result};
use crate::gaussian::{vacuum_state, GaussianState, Mode};
use crate::physics::CouplingRates;
use crate::scalar::Real;

/// Upper bound on `κ_τ² = κ²τ` for the coarse-grained step to be valid.
pub const MAX_KAPPA_TAU_SQ: f64 = 0.1;

/// How one beam segment meets the slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// All slices couple to the segment in a single step.
    #[default]
    Collective,
    /// The segment passes slice after slice and is attenuated on the way.
    Sequential,
}

/// A stretch of continuous probing with per-step readout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSpec<T = f64> {
    pub slices: SliceConfig<T>,
    pub propagation: Propagation,
    pub tau: T,
    pub steps: usize,
    pub measure: bool,
    /// Exposure steps already taken before this phase; sets the decay clock.
    pub clock_offset: usize,
}

/// Instantaneous rotation `p_at,i → p_at,i + α_i θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSpec<T = f64> {
    pub duration: T,
    pub alphas: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Phase<T = f64> {
    Probe(ProbeSpec<T>),
    Rotate(RotationSpec<T>),
}

/// Quantity recorded at every sample time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Observable<T = f64> {
    /// `Var(p_at)` of the first slice.
    VarP,
    /// `Var(x_at)` of the first slice.
    VarX,
    /// Smallest variance over all atomic directions.
    MinEig,
    /// `|⟨v_min, v⟩|` between the minimizing direction and `v`.
    EigenOverlap(CollectiveVariable<T>),
    Collective {
        name: String,
        variable: CollectiveVariable<T>,
    },
    VarTheta,
    MeanTheta,
}

impl<T: Real> Observable<T> {
    pub fn name(&self) -> String {
        match self {
            Observable::VarP => "var_p".into(),
            Observable::VarX => "var_x".into(),
            Observable::MinEig => "min_eig_var".into(),
            Observable::EigenOverlap(_) => "eig_overlap".into(),
            Observable::Collective { name, .. } => name.clone(),
            Observable::VarTheta => "var_theta".into(),
            Observable::MeanTheta => "mean_theta".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario<T = f64> {
    pub initial_state: GaussianState<T>,
    pub phases: Vec<Phase<T>>,
    pub observables: Vec<Observable<T>>,
    /// Sample after every `sample_every` probe steps (and once at the start).
    pub sample_every: usize,
    /// When set, readouts are generated by a filter that knows θ exactly.
    pub theta_true: Option<T>,
    /// Keep every measurement record in the output.
    pub record_measurements: bool,
}

impl<T: Real> Scenario<T> {
    pub fn total_steps(&self) -> usize {
        self.phases
            .iter()
            .map(|p| match p {
                Phase::Probe(s) => s.steps,
                Phase::Rotate(_) => 0,
            })
            .sum()
    }

    /// Rows the run will produce: `⌊steps/sample_every⌋ + 1`, or none when
    /// there is nothing to propagate.
    pub fn sample_count(&self) -> usize {
        match self.total_steps() {
            0 => 0,
            n => n / self.sample_every + 1,
        }
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    pub fn with_observables(mut self, observables: Vec<Observable<T>>) -> Self {
        self.observables = observables;
        self
    }

    /// Checks dimensions and the operator bounds at both ends of every
    /// probe phase.
    pub fn validate(&self) -> Result<()> {
        if self.sample_every == 0 {
            return Err(Error::config("sample_every must be >= 1"));
        }
        let n_atoms = self.initial_state.atom_slices();
        for phase in &self.phases {
            match phase {
                Phase::Probe(p) => {
                    p.slices.validate()?;
                    if p.slices.n_slices() != n_atoms {
                        return Err(Error::config(format!(
                            "probe phase has {} slices, state has {n_atoms}",
                            p.slices.n_slices()
                        )));
                    }
                    if self.initial_state.light_indices().is_none() {
                        return Err(Error::config("probe phase needs a light mode"));
                    }
                    check_kappa_tau(&p.slices, p.tau)?;
                    if p.steps > 0 {
                        let layout = run::Layout::of(&self.initial_state);
                        for k in [0, p.steps - 1] {
                            for op in run::probe_ops(p, &layout, k)? {
                                op.validate()?;
                            }
                        }
                    }
                }
                Phase::Rotate(r) => {
                    if !(r.duration >= T::zero()) {
                        return Err(Error::config("rotation duration must be >= 0"));
                    }
                    if r.alphas.len() != n_atoms {
                        return Err(Error::config(format!(
                            "rotation has {} couplings, state has {n_atoms} slices",
                            r.alphas.len()
                        )));
                    }
                    if self.initial_state.parameter_index().is_none() {
                        return Err(Error::config("rotation needs a parameter variable"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_kappa_tau<T: Real>(slices: &SliceConfig<T>, tau: T) -> Result<()> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::config(format!("tau must be positive, got {tau}")));
    }
    let k = slices.total_kappa_sq() * tau;
    if k > T::lit(MAX_KAPPA_TAU_SQ) {
        return Err(Error::config(format!(
            "kappa_tau^2 = kappa^2 * tau = {k:.4e} exceeds the validity bound {MAX_KAPPA_TAU_SQ}; reduce tau"
        )));
    }
    for (i, &eta) in slices.etas.iter().enumerate() {
        if !(eta * tau < T::one()) {
            return Err(Error::config(format!("slice {i}: eta * tau = {} must be < 1", eta * tau)));
        }
    }
    Ok(())
}

/// Number of steps of length `tau` covering `duration`.
pub fn steps_for<T: Real>(duration: T, tau: T) -> Result<usize> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::config(format!("tau must be positive, got {tau}")));
    }
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(Error::config(format!("duration must be >= 0, got {duration}")));
    }
    let n = (duration / tau).round();
    n.to_usize()
        .ok_or_else(|| Error::config(format!("duration/tau = {n} is not representable")))
}

fn probe_phase<T: Real>(
    slices: SliceConfig<T>,
    propagation: Propagation,
    tau: T,
    duration: T,
    clock_offset: usize,
) -> Result<ProbeSpec<T>> {
    check_kappa_tau(&slices, tau)?;
    Ok(ProbeSpec {
        slices,
        propagation,
        tau,
        steps: steps_for(duration, tau)?,
        measure: true,
        clock_offset,
    })
}

fn default_sample_every(steps: usize) -> usize {
    (steps / 1000).max(1)
}

/// `P_eff` and the equal-weight `P` over `n` slices.
fn collective_observables<T: Real>(slices: &SliceConfig<T>) -> Result<Vec<Observable<T>>> {
    let kappas = slices.kappas();
    let p_eff = CollectiveVariable::momentum(&kappas, CollectiveKind::EffectiveAsymmetric)?;
    let p_sym = CollectiveVariable::momentum(&vec![T::one(); kappas.len()], CollectiveKind::Symmetric)?;
    Ok(vec![
        Observable::MinEig,
        Observable::EigenOverlap(p_eff.clone()),
        Observable::Collective {
            name: "var_P_eff".into(),
            variable: p_eff,
        },
        Observable::Collective {
            name: "var_P".into(),
            variable: p_sym,
        },
    ])
}

/// One sample, one light pair, readout after every segment.
pub fn build_homogeneous<T: Real>(rates: &CouplingRates<T>, tau: T, t_end: T) -> Result<Scenario<T>> {
    let slices = SliceConfig::homogeneous(rates, T::zero())?;
    let probe = probe_phase(slices, Propagation::Collective, tau, t_end, 0)?;
    let every = default_sample_every(probe.steps);
    Ok(Scenario {
        initial_state: GaussianState::atoms_and_light(1)?,
        phases: vec![Phase::Probe(probe)],
        observables: vec![Observable::VarP, Observable::VarX],
        sample_every: every,
        theta_true: None,
        record_measurements: true,
    })
}

/// `n` optically thin slices with spread couplings probed by a shared beam.
pub fn build_thin_inhomogeneous<T: Real>(
    spread: &SpreadSpec<T>,
    n: usize,
    rates: &CouplingRates<T>,
    tau: T,
    t_end: T,
) -> Result<Scenario<T>> {
    let slices = SliceConfig::thin(spread, n, rates, T::zero())?;
    slices.check_thin_slices()?;
    let observables = collective_observables(&slices)?;
    let probe = probe_phase(slices, Propagation::Collective, tau, t_end, 0)?;
    let every = default_sample_every(probe.steps);
    Ok(Scenario {
        initial_state: GaussianState::atoms_and_light(n)?,
        phases: vec![Phase::Probe(probe)],
        observables,
        sample_every: every,
        theta_true: None,
        record_measurements: true,
    })
}

/// Optically thick sample: each segment crosses the slices in beam order
/// and is read out after the last one.
pub fn build_thick<T: Real>(slices: &SliceConfig<T>, tau: T, t_end: T) -> Result<Scenario<T>> {
    slices.validate()?;
    slices.check_thin_slices()?;
    let observables = collective_observables(slices)?;
    let probe = probe_phase(slices.clone(), Propagation::Sequential, tau, t_end, 0)?;
    let every = default_sample_every(probe.steps);
    Ok(Scenario {
        initial_state: GaussianState::atoms_and_light(slices.n_slices())?,
        phases: vec![Phase::Probe(probe)],
        observables,
        sample_every: every,
        theta_true: None,
        record_measurements: true,
    })
}

/// Atomic sample and probing geometry on which the estimation runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationBase<T = f64> {
    pub slices: SliceConfig<T>,
    pub propagation: Propagation,
    pub tau: T,
}

/// Rotation lever arms `α_i = √(N_at,i e^{−η_i t₁}/2)`.
pub fn default_alphas<T: Real>(slices: &SliceConfig<T>, t1: T) -> Vec<T> {
    slices
        .etas
        .iter()
        .map(|&eta| (slices.atoms_per_slice * (-eta * t1).exp() * T::lit(0.5)).sqrt())
        .collect()
}

/// Squeeze on `[0, t1]`, rotate by the unknown θ on `[t1, t2]`, probe on
/// `[t2, t_end]` while tracking `Var(θ)`.
pub fn build_estimation<T: Real>(
    base: &EstimationBase<T>,
    est: &EstimationParams<T>,
    t_end: T,
) -> Result<Scenario<T>> {
    est.validate()?;
    if !(t_end >= est.t2) {
        return Err(Error::config(format!("t_end = {t_end} precedes t2 = {}", est.t2)));
    }
    let n = base.slices.n_slices();
    base.slices.validate()?;
    if base.propagation == Propagation::Sequential || n > 1 {
        base.slices.check_thin_slices()?;
    }
    let squeeze = probe_phase(base.slices.clone(), base.propagation, base.tau, est.t1, 0)?;
    let probe = probe_phase(
        base.slices.clone(),
        base.propagation,
        base.tau,
        t_end - est.t2,
        squeeze.steps,
    )?;
    let rotation = RotationSpec {
        duration: est.t2 - est.t1,
        alphas: (0..n).map(|i| est.alpha_for(i)).collect(),
    };

    let mut modes = vec![Mode::Parameter];
    modes.extend((0..n).map(Mode::Atom));
    modes.push(Mode::Light);
    let state = vacuum_state::<T>(&modes)?.with_parameter_prior(est.var_theta0, T::zero())?;

    let mut observables = vec![Observable::VarTheta, Observable::MeanTheta];
    if n == 1 {
        observables.push(Observable::VarP);
    } else {
        observables.extend(collective_observables(&base.slices)?.into_iter().skip(2));
    }
    let every = default_sample_every(squeeze.steps + probe.steps);
    let s = Scenario {
        initial_state: state,
        phases: vec![Phase::Probe(squeeze), Phase::Rotate(rotation), Phase::Probe(probe)],
        observables,
        sample_every: every,
        theta_true: est.theta_true,
        record_measurements: true,
    };
    s.validate()?;
    Ok(s)
}
