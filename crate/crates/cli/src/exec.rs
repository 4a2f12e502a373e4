//! Turns a [`RunConfig`] into a scenario, runs it and tabulates the result.

use anyhow::{Context, Result};
use spinsqueeze::analytic::{var_p_noisy, EstimationParams, SqueezeCurveParams};
use spinsqueeze::gaussian::GaussianState;
use spinsqueeze::scenarios::*;
use spinsqueeze::TimeSeries64;

use crate::config::{RunConfig, ScenarioKind};

/// CSV column order; columns a scenario does not produce are left out.
pub const COLUMN_ORDER: [&str; 7] = [
    "var_p",
    "var_p_analytic",
    "min_eig_var",
    "var_P_eff",
    "var_P",
    "var_theta",
    "mean_theta",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.times.len()
    }
}

pub fn slice_config(cfg: &RunConfig) -> Result<(SliceConfig<f64>, Propagation)> {
    let s = &cfg.slices;
    let spread = SpreadSpec {
        kappa0_sq: cfg.rates.kappa_sq,
        delta: s.delta,
        rule: s.spread,
    };
    Ok(match (s.per_slice_epsilon, s.n) {
        (Some(eps), n) => (
            SliceConfig::thick(cfg.rates.kappa_sq, cfg.rates.eta, &vec![eps; n], s.n_atoms)?,
            Propagation::Sequential,
        ),
        (None, 1) => (SliceConfig::homogeneous(&cfg.rates, s.n_atoms)?, Propagation::Collective),
        (None, n) => (SliceConfig::thin(&spread, n, &cfg.rates, s.n_atoms)?, Propagation::Collective),
    })
}

/// Replaces every atomic pair by a minimum-uncertainty state with
/// `Var(p) = var0`.
fn squeeze_initial(state: &GaussianState<f64>, var0: f64) -> Result<GaussianState<f64>> {
    let mut cov = state.cov().clone();
    for i in 0..state.atom_slices() {
        let (x, p) = (state.atom_x(i).unwrap(), state.atom_p(i).unwrap());
        cov.set(x, x, 0.5 / var0);
        cov.set(p, p, 2.0 * var0);
    }
    Ok(GaussianState::from_moments(state.modes(), state.mean().to_vec(), cov)?)
}

pub fn build_scenario(cfg: &RunConfig) -> Result<Scenario<f64>> {
    let s = &cfg.slices;
    let mut scenario = match cfg.scenario {
        ScenarioKind::Homogeneous => build_homogeneous(&cfg.rates, cfg.tau, cfg.t_end)?,
        ScenarioKind::ThinInhomogeneous => {
            let spread = SpreadSpec {
                kappa0_sq: cfg.rates.kappa_sq,
                delta: s.delta,
                rule: s.spread,
            };
            build_thin_inhomogeneous(&spread, s.n, &cfg.rates, cfg.tau, cfg.t_end)?
        }
        ScenarioKind::Thick => build_thick(&slice_config(cfg)?.0, cfg.tau, cfg.t_end)?,
        ScenarioKind::Estimation => {
            let e = cfg.estimation.as_ref().context("estimation settings missing")?;
            let (slices, propagation) = slice_config(cfg)?;
            let alphas = match (e.alpha, e.alphas.is_empty()) {
                (None, true) => default_alphas(&slices, e.t1),
                _ => e.alphas.clone(),
            };
            let est = EstimationParams {
                alpha: e.alpha.unwrap_or(0.0),
                alphas,
                var_theta0: e.var_theta0,
                t1: e.t1,
                t2: e.t2,
                theta_true: e.theta_true,
            };
            let base = EstimationBase {
                slices,
                propagation,
                tau: cfg.tau,
            };
            build_estimation(&base, &est, cfg.t_end)?
        }
    };
    if cfg.var0 != 0.5 {
        scenario.initial_state = squeeze_initial(&scenario.initial_state, cfg.var0)?;
    }
    scenario.record_measurements = false;
    if let Some(every) = cfg.sample_every {
        scenario = scenario.with_sample_every(every);
    }
    Ok(scenario)
}

fn tabulate(cfg: &RunConfig, series: &TimeSeries64) -> Result<Table> {
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for name in COLUMN_ORDER {
        let col = match name {
            "var_p_analytic" if cfg.scenario == ScenarioKind::Homogeneous => {
                let r = &cfg.rates;
                let p = SqueezeCurveParams::new(r.kappa_sq, r.eta, r.epsilon, cfg.var0)?;
                series
                    .times
                    .iter()
                    .map(|&t| var_p_noisy(t, &p))
                    .collect::<spinsqueeze::Result<Vec<_>>>()?
            }
            _ => match series.column(name) {
                Some(c) => c.to_vec(),
                None => continue,
            },
        };
        names.push(name.to_string());
        columns.push(col);
    }
    Ok(Table {
        names,
        times: series.times.clone(),
        columns,
    })
}

/// Runs the configured scenario with its own seed.
pub fn simulate(cfg: &RunConfig) -> Result<Table> {
    let scenario = build_scenario(cfg)?;
    let (series, _) = run(&scenario, cfg.seed)?;
    tabulate(cfg, &series)
}
