//! Run configuration: TOML text → validated [`RunConfig`].
//!
//! A config may name a `preset`; the preset's table is loaded first and the
//! file's own keys are merged over it, tables recursively.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spinsqueeze::physics::{derive_rates, CouplingRates, PhysicalParams, RateConvention};
use spinsqueeze::scenarios::SpreadRule;

use crate::presets;

pub const DEFAULT_TAU: f64 = 1e-8;
pub const DEFAULT_VAR0: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_VAR_THETA0: f64 = 1.0;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SPINSQUEEZE_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unknown preset `{0}` (known: {known})", known = presets::NAMES.join(", "))]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Homogeneous,
    ThinInhomogeneous,
    Thick,
    Estimation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    scenario: Option<ScenarioKind>,
    name: Option<String>,
    tau: Option<f64>,
    t_end: Option<f64>,
    var0: Option<f64>,
    seed: Option<u64>,
    sample_every: Option<usize>,
    output_dir: Option<PathBuf>,
    rates: Option<CouplingRates<f64>>,
    physical: Option<RawPhysical>,
    slices: Option<RawSlices>,
    estimation: Option<RawEstimation>,
    sweep: Option<SweepSettings>,
}

/// Every field defaults to [`PhysicalParams::cesium_reference`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    n_atoms: Option<f64>,
    photon_flux: Option<f64>,
    area: Option<f64>,
    detuning: Option<f64>,
    linewidth: Option<f64>,
    wavelength: Option<f64>,
    dipole: Option<f64>,
    omega: Option<f64>,
    convention: Option<RateConvention>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlices {
    n: Option<usize>,
    delta: Option<f64>,
    spread: Option<SpreadRule>,
    per_slice_epsilon: Option<f64>,
    n_atoms: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimation {
    t1: f64,
    t2: f64,
    alpha: Option<f64>,
    alphas: Option<Vec<f64>>,
    var_theta0: Option<f64>,
    theta_true: Option<f64>,
}

/// Where the coupling rates came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateSource {
    Direct,
    Physical {
        params: PhysicalParams,
        convention: RateConvention,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSettings {
    pub n: usize,
    pub delta: f64,
    pub spread: SpreadRule,
    /// Set for optically thick samples.
    pub per_slice_epsilon: Option<f64>,
    pub n_atoms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationSettings {
    pub t1: f64,
    pub t2: f64,
    /// `None` with empty `alphas` means the lever arms follow from the atom
    /// number and decay at `t1`.
    pub alpha: Option<f64>,
    pub alphas: Vec<f64>,
    pub var_theta0: f64,
    pub theta_true: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub n_slices: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

/// A fully resolved run description; echoed verbatim into manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub name: String,
    pub preset: Option<String>,
    pub scenario: ScenarioKind,
    pub tau: f64,
    pub t_end: f64,
    pub var0: f64,
    pub seed: u64,
    pub sample_every: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub source: RateSource,
    pub rates: CouplingRates<f64>,
    pub slices: SliceSettings,
    pub estimation: Option<EstimationSettings>,
    pub sweep: Option<SweepSettings>,
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    if let Some(value) = table.get("preset") {
        let name = value
            .as_str()
            .ok_or_else(|| ConfigError::Schema {
                path: "preset".into(),
                message: "expected a string".into(),
            })?
            .to_string();
        let mut base = presets::table(&name)?;
        merge(&mut base, table);
        table = base;
    }
    let raw: RawConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        }
    })?;
    resolve(raw)
}

/// Overlays `top` on `base`; nested tables merge, everything else replaces.
pub fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let scenario = raw.scenario.ok_or_else(|| invalid("missing field `scenario`"))?;
    let tau = positive("tau", raw.tau.unwrap_or(DEFAULT_TAU))?;
    let t_end = raw.t_end.ok_or_else(|| invalid("missing field `t_end`"))?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let var0 = positive("var0", raw.var0.unwrap_or(DEFAULT_VAR0))?;
    if raw.sample_every == Some(0) {
        return Err(invalid("sample_every must be >= 1"));
    }

    let (source, rates) = match (raw.rates, raw.physical) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "both `rates` and `physical` are given; choose direct rates or physical parameters",
            ))
        }
        (None, None) => return Err(invalid("one of `rates` or `physical` is required")),
        (Some(r), None) => {
            r.validate().map_err(|e| invalid(format!("rates: {e}")))?;
            (RateSource::Direct, r)
        }
        (None, Some(p)) => {
            let params = physical_params(&p, tau);
            let convention = p.convention.unwrap_or_default();
            let r = derive_rates(&params, convention).map_err(|e| invalid(format!("physical: {e}")))?;
            (RateSource::Physical { params, convention }, r)
        }
    };

    let rs = raw.slices.unwrap_or_default();
    let n_atoms = match (&source, rs.n_atoms) {
        (_, Some(n)) => positive("slices.n_atoms", n)?,
        (RateSource::Physical { params, .. }, None) => params.n_atoms,
        (RateSource::Direct, None) => PhysicalParams::cesium_reference().n_atoms,
    };
    let n = rs.n.unwrap_or(1);
    if n == 0 {
        return Err(invalid("slices.n must be >= 1"));
    }
    let slices = SliceSettings {
        n,
        delta: rs.delta.unwrap_or(0.0),
        spread: rs.spread.unwrap_or_default(),
        per_slice_epsilon: rs.per_slice_epsilon,
        n_atoms,
    };
    match scenario {
        ScenarioKind::Homogeneous if n != 1 => {
            return Err(invalid("homogeneous scenario takes exactly one slice"));
        }
        ScenarioKind::ThinInhomogeneous if rs.delta.is_none() => {
            return Err(invalid("thin_inhomogeneous scenario needs `slices.delta`"));
        }
        ScenarioKind::Thick if slices.per_slice_epsilon.is_none() => {
            return Err(invalid("thick scenario needs `slices.per_slice_epsilon`"));
        }
        _ => {}
    }

    let estimation = match (scenario, raw.estimation) {
        (ScenarioKind::Estimation, None) => {
            return Err(invalid("estimation scenario needs an `estimation` table"));
        }
        (ScenarioKind::Estimation, Some(e)) => Some(EstimationSettings {
            t1: e.t1,
            t2: e.t2,
            alpha: e.alpha,
            alphas: e.alphas.unwrap_or_default(),
            var_theta0: positive("estimation.var_theta0", e.var_theta0.unwrap_or(DEFAULT_VAR_THETA0))?,
            theta_true: e.theta_true,
        }),
        (_, Some(_)) => return Err(invalid("`estimation` table given for a non-estimation scenario")),
        (_, None) => None,
    };

    Ok(RunConfig {
        name: raw.name.unwrap_or_else(|| "run".to_string()),
        preset: raw.preset,
        scenario,
        tau,
        t_end,
        var0,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        sample_every: raw.sample_every,
        output_dir: raw.output_dir,
        source,
        rates,
        slices,
        estimation,
        sweep: raw.sweep,
    })
}

fn physical_params(p: &RawPhysical, tau: f64) -> PhysicalParams {
    let mut out = PhysicalParams::cesium_reference();
    let fields = [
        (&mut out.n_atoms, p.n_atoms),
        (&mut out.photon_flux, p.photon_flux),
        (&mut out.area, p.area),
        (&mut out.detuning, p.detuning),
        (&mut out.linewidth, p.linewidth),
        (&mut out.wavelength, p.wavelength),
        (&mut out.dipole, p.dipole),
        (&mut out.omega, p.omega),
    ];
    for (slot, v) in fields {
        if let Some(v) = v {
            *slot = v;
        }
    }
    out.tau = tau;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "homogeneous"
t_end = 1e-3
[rates]
kappa_sq = 1.83e6
eta = 0.0
epsilon = 0.0
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.tau, 1e-8);
        assert_eq!(c.var0, 0.5);
        assert_eq!(c.seed, 0);
        assert_eq!(c.name, "run");
        assert_eq!(c.source, RateSource::Direct);
        assert_eq!(c.slices.n, 1);
    }

    #[test]
    fn physical_and_direct_rates_conflict() {
        let text = format!("{MINIMAL}\n[physical]\nphoton_flux = 1e14\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("rates") && err.contains("physical"), "{err}");
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = MINIMAL.replace("eta = 0.0", "eta = 0.0\nbogus = 1");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Schema { path, message } => {
                assert_eq!(path, "rates.bogus");
                assert!(message.contains("bogus"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn type_mismatch_reports_path() {
        let text = MINIMAL.replace("t_end = 1e-3", "t_end = \"soon\"");
        match parse_config(&text).unwrap_err() {
            ConfigError::Schema { path, .. } => assert_eq!(path, "t_end"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn fig1_preset_carries_reference_rates() {
        let c = parse_config("preset = \"fig1\"").unwrap();
        assert_eq!(c.scenario, ScenarioKind::Homogeneous);
        assert_eq!(c.rates.kappa_sq, 1.83e6);
        assert_eq!(c.rates.eta, 1.7577);
        assert_eq!(c.rates.epsilon, 0.028);
    }

    #[test]
    fn file_keys_override_preset() {
        let c = parse_config("preset = \"fig2\"\nseed = 9\n[slices]\ndelta = 0.5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.slices.delta, 0.5);
        assert_eq!(c.slices.n, 10);
    }

    #[test]
    fn physical_parameters_are_derived() {
        let c = parse_config("scenario = \"homogeneous\"\nt_end = 1e-3\n[physical]\nconvention = \"lorentzian\"\n").unwrap();
        assert!((c.rates.kappa_sq / 1.83e6 - 1.0).abs() < 0.01);
        assert!(matches!(c.source, RateSource::Physical { .. }));
    }

    #[test]
    fn scenario_requirements() {
        let thick = MINIMAL.replace("homogeneous", "thick");
        assert!(parse_config(&thick).unwrap_err().to_string().contains("per_slice_epsilon"));
        let est = MINIMAL.replace("homogeneous", "estimation");
        assert!(parse_config(&est).unwrap_err().to_string().contains("estimation"));
        assert!(parse_config("preset = \"nope\"").is_err());
    }
}
