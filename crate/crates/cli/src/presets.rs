//! Named parameter sets for the standard figures, embedded as TOML.

use crate::config::ConfigError;

pub const NAMES: [&str; 5] = ["fig1", "fig1-noiseless", "fig2", "fig3", "fig5"];

const FIG1: &str = r#"
scenario = "homogeneous"
name = "fig1"
t_end = 3e-3
[rates]
kappa_sq = 1.83e6
eta = 1.7577
epsilon = 0.028
"#;

const FIG1_NOISELESS: &str = r#"
scenario = "homogeneous"
name = "fig1-noiseless"
t_end = 3e-3
[rates]
kappa_sq = 1.83e6
eta = 0.0
epsilon = 0.0
"#;

const FIG2: &str = r#"
scenario = "thin_inhomogeneous"
name = "fig2"
t_end = 3e-3
[rates]
kappa_sq = 1.83e6
eta = 1.7577
epsilon = 0.028
[slices]
n = 10
delta = 0.1
"#;

const FIG3: &str = r#"
scenario = "thick"
name = "fig3"
tau = 2e-8
t_end = 1e-2
sample_every = 500
[rates]
kappa_sq = 1.83e6
eta = 1.7577
epsilon = 0.028
[slices]
n = 1
per_slice_epsilon = 0.028
"#;

const FIG5: &str = r#"
scenario = "estimation"
name = "fig5"
t_end = 1e-2
sample_every = 1000
[rates]
kappa_sq = 1.83e6
eta = 1.7577
epsilon = 0.028
[slices]
n = 10
delta = 0.0
[estimation]
t1 = 1e-3
t2 = 1e-3
alpha = 0.2236
var_theta0 = 1.0
"#;

/// Raw TOML text of a preset.
pub fn text(name: &str) -> Result<&'static str, ConfigError> {
    Ok(match name {
        "fig1" => FIG1,
        "fig1-noiseless" => FIG1_NOISELESS,
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig5" => FIG5,
        _ => return Err(ConfigError::UnknownPreset(name.to_string())),
    })
}

pub fn table(name: &str) -> Result<toml::Table, ConfigError> {
    let mut t: toml::Table = text(name)?.parse().expect("embedded presets parse");
    t.insert("preset".into(), toml::Value::String(name.into()));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_preset_resolves() {
        for name in NAMES {
            let c = parse_config(&format!("preset = \"{name}\"")).unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
        }
    }
}
