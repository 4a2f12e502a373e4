//! The `run`, `figure`, `sweep` and `rates` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use spinsqueeze::analytic::{var_theta_inhom, var_theta_inhom_symmetric};
use spinsqueeze::physics::flux_requirement;

use crate::config::{merge, parse_config, RateSource, RunConfig, OUTPUT_DIR_ENV};
use crate::exec::{simulate, slice_config, Table};
use crate::output::{DerivedEntry, OutputSet, RunEntry, RunManifest};
use crate::presets;

/// `--out`, then the config's `output_dir`, then the environment, then
/// `./output`.
pub fn output_dir(flag: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn entry(description: String, cfg: &RunConfig, out: crate::output::FileRecord) -> RunEntry {
    RunEntry {
        description,
        kappa_tau_sq: cfg.rates.kappa_sq * cfg.tau,
        config: cfg.clone(),
        output: out,
    }
}

/// Runs every job (in parallel), then writes tables and the manifest. On
/// any failure the files already written are removed.
fn execute(
    dir: &Path,
    command: &str,
    manifest_name: &str,
    jobs: Vec<(String, RunConfig)>,
    derive: impl FnOnce(&[(String, RunConfig)], &[Table]) -> Result<Vec<(String, f64, Table)>>,
) -> Result<PathBuf> {
    let start = Instant::now();
    let tables: Vec<Table> = jobs
        .par_iter()
        .map(|(_, cfg)| simulate(cfg).with_context(|| format!("run `{}`", cfg.name)))
        .collect::<Result<_>>()?;
    let derived = derive(&jobs, &tables)?;

    let mut out = OutputSet::new(dir)?;
    let result = (|| -> Result<PathBuf> {
        let mut manifest = RunManifest::new(command);
        for ((description, cfg), table) in jobs.iter().zip(&tables) {
            let rec = out.write_table(&format!("{}.csv", cfg.name), table)?;
            manifest.runs.push(entry(description.clone(), cfg, rec));
        }
        for (i, (description, value, table)) in derived.iter().enumerate() {
            let name = format!("{}_curve{}.csv", manifest_name, jobs.len() + i + 1);
            let rec = out.write_table(&name, table)?;
            manifest.derived.push(DerivedEntry {
                description: description.clone(),
                value: *value,
                output: rec,
            });
        }
        manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
        out.write_manifest(&format!("{manifest_name}.manifest.json"), &manifest)
    })();
    if result.is_err() {
        out.discard();
    }
    result
}

pub fn run_command(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let name = cfg.name.clone();
    execute(dir, "run", &name, vec![("single run".into(), cfg.clone())], |_, _| Ok(vec![]))
}

fn preset_with(name: &str, overrides: &str) -> Result<RunConfig> {
    let mut table = presets::table(name)?;
    let top: toml::Table = overrides.parse().context("figure override")?;
    merge(&mut table, top);
    Ok(parse_config(&toml::to_string(&table)?)?)
}

pub const FIG5_DELTAS: [f64; 7] = [0.0, 0.02, 0.1, 0.2, 0.3, 0.4, 0.5];
pub const FIG5_ALPHA: f64 = 0.2236;

fn figure_jobs(id: u32) -> Result<Vec<(String, String, String)>> {
    let slices = |k: &str, v: String| format!("[slices]\n{k} = {v}\n");
    Ok(match id {
        1 => vec![
            ("noiseless".into(), "fig1-noiseless".into(), String::new()),
            ("with atomic decay and photon absorption".into(), "fig1".into(), String::new()),
        ],
        2 => [0.1, 0.5]
            .iter()
            .map(|d| {
                (
                    format!("n = 10, delta = {d}: columns min_eig_var (lower curve) and var_P"),
                    "fig2".into(),
                    slices("delta", d.to_string()),
                )
            })
            .collect(),
        3 => [1, 4, 8, 13, 25, 50]
            .iter()
            .map(|n| (format!("n = {n} slices, min_eig_var"), "fig3".into(), slices("n", n.to_string())))
            .collect(),
        4 => [4, 50]
            .iter()
            .map(|n| {
                (
                    format!("n = {n} slices: columns min_eig_var and var_P_eff"),
                    "fig3".into(),
                    slices("n", n.to_string()),
                )
            })
            .collect(),
        5 => FIG5_DELTAS
            .iter()
            .map(|d| (format!("delta = {d}, var_theta"), "fig5".into(), slices("delta", format!("{d:?}"))))
            .collect(),
        _ => bail!("figure id must be 1..5, got {id}"),
    })
}

fn constant_curve(times: &[f64], value: f64) -> Table {
    Table {
        names: vec!["var_theta".into()],
        times: times.to_vec(),
        columns: vec![vec![value; times.len()]],
    }
}

/// Limits drawn over the numeric θ curves: symmetric read-out for the
/// narrowest and widest spread, and the spread read-out line.
fn fig5_limits(jobs: &[(String, RunConfig)], tables: &[Table]) -> Result<Vec<(String, f64, Table)>> {
    let at_t1 = |k: usize, column: &str| -> Result<f64> {
        let cfg = &jobs[k].1;
        let t1 = cfg.estimation.as_ref().context("estimation settings")?.t1;
        let i = tables[k]
            .times
            .iter()
            .position(|&t| (t - t1).abs() <= 1e-9 * t1.max(1e-12))
            .with_context(|| format!("no sample at t1 = {t1}"))?;
        Ok(tables[k].column(column).context("missing column")?[i])
    };
    let alphas = |k: usize| vec![FIG5_ALPHA; jobs[k].1.slices.n];
    let last = jobs.len() - 1;
    let times = &tables[0].times;
    let narrow = var_theta_inhom_symmetric(at_t1(0, "var_P")?, &alphas(0))?;
    let wide = var_theta_inhom_symmetric(at_t1(last, "var_P")?, &alphas(last))?;
    let kappas = slice_config(&jobs[0].1)?.0.kappas();
    let line = var_theta_inhom(at_t1(0, "var_P_eff")?, &kappas, &alphas(0))?;
    Ok(vec![
        (
            format!("dashed: symmetric read-out limit, delta = {}", jobs[0].1.slices.delta),
            narrow,
            constant_curve(times, narrow),
        ),
        (
            format!("dashed: symmetric read-out limit, delta = {}", jobs[last].1.slices.delta),
            wide,
            constant_curve(times, wide),
        ),
        ("horizontal: P_eff read-out limit".into(), line, constant_curve(times, line)),
    ])
}

pub fn figure(id: u32, dir: &Path) -> Result<PathBuf> {
    let mut jobs = Vec::new();
    for (m, (description, preset, overrides)) in figure_jobs(id)?.into_iter().enumerate() {
        let mut cfg = preset_with(&preset, &overrides)?;
        cfg.name = format!("fig{id}_curve{}", m + 1);
        jobs.push((description, cfg));
    }
    let stem = format!("fig{id}");
    let command = format!("figure {id}");
    if id == 5 {
        execute(dir, &command, &stem, jobs, fig5_limits)
    } else {
        execute(dir, &command, &stem, jobs, |_, _| Ok(vec![]))
    }
}

fn or_default<T>(v: Vec<T>, d: T) -> Vec<T> {
    if v.is_empty() {
        vec![d]
    } else {
        v
    }
}

fn sweep_jobs(cfg: &RunConfig) -> Vec<(String, RunConfig)> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let deltas = or_default(sweep.deltas, cfg.slices.delta);
    let ns = or_default(sweep.n_slices, cfg.slices.n);
    let seeds = or_default(sweep.seeds, cfg.seed);
    let mut jobs = Vec::new();
    for &d in &deltas {
        for &n in &ns {
            for &s in &seeds {
                let mut c = cfg.clone();
                c.slices.delta = d;
                c.slices.n = n;
                c.seed = s;
                c.sweep = None;
                c.name = format!("{}_d{d:?}_n{n}_s{s}", cfg.name);
                jobs.push((format!("delta = {d}, n = {n}, seed = {s}"), c));
            }
        }
    }
    jobs
}

pub fn sweep(cfg: &RunConfig, dir: &Path) -> Result<PathBuf> {
    execute(dir, "sweep", &cfg.name, sweep_jobs(cfg), |_, _| Ok(vec![]))
}

pub fn rates_report(cfg: &RunConfig) -> String {
    let r = &cfg.rates;
    let mut lines = vec![
        format!("kappa_sq = {:.6e} 1/s", r.kappa_sq),
        format!("eta = {:.6e} 1/s", r.eta),
        format!("epsilon = {:.6e}", r.epsilon),
        format!("kappa_tau_sq = {:.6e} (bound 0.1)", r.kappa_sq * cfg.tau),
    ];
    match &cfg.source {
        RateSource::Direct => lines.push("source = direct".into()),
        RateSource::Physical { params, convention } => {
            lines.push(format!("source = physical, convention = {convention:?}"));
            let f = flux_requirement(params);
            lines.push(format!("area_ratio = {:.6e}", params.area_ratio()));
            lines.push(format!("flux_time_product >= {:.6e}", f.flux_time_product));
            lines.push(format!("min_flux >= {:.6e} 1/s", f.min_flux));
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_curve_counts() {
        let counts: Vec<usize> = (1..=5).map(|i| figure_jobs(i).unwrap().len()).collect();
        assert_eq!(counts, vec![2, 2, 6, 2, 7]);
        assert!(figure_jobs(6).is_err());
    }

    #[test]
    fn fig5_curves_use_the_preset_lever_arm() {
        let cfg = preset_with("fig5", "[slices]\ndelta = 0.3\n").unwrap();
        let e = cfg.estimation.unwrap();
        assert_eq!(e.alpha, Some(FIG5_ALPHA));
        assert_eq!(cfg.slices.delta, 0.3);
    }

    #[test]
    fn sweep_is_a_full_grid() {
        let mut cfg = preset_with("fig2", "").unwrap();
        cfg.sweep = Some(crate::config::SweepSettings {
            deltas: vec![0.1, 0.2],
            n_slices: vec![],
            seeds: vec![1, 2, 3],
        });
        let jobs = sweep_jobs(&cfg);
        assert_eq!(jobs.len(), 6);
        assert_eq!(jobs[0].1.name, "fig2_d0.1_n10_s1");
    }
}
