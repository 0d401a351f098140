//! `ssh-transfer` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ProtocolKind, RunConfig, SweepPreset};
use crate::dynamics::{
    check_convergence, edge_state, evolve, DriveProtocol, EdgeSite, EvolveOptions, Schedule,
};
use crate::error::Error;
use crate::lattice::{LatticeSpec, NnnSites, SignConvention};
use crate::output;
use crate::rwa::rwa_compare;
use crate::spectral::{gap_state, spectrum_at, spectrum_sweep, theta_grid, track_gap_states};
use crate::sweep::run_sweep;

/// Environment variable overriding the sweep worker count.
pub const WORKERS_ENV: &str = "SSH_TRANSFER_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "ssh-transfer",
    version,
    about = "Topological edge-state transfer in a modulated SSH chain"
)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues over a θ grid.
    Spectrum(SpectrumArgs),
    /// Gap-state populations at one θ or along a tracked θ grid.
    Localization(LocalizationArgs),
    /// Time evolution under a drive protocol.
    Evolve(EvolveArgs),
    /// (Ω, T) fidelity map.
    Sweep(SweepArgs),
    /// Compare the full three-mode model with the effective trimer.
    ValidateRwa(RwaArgs),
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

#[derive(Debug, Args, Default)]
pub struct LatticeArgs {
    #[arg(long)]
    pub cells: Option<usize>,
    /// none, odd or even.
    #[arg(long)]
    pub nnn: Option<String>,
    /// NNN hopping strength (final strength for an NNN ramp).
    #[arg(long = "T")]
    pub t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub theta_points: Option<usize>,
    /// First θ of the grid (the only one when `--theta-points 1`).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub theta_end: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LocalizationArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub theta_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// theta-ramp, fixed-theta or nnn-ramp.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// L, R, Lp or Rp.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub no_convergence_check: bool,
    /// Use the optomechanical sign on intra-cell bonds.
    #[arg(long)]
    pub negative_intra: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// photonic, phononic, even-sites or threshold.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub nnn: Option<String>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    /// Comma-separated ramp rates.
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// Comma-separated NNN strengths.
    #[arg(long = "T", value_delimiter = ',')]
    pub strengths: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub check_convergence: bool,
    #[arg(long)]
    pub step_ceiling: Option<u64>,
    /// Worker threads (default: the environment override or all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RwaArgs {
    #[arg(long)]
    pub omega_b: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Sets both G1 and G2.
    #[arg(long = "G")]
    pub g: Option<f64>,
    #[arg(long = "G1")]
    pub g1: Option<f64>,
    #[arg(long = "G2")]
    pub g2: Option<f64>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub phase: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub gate: Option<f64>,
    #[arg(long)]
    pub no_cutoff_check: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Run(#[from] Error),
    #[error("rms deviation {rms} exceeds the gate {gate}")]
    GateFailed { rms: f64, gate: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(Error::InvalidArgument(_)) => 2,
            CliError::Run(Error::NumericFailure { .. }) => 3,
            CliError::Run(Error::ResourceLimit(_)) => 4,
            CliError::Run(Error::Io(_)) => 1,
            CliError::GateFailed { .. } => 5,
        }
    }
}

/// Files written by one invocation.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &Option<String>) -> Result<Option<T>, Error> {
    s.as_deref().map(str::parse).transpose()
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, Error> {
    match s {
        "theta-ramp" => Ok(ProtocolKind::ThetaRamp),
        "fixed-theta" => Ok(ProtocolKind::FixedTheta),
        "nnn-ramp" => Ok(ProtocolKind::NnnRamp),
        other => Err(Error::InvalidArgument(format!(
            "unknown protocol `{other}`"
        ))),
    }
}

fn parse_preset(s: &str) -> Result<SweepPreset, Error> {
    match s {
        "photonic" | "fig3" => Ok(SweepPreset::Photonic),
        "phononic" | "fig5" => Ok(SweepPreset::Phononic),
        "even-sites" | "even" | "fig6" => Ok(SweepPreset::EvenSites),
        "threshold" => Ok(SweepPreset::Threshold),
        other => Err(Error::InvalidArgument(format!(
            "unknown sweep preset `{other}`"
        ))),
    }
}

fn apply_lattice(cfg: &mut RunConfig, args: &LatticeArgs) -> Result<(), Error> {
    if let Some(c) = args.cells {
        cfg.lattice.cells = c;
    }
    if let Some(sites) = parse::<NnnSites>(&args.nnn)? {
        cfg.nnn.sites = Some(sites);
    }
    if let Some(t) = args.t {
        cfg.nnn.strength = t;
    }
    Ok(())
}

/// Folds the flags of `command` into `cfg`.
pub fn apply_flags(cfg: &mut RunConfig, command: &Command) -> Result<(), Error> {
    match command {
        Command::Spectrum(a) => {
            apply_lattice(cfg, &a.lattice)?;
            if let Some(p) = a.theta_points {
                cfg.spectrum.theta_points = p;
            }
            if let Some(t) = a.theta {
                cfg.spectrum.theta_start = t;
            }
            if let Some(t) = a.theta_end {
                cfg.spectrum.theta_end = t;
            }
        }
        Command::Localization(a) => {
            apply_lattice(cfg, &a.lattice)?;
            if a.theta.is_some() {
                cfg.localization.theta = a.theta;
            }
            if let Some(p) = a.theta_points {
                cfg.localization.theta_points = p;
            }
        }
        Command::Evolve(a) => {
            apply_lattice(cfg, &a.lattice)?;
            let e = &mut cfg.evolve;
            if let Some(p) = &a.protocol {
                e.protocol = parse_protocol(p)?;
            }
            if let Some(x) = a.omega {
                e.omega = x;
            }
            if let Some(x) = a.theta {
                e.theta = x;
            }
            if let Some(x) = a.duration {
                e.duration = x;
            }
            if let Some(s) = parse::<EdgeSite>(&a.init)? {
                e.init = s;
            }
            if let Some(s) = parse::<EdgeSite>(&a.target)? {
                e.target = s;
            }
            if let Some(x) = a.samples {
                e.samples = x;
            }
            if a.dt.is_some() {
                e.dt = a.dt;
            }
            if let Some(x) = a.max_steps {
                e.max_steps = x;
            }
            if a.no_convergence_check {
                e.check_convergence = false;
            }
            if a.negative_intra {
                e.sign = SignConvention::NegativeIntra;
            }
        }
        Command::Sweep(a) => {
            if let Some(c) = a.cells {
                cfg.lattice.cells = c;
            }
            let s = &mut cfg.sweep;
            if let Some(p) = &a.preset {
                s.preset = parse_preset(p)?;
            }
            if let Some(x) = parse::<NnnSites>(&a.nnn)? {
                s.placement = Some(x);
            }
            if let Some(x) = parse::<EdgeSite>(&a.init)? {
                s.init = Some(x);
            }
            if let Some(x) = parse::<EdgeSite>(&a.target)? {
                s.target = Some(x);
            }
            if a.omegas.is_some() {
                s.omegas = a.omegas.clone();
            }
            if a.strengths.is_some() {
                s.strengths = a.strengths.clone();
            }
            if a.dt.is_some() {
                s.dt = a.dt;
            }
            if a.check_convergence {
                s.check_convergence = true;
            }
            if let Some(x) = a.step_ceiling {
                s.step_ceiling = x;
            }
        }
        Command::ValidateRwa(a) => {
            let r = &mut cfg.rwa;
            let set = |dst: &mut f64, src: Option<f64>| {
                if let Some(v) = src {
                    *dst = v;
                }
            };
            set(&mut r.omega_b, a.omega_b);
            set(&mut r.nu, a.nu);
            set(&mut r.g1, a.g);
            set(&mut r.g2, a.g);
            set(&mut r.g1, a.g1);
            set(&mut r.g2, a.g2);
            set(&mut r.t_direct, a.t);
            set(&mut r.phase, a.phase);
            set(&mut r.duration, a.duration);
            set(&mut r.gate, a.gate);
            if a.kappa.is_some() {
                r.kappa = a.kappa;
            }
            if a.dt.is_some() {
                r.dt = a.dt;
            }
            if let Some(n) = a.n_max {
                r.n_max = n;
            }
            if let Some(n) = a.samples {
                r.samples = n;
            }
            if a.no_cutoff_check {
                r.check_cutoff = false;
            }
        }
        Command::ShowConfig => {}
    }
    Ok(())
}

/// Expands every command-dependent default so the config alone reproduces the run.
pub fn resolve(cfg: &mut RunConfig, command: &Command) -> Result<(), Error> {
    match command {
        Command::Evolve(_) if cfg.evolve.protocol == ProtocolKind::NnnRamp => {
            cfg.nnn.sites.get_or_insert(NnnSites::Odd);
        }
        Command::Sweep(_) => {
            cfg.sweep = cfg.sweep.resolved(cfg.lattice.cells)?;
        }
        Command::ValidateRwa(_) => {
            let kappa = cfg.rwa.model().kappa();
            cfg.rwa.kappa = Some(kappa);
            cfg.rwa.dt = Some(cfg.rwa.step());
        }
        _ => {}
    }
    cfg.nnn.sites.get_or_insert(NnnSites::None);
    Ok(())
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Spectrum(_) => "spectrum",
        Command::Localization(_) => "localization",
        Command::Evolve(_) => "evolve",
        Command::Sweep(_) => "sweep",
        Command::ValidateRwa(_) => "validate-rwa",
        Command::ShowConfig => "show-config",
    }
}

/// SHA-256 of the command name and resolved config, output directory excluded.
pub fn config_hash(name: &str, cfg: &RunConfig) -> String {
    let mut config = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = config.as_object_mut() {
        map.remove("output_dir");
    }
    let body = serde_json::to_string(&json!({ "command": name, "config": config }))
        .expect("config serializes");
    hex::encode(Sha256::digest(body.as_bytes()))
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Error> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    apply_flags(&mut cfg, &cli.command)?;
    resolve(&mut cfg, &cli.command)?;
    let name = command_name(&cli.command);
    if let Command::ShowConfig = cli.command {
        return Ok(Outcome {
            files: vec![],
            summary: cfg.to_toml(),
        });
    }

    let hash = config_hash(name, &cfg);
    let comment = format!("manifest-hash: {hash}");
    fs::create_dir_all(&cfg.output_dir).map_err(Error::from)?;
    let dir = cfg.output_dir.clone();
    let mut w = Writer {
        dir: &dir,
        files: vec![],
    };
    let mut extra = serde_json::Value::Null;
    let mut workers_used = None;
    let lattice = LatticeSpec::new(cfg.lattice.cells)?;
    let mut gate_failure = None;

    let summary = match &cli.command {
        Command::Spectrum(_) => {
            let s = &cfg.spectrum;
            let grid = theta_grid(s.theta_points, s.theta_start, s.theta_end);
            let nnn = cfg.nnn.placement(NnnSites::None)?;
            let results = spectrum_sweep(&lattice, &nnn, &grid)?;
            w.write(
                "spectrum.csv",
                &output::spectrum_csv(&results, Some(&comment)),
            )?;
            let worst = results
                .iter()
                .map(|r| r.middle_energy().abs())
                .fold(0.0, f64::max);
            format!(
                "{} spectra, max |middle eigenvalue| = {worst:.3e}",
                results.len()
            )
        }
        Command::Localization(_) => {
            let nnn = cfg.nnn.placement(NnnSites::None)?;
            let states = match cfg.localization.theta {
                Some(theta) => vec![(
                    theta,
                    gap_state(&spectrum_at(&lattice, theta, &nnn)?, None)?,
                )],
                None => {
                    let grid = theta_grid(
                        cfg.localization.theta_points,
                        0.0,
                        2.0 * std::f64::consts::PI,
                    );
                    let results = spectrum_sweep(&lattice, &nnn, &grid)?;
                    grid.into_iter().zip(track_gap_states(&results)?).collect()
                }
            };
            w.write(
                "localization.csv",
                &output::localization_csv(&states, Some(&comment)),
            )?;
            let (theta, g) = &states[0];
            let peak = (0..g.populations.len())
                .max_by(|&a, &b| g.populations[a].total_cmp(&g.populations[b]))
                .unwrap_or(0);
            format!(
                "theta = {theta}: gap energy {:.6e}, peak population {:.6} on site {}",
                g.energy,
                g.populations[peak],
                peak + 1
            )
        }
        Command::Evolve(_) => {
            let e = &cfg.evolve;
            let schedule = match e.protocol {
                ProtocolKind::ThetaRamp => Schedule::ThetaRamp { rate: e.omega },
                ProtocolKind::FixedTheta => Schedule::FixedTheta {
                    theta: e.theta,
                    duration: e.duration,
                },
                ProtocolKind::NnnRamp => Schedule::NnnRamp {
                    theta: e.theta,
                    rate: e.omega,
                    final_strength: cfg.nnn.strength,
                },
            };
            let nnn = match e.protocol {
                ProtocolKind::NnnRamp => {
                    crate::lattice::NnnPlacement::new(cfg.nnn.sites.unwrap_or(NnnSites::Odd), 0.0)?
                }
                _ => cfg.nnn.placement(NnnSites::None)?,
            };
            let protocol = DriveProtocol::new(schedule, nnn)?;
            let init = edge_state(&lattice, e.init);
            let target = edge_state(&lattice, e.target);
            let options = EvolveOptions {
                dt: e.dt,
                max_steps: e.max_steps,
                sign: e.sign,
            };
            let tr = evolve(&lattice, &protocol, &init, &target, e.samples, &options)?;
            let conv = if e.check_convergence {
                Some(check_convergence(
                    &lattice, &protocol, &init, &target, &tr, &options,
                )?)
            } else {
                None
            };
            w.write(
                "trajectory.csv",
                &output::trajectory_csv(&tr, Some(&comment)),
            )?;
            w.json(
                "evolve.json",
                &json!({
                    "manifest_hash": hash,
                    "final_fidelity": tr.final_fidelity,
                    "duration": protocol.duration(),
                    "steps": tr.steps,
                    "dt": tr.step,
                    "max_norm_drift": tr.max_norm_drift(),
                    "convergence": conv,
                }),
            )?;
            format!(
                "final fidelity {:.6} ({} steps){}",
                tr.final_fidelity,
                tr.steps,
                conv.map(|c| format!(
                    ", dt-halving delta {:.2e} ({})",
                    c.delta,
                    if c.passed {
                        "converged"
                    } else {
                        "NOT converged"
                    }
                ))
                .unwrap_or_default()
            )
        }
        Command::Sweep(a) => {
            let plan = cfg.sweep.plan(cfg.lattice.cells)?;
            let workers = a
                .workers
                .or_else(workers_from_env)
                .unwrap_or_else(default_workers);
            workers_used = Some(workers);
            let result = run_sweep(&plan, workers)?;
            w.write("sweep.csv", &output::sweep_csv(&result, Some(&comment)))?;
            let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
            extra = json!({ "plan": plan, "failed_cells": failed });
            format!("{} cells, {failed} failed", result.rows.len())
        }
        Command::ValidateRwa(_) => {
            let r = &cfg.rwa;
            let report = rwa_compare(&r.model(), r.duration, r.step(), r.samples, r.check_cutoff)?;
            w.write(
                "rwa_trajectory.csv",
                &output::rwa_csv(&report.trajectories, Some(&comment)),
            )?;
            let passed = report.rms_deviation <= r.gate;
            w.json(
                "rwa_report.json",
                &json!({
                    "manifest_hash": hash,
                    "params": report.params,
                    "rms_deviation": report.rms_deviation,
                    "max_deviation": report.max_deviation,
                    "nmax_convergence_ratio": report.nmax_convergence_ratio,
                    "cutoff_warning": report.cutoff_warning,
                    "gate": r.gate,
                    "passed": passed,
                }),
            )?;
            if let Some(warn) = &report.cutoff_warning {
                eprintln!("warning: {warn}");
            }
            if !passed {
                gate_failure = Some(CliError::GateFailed {
                    rms: report.rms_deviation,
                    gate: r.gate,
                });
            }
            format!(
                "rms deviation {:.4e}, max {:.4e}",
                report.rms_deviation, report.max_deviation
            )
        }
        Command::ShowConfig => unreachable!(),
    };

    let outputs: Vec<String> = w
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    w.json(
        &format!("{name}_manifest.json"),
        &json!({
            "command": name,
            "version": env!("CARGO_PKG_VERSION"),
            "manifest_hash": hash,
            "config": cfg,
            "outputs": outputs,
            "details": extra,
            "workers": workers_used,
            "created_at": chrono::Utc::now().to_rfc3339(),
        }),
    )?;
    if let Some(err) = gate_failure {
        return Err(err);
    }
    Ok(Outcome {
        files: w.files,
        summary,
    })
}

fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()?
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_args(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("ssh-transfer").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file_values() {
        let cli = parse_args(&[
            "evolve", "--cells", "3", "--nnn", "odd", "--T", "0.2", "--init", "Lp",
        ]);
        let mut cfg =
            RunConfig::from_toml("[lattice]\ncells = 7\n[nnn]\nstrength = 1.0\n").unwrap();
        apply_flags(&mut cfg, &cli.command).unwrap();
        assert_eq!(cfg.lattice.cells, 3);
        assert_eq!(cfg.nnn.strength, 0.2);
        assert_eq!(cfg.evolve.init, EdgeSite::Lp);
    }

    #[test]
    fn nnn_ramp_defaults_to_odd_sites() {
        let cli = parse_args(&["evolve", "--protocol", "nnn-ramp"]);
        let mut cfg = RunConfig::default();
        apply_flags(&mut cfg, &cli.command).unwrap();
        resolve(&mut cfg, &cli.command).unwrap();
        assert_eq!(cfg.nnn.sites, Some(NnnSites::Odd));
    }

    #[test]
    fn bad_values_map_to_exit_code_2() {
        let cli = parse_args(&["spectrum", "--nnn", "both"]);
        let mut cfg = RunConfig::default();
        let err = CliError::from(apply_flags(&mut cfg, &cli.command).unwrap_err());
        assert_eq!(err.exit_code(), 2);
        assert_eq!(
            CliError::GateFailed {
                rms: 1.0,
                gate: 0.5
            }
            .exit_code(),
            5
        );
        assert_eq!(
            CliError::from(Error::ResourceLimit("x".into())).exit_code(),
            4
        );
    }

    #[test]
    fn hash_is_stable_and_command_specific() {
        let cfg = RunConfig::default();
        assert_eq!(config_hash("spectrum", &cfg), config_hash("spectrum", &cfg));
        assert_ne!(config_hash("spectrum", &cfg), config_hash("evolve", &cfg));
    }
}
