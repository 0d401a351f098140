//! Run configuration: a TOML document whose every field has a default.
//!
//! Precedence is command-line flag over file value over default. The
//! manifest of every run records the fully resolved configuration, which
//! can be fed back with `--config` to reproduce the run.

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{EdgeSite, DEFAULT_MAX_STEPS, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::lattice::{NnnPlacement, NnnSites, SignConvention};
use crate::rwa::{FockModelSpec, DEFAULT_DIM_CEILING};
use crate::spectral::DEFAULT_THETA_POINTS;
use crate::sweep::{SweepPlan, DEFAULT_STEP_CEILING};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub lattice: LatticeConfig,
    pub nnn: NnnConfig,
    pub spectrum: SpectrumConfig,
    pub localization: LocalizationConfig,
    pub evolve: EvolveConfig,
    pub sweep: SweepConfig,
    pub rwa: RwaConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            lattice: LatticeConfig::default(),
            nnn: NnnConfig::default(),
            spectrum: SpectrumConfig::default(),
            localization: LocalizationConfig::default(),
            evolve: EvolveConfig::default(),
            sweep: SweepConfig::default(),
            rwa: RwaConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub cells: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { cells: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnnConfig {
    /// Unset means no NNN hopping, except for an NNN ramp where it means odd sites.
    pub sites: Option<NnnSites>,
    pub strength: f64,
}

impl NnnConfig {
    pub fn placement(&self, fallback: NnnSites) -> Result<NnnPlacement> {
        NnnPlacement::new(self.sites.unwrap_or(fallback), self.strength)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub theta_points: usize,
    pub theta_start: f64,
    pub theta_end: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            theta_points: DEFAULT_THETA_POINTS,
            theta_start: 0.0,
            theta_end: 2.0 * PI,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    /// A single angle; unset means a tracked grid over `[0, 2π]`.
    pub theta: Option<f64>,
    pub theta_points: usize,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            theta: None,
            theta_points: 128,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    #[default]
    ThetaRamp,
    FixedTheta,
    NnnRamp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub protocol: ProtocolKind,
    /// Ramp rate: of θ for a θ ramp, of `T` for an NNN ramp.
    pub omega: f64,
    /// Fixed angle for `fixed-theta` and `nnn-ramp`.
    pub theta: f64,
    /// Only used by `fixed-theta`.
    pub duration: f64,
    pub init: EdgeSite,
    pub target: EdgeSite,
    pub samples: usize,
    pub dt: Option<f64>,
    pub max_steps: u64,
    pub check_convergence: bool,
    pub sign: SignConvention,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolKind::ThetaRamp,
            omega: 1e-3,
            theta: FRAC_PI_4,
            duration: 100.0,
            init: EdgeSite::L,
            target: EdgeSite::R,
            samples: DEFAULT_SAMPLES,
            dt: None,
            max_steps: DEFAULT_MAX_STEPS,
            check_convergence: true,
            sign: SignConvention::AllPositive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPreset {
    /// Cavity NNN, `|L⟩ → |R⟩`.
    #[default]
    Photonic,
    /// Cavity NNN, `|L′⟩ → |R′⟩`.
    Phononic,
    /// Resonator NNN, `|L⟩ → |R⟩`.
    EvenSites,
    /// Coarse 8×9 grid around the photonic thresholds.
    Threshold,
}

impl SweepPreset {
    pub fn plan(&self) -> SweepPlan {
        match self {
            SweepPreset::Photonic => SweepPlan::photonic_default(),
            SweepPreset::Phononic => SweepPlan::phononic_default(),
            SweepPreset::EvenSites => SweepPlan::even_sites_default(),
            SweepPreset::Threshold => SweepPlan::threshold_grid(),
        }
    }
}

/// Grid settings; unset fields come from the preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub preset: SweepPreset,
    pub placement: Option<NnnSites>,
    pub omegas: Option<Vec<f64>>,
    pub strengths: Option<Vec<f64>>,
    pub init: Option<EdgeSite>,
    pub target: Option<EdgeSite>,
    pub dt: Option<f64>,
    pub check_convergence: bool,
    pub step_ceiling: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            preset: SweepPreset::Photonic,
            placement: None,
            omegas: None,
            strengths: None,
            init: None,
            target: None,
            dt: None,
            check_convergence: false,
            step_ceiling: DEFAULT_STEP_CEILING,
        }
    }
}

impl SweepConfig {
    pub fn plan(&self, cells: usize) -> Result<SweepPlan> {
        let base = self.preset.plan();
        Ok(SweepPlan {
            lattice: crate::lattice::LatticeSpec::new(cells)?,
            placement: self.placement.unwrap_or(base.placement),
            omega_grid: self.omegas.clone().unwrap_or(base.omega_grid),
            t_grid: self.strengths.clone().unwrap_or(base.t_grid),
            initial: self.init.unwrap_or(base.initial),
            target: self.target.unwrap_or(base.target),
            dt: self.dt,
            check_convergence: self.check_convergence,
            step_ceiling: self.step_ceiling,
        })
    }

    /// Same settings with every preset-derived field written out.
    pub fn resolved(&self, cells: usize) -> Result<Self> {
        let plan = self.plan(cells)?;
        Ok(Self {
            placement: Some(plan.placement),
            omegas: Some(plan.omega_grid),
            strengths: Some(plan.t_grid),
            init: Some(plan.initial),
            target: Some(plan.target),
            ..self.clone()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwaConfig {
    pub omega_b: f64,
    pub nu: f64,
    /// Bessel argument `κ = 2λ`; unset means the first zero of `J₀`.
    pub kappa: Option<f64>,
    pub g1: f64,
    pub g2: f64,
    pub t_direct: f64,
    pub n_max: usize,
    pub phase: f64,
    pub duration: f64,
    /// Unset means `0.02 · 2π/ν`.
    pub dt: Option<f64>,
    pub samples: usize,
    pub check_cutoff: bool,
    /// Largest acceptable rms occupation deviation.
    pub gate: f64,
    pub dim_ceiling: usize,
}

impl Default for RwaConfig {
    fn default() -> Self {
        let m = FockModelSpec::validation_default();
        Self {
            omega_b: m.omega_b,
            nu: m.nu,
            kappa: None,
            g1: m.g1,
            g2: m.g2,
            t_direct: m.t_direct,
            n_max: m.n_max,
            phase: m.phase,
            duration: 10.0,
            dt: None,
            samples: 201,
            check_cutoff: true,
            gate: 0.05,
            dim_ceiling: DEFAULT_DIM_CEILING,
        }
    }
}

impl RwaConfig {
    pub fn model(&self) -> FockModelSpec {
        FockModelSpec {
            omega_b: self.omega_b,
            nu: self.nu,
            lambda_mod: 0.5 * self.kappa.unwrap_or_else(crate::bessel::first_j0_zero),
            g1: self.g1,
            g2: self.g2,
            t_direct: self.t_direct,
            n_max: self.n_max,
            phase: self.phase,
            counter_rotating: true,
            dim_ceiling: self.dim_ceiling,
        }
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(0.02 * 2.0 * PI / self.nu)
    }
}
