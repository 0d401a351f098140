//! Schrödinger evolution under the scheduled chain Hamiltonians.
//!
//! Each step applies `exp(−i·H(t_mid)·dt)` exactly through the eigenbasis of
//! the midpoint Hamiltonian, so the propagator is unitary for any step size.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    build_from_couplings, ssh_couplings, HamiltonianMatrix, LatticeSpec, NnnPlacement, NnnSites,
    SignConvention,
};
use crate::spectral::diagonalize;

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;
/// Final-fidelity change allowed when the step is halved.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

/// Edge basis states: photonic `|L⟩ = e₁`, `|R⟩ = e_L`, phononic `|L′⟩ = e₂`, `|R′⟩ = e_{L−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeSite {
    L,
    R,
    Lp,
    Rp,
}

impl EdgeSite {
    /// 0-based site index on the chain.
    pub fn site(&self, spec: &LatticeSpec) -> usize {
        let l = spec.n_sites();
        match self {
            EdgeSite::L => 0,
            EdgeSite::R => l - 1,
            EdgeSite::Lp => 1,
            EdgeSite::Rp => l - 2,
        }
    }
}

impl FromStr for EdgeSite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(EdgeSite::L),
            "R" | "r" => Ok(EdgeSite::R),
            "Lp" | "lp" | "L'" => Ok(EdgeSite::Lp),
            "Rp" | "rp" | "R'" => Ok(EdgeSite::Rp),
            other => Err(Error::invalid(format!(
                "unknown edge state `{other}` (expected L, R, Lp or Rp)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        Self(DVector::from_vec(amps))
    }

    pub fn basis(dim: usize, site: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[site] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub fn edge_state(spec: &LatticeSpec, which: EdgeSite) -> StateVector {
    StateVector::basis(spec.n_sites(), which.site(spec))
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.0.dotc(&b.0).norm_sqr()
}

/// One exact exponential step `ψ ← exp(−i·H·dt)·ψ`.
pub fn propagate_step(
    psi: &StateVector,
    h_mid: &HamiltonianMatrix,
    dt: f64,
) -> Result<StateVector> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if psi.dim() != h_mid.dim() {
        return Err(Error::invalid("state and Hamiltonian dimensions differ"));
    }
    let eig = diagonalize(h_mid)?;
    Ok(StateVector(apply_exponential(
        &eig.values,
        &eig.vectors,
        &psi.0,
        dt,
    )))
}

fn apply_exponential(
    values: &[f64],
    vectors: &DMatrix<f64>,
    psi: &DVector<Complex64>,
    dt: f64,
) -> DVector<Complex64> {
    let re = psi.map(|z| z.re);
    let im = psi.map(|z| z.im);
    let cre = vectors.tr_mul(&re);
    let cim = vectors.tr_mul(&im);
    let mut rot_re = DVector::zeros(values.len());
    let mut rot_im = DVector::zeros(values.len());
    for (k, &e) in values.iter().enumerate() {
        let (s, c) = (-e * dt).sin_cos();
        rot_re[k] = c * cre[k] - s * cim[k];
        rot_im[k] = s * cre[k] + c * cim[k];
    }
    let out_re = vectors * rot_re;
    let out_im = vectors * rot_im;
    DVector::from_fn(psi.len(), |i, _| Complex64::new(out_re[i], out_im[i]))
}

/// Hamiltonian schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// `θ(t) = Ω·t` for `t ∈ [0, π/Ω]`.
    ThetaRamp {
        rate: f64,
    },
    FixedTheta {
        theta: f64,
        duration: f64,
    },
    /// `T(t) = Ω·t` at fixed θ, until `T` reaches `final_strength`.
    NnnRamp {
        theta: f64,
        rate: f64,
        final_strength: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub schedule: Schedule,
    /// For `NnnRamp` only the placement is used; the strength follows the ramp.
    pub nnn: NnnPlacement,
}

impl DriveProtocol {
    pub fn theta_ramp(rate: f64, nnn: NnnPlacement) -> Result<Self> {
        Self::new(Schedule::ThetaRamp { rate }, nnn)
    }

    pub fn new(schedule: Schedule, nnn: NnnPlacement) -> Result<Self> {
        let p = Self { schedule, nnn };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        match self.schedule {
            Schedule::ThetaRamp { rate } => positive("ramp rate", rate),
            Schedule::FixedTheta { theta, duration } => {
                ssh_couplings(theta)?;
                positive("duration", duration)
            }
            Schedule::NnnRamp {
                theta,
                rate,
                final_strength,
            } => {
                ssh_couplings(theta)?;
                positive("ramp rate", rate)?;
                positive("final NNN strength", final_strength)?;
                if self.nnn.sites() == NnnSites::None {
                    return Err(Error::invalid("an NNN ramp needs an odd or even placement"));
                }
                Ok(())
            }
        }
    }

    pub fn duration(&self) -> f64 {
        match self.schedule {
            Schedule::ThetaRamp { rate } => PI / rate,
            Schedule::FixedTheta { duration, .. } => duration,
            Schedule::NnnRamp {
                rate,
                final_strength,
                ..
            } => final_strength / rate,
        }
    }

    pub fn hamiltonian_at(
        &self,
        spec: &LatticeSpec,
        t: f64,
        sign: SignConvention,
    ) -> Result<HamiltonianMatrix> {
        let (theta, nnn) = match self.schedule {
            Schedule::ThetaRamp { rate } => (rate * t, self.nnn),
            Schedule::FixedTheta { theta, .. } => (theta, self.nnn),
            Schedule::NnnRamp { theta, rate, .. } => (theta, self.nnn.with_strength(rate * t)?),
        };
        let c = ssh_couplings(theta)?;
        Ok(build_from_couplings(spec, c.intra, c.inter, &nnn, sign))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Largest allowed step; `None` means `min(0.5, duration / 10⁴)`.
    pub dt: Option<f64>,
    pub max_steps: u64,
    pub sign: SignConvention,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: None,
            max_steps: DEFAULT_MAX_STEPS,
            sign: SignConvention::AllPositive,
        }
    }
}

pub fn default_dt(duration: f64) -> f64 {
    (duration / 1e4).min(0.5)
}

/// Step layout: `intervals` sample intervals of `substeps` equal steps each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub intervals: usize,
    pub substeps: u64,
    pub step: f64,
}

impl StepPlan {
    pub fn new(duration: f64, samples: usize, dt: f64) -> Result<Self> {
        if samples < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let intervals = samples - 1;
        let span = duration / intervals as f64;
        let substeps = (span / dt).ceil().max(1.0);
        if !substeps.is_finite() || substeps > u64::MAX as f64 / intervals as f64 {
            return Err(Error::ResourceLimit(format!(
                "duration {duration} at dt {dt} needs an unrepresentable step count"
            )));
        }
        let substeps = substeps as u64;
        Ok(Self {
            intervals,
            substeps,
            step: span / substeps as f64,
        })
    }

    pub fn total_steps(&self) -> u64 {
        self.intervals as u64 * self.substeps
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row of site populations per sample.
    pub populations: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub fidelity_vs_target: Vec<f64>,
    pub final_state: StateVector,
    pub final_fidelity: f64,
    pub steps: u64,
    pub step: f64,
}

impl Trajectory {
    /// Largest `|‖ψ(t)‖ − 1|` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.norms
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn evolve(
    spec: &LatticeSpec,
    protocol: &DriveProtocol,
    initial: &StateVector,
    target: &StateVector,
    samples: usize,
    options: &EvolveOptions,
) -> Result<Trajectory> {
    protocol.validate()?;
    let l = spec.n_sites();
    if initial.dim() != l || target.dim() != l {
        return Err(Error::invalid(format!(
            "states must have dimension {l} to match the lattice"
        )));
    }
    for (name, s) in [("initial", initial), ("target", target)] {
        if (s.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("{name} state is not normalized")));
        }
    }
    let duration = protocol.duration();
    let dt = options.dt.unwrap_or_else(|| default_dt(duration));
    let plan = StepPlan::new(duration, samples, dt)?;
    if plan.total_steps() > options.max_steps {
        return Err(Error::ResourceLimit(format!(
            "evolution needs {} steps, ceiling is {}",
            plan.total_steps(),
            options.max_steps
        )));
    }

    let mut times = Vec::with_capacity(samples);
    let mut populations = Vec::with_capacity(samples);
    let mut norms = Vec::with_capacity(samples);
    let mut fids = Vec::with_capacity(samples);
    let mut record = |t: f64, psi: &StateVector| {
        times.push(t);
        populations.push(psi.populations());
        norms.push(psi.norm());
        fids.push(fidelity(target, psi));
    };

    let mut psi = initial.0.clone();
    let span = duration / plan.intervals as f64;
    record(0.0, &StateVector(psi.clone()));
    for interval in 0..plan.intervals {
        let t0 = span * interval as f64;
        for j in 0..plan.substeps {
            let t_mid = t0 + plan.step * (j as f64 + 0.5);
            let h = protocol.hamiltonian_at(spec, t_mid, options.sign)?;
            let eig = diagonalize(&h).map_err(|e| e.with_context(format!("t = {t_mid}")))?;
            psi = apply_exponential(&eig.values, &eig.vectors, &psi, plan.step);
        }
        let t = if interval + 1 == plan.intervals {
            duration
        } else {
            span * (interval + 1) as f64
        };
        record(t, &StateVector(psi.clone()));
    }
    let final_state = StateVector(psi);
    let final_fidelity = fidelity(target, &final_state);
    Ok(Trajectory {
        times,
        populations,
        norms,
        fidelity_vs_target: fids,
        final_state,
        final_fidelity,
        steps: plan.total_steps(),
        step: plan.step,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub fidelity: f64,
    pub halved_fidelity: f64,
    pub delta: f64,
    pub passed: bool,
}

/// Re-runs the evolution with half the step and compares final fidelities.
pub fn check_convergence(
    spec: &LatticeSpec,
    protocol: &DriveProtocol,
    initial: &StateVector,
    target: &StateVector,
    reference: &Trajectory,
    options: &EvolveOptions,
) -> Result<ConvergenceCheck> {
    let halved = EvolveOptions {
        dt: Some(reference.step / 2.0),
        ..*options
    };
    let fine = evolve(spec, protocol, initial, target, 2, &halved)?;
    let delta = (fine.final_fidelity - reference.final_fidelity).abs();
    Ok(ConvergenceCheck {
        fidelity: reference.final_fidelity,
        halved_fidelity: fine.final_fidelity,
        delta,
        passed: delta <= CONVERGENCE_TOLERANCE,
    })
}
