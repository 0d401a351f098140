//! (Ω, T) fidelity maps over θ-ramp evolutions.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    check_convergence, default_dt, edge_state, evolve, DriveProtocol, EdgeSite, EvolveOptions,
    StepPlan,
};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, NnnPlacement, NnnSites};

pub const DEFAULT_STEP_CEILING: u64 = 2_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub lattice: LatticeSpec,
    pub placement: NnnSites,
    pub omega_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub initial: EdgeSite,
    pub target: EdgeSite,
    /// Largest step; `None` uses the per-cell default `min(0.5, duration / 10⁴)`.
    pub dt: Option<f64>,
    /// Re-run every cell at half the step and flag the result.
    pub check_convergence: bool,
    pub step_ceiling: u64,
}

/// `points` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|k| match k {
                    0 => lo,
                    k if k == points - 1 => hi,
                    k => (a + (b - a) * k as f64 / (points - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

pub fn lin_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    crate::spectral::theta_grid(points, lo, hi)
}

impl SweepPlan {
    /// Photonic map on cavity NNN: Ω in [10⁻⁴, 5·10⁻²] (16 log), T in [0, 0.8] (17).
    pub fn photonic_default() -> Self {
        Self {
            lattice: LatticeSpec::new(10).expect("valid"),
            placement: NnnSites::Odd,
            omega_grid: log_space(1e-4, 5e-2, 16),
            t_grid: lin_space(0.0, 0.8, 17),
            initial: EdgeSite::L,
            target: EdgeSite::R,
            dt: None,
            check_convergence: false,
            step_ceiling: DEFAULT_STEP_CEILING,
        }
    }

    /// Phononic map: Ω in [10⁻⁵, 10⁻³] (6 log), T in [0, 8] (9), `|L′⟩ → |R′⟩`.
    pub fn phononic_default() -> Self {
        Self {
            omega_grid: log_space(1e-5, 1e-3, 6),
            t_grid: lin_space(0.0, 8.0, 9),
            initial: EdgeSite::Lp,
            target: EdgeSite::Rp,
            ..Self::photonic_default()
        }
    }

    /// Resonator NNN, `|L⟩ → |R⟩`: Ω in [10⁻⁴, 5·10⁻²] (16 log), T in [0, 8] (9).
    pub fn even_sites_default() -> Self {
        Self {
            placement: NnnSites::Even,
            t_grid: lin_space(0.0, 8.0, 9),
            ..Self::photonic_default()
        }
    }

    /// Coarse 8×9 grid bracketing Ω = 0.01 and T = 0.4 and containing (10⁻³, 6).
    pub fn threshold_grid() -> Self {
        Self {
            omega_grid: vec![1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 5e-2],
            t_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 1.0, 2.0, 6.0],
            ..Self::photonic_default()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.omega_grid.len() * self.t_grid.len()
    }

    fn cell(&self, index: usize) -> (f64, f64) {
        let nt = self.t_grid.len();
        (self.omega_grid[index / nt], self.t_grid[index % nt])
    }

    /// Steps one cell will take, including the convergence re-run.
    pub fn cell_steps(&self, omega: f64) -> Result<u64> {
        let duration = std::f64::consts::PI / omega;
        let dt = self.dt.unwrap_or_else(|| default_dt(duration));
        let main = StepPlan::new(duration, 2, dt)?;
        let mut steps = main.total_steps();
        if self.check_convergence {
            steps += StepPlan::new(duration, 2, main.step / 2.0)?.total_steps();
        }
        Ok(steps)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("omega", &self.omega_grid), ("T", &self.t_grid)] {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} grid is empty")));
            }
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("{name} grid has non-finite values")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "{name} grid must be strictly increasing"
                )));
            }
        }
        if self.omega_grid[0] <= 0.0 {
            return Err(Error::invalid("ramp rates must be positive"));
        }
        if self.t_grid[0] < 0.0 {
            return Err(Error::invalid("NNN strengths must be nonnegative"));
        }
        if self.placement == NnnSites::None && self.t_grid.iter().any(|&t| t != 0.0) {
            return Err(Error::invalid(
                "nonzero T values need an odd or even placement",
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid(format!("dt must be positive, got {dt}")));
            }
        }
        let per_row: Vec<u64> = self
            .omega_grid
            .iter()
            .map(|&o| self.cell_steps(o))
            .collect::<Result<_>>()?;
        let nt = self.t_grid.len() as u64;
        let total = per_row
            .iter()
            .fold(0u64, |acc, s| acc.saturating_add(s.saturating_mul(nt)));
        if total > self.step_ceiling {
            let share = self.step_ceiling / self.cell_count() as u64;
            let offending: Vec<String> = self
                .omega_grid
                .iter()
                .zip(&per_row)
                .filter(|(_, &s)| s > share)
                .flat_map(|(o, s)| {
                    self.t_grid
                        .iter()
                        .map(move |t| format!("(omega={o}, T={t}): {s} steps"))
                })
                .collect();
            return Err(Error::ResourceLimit(format!(
                "sweep needs {total} steps, ceiling is {}; offending cells: {}",
                self.step_ceiling,
                offending.join(", ")
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convergence {
    Passed,
    Failed,
    Unchecked,
    Error,
}

impl Convergence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convergence::Passed => "true",
            Convergence::Failed => "false",
            Convergence::Unchecked => "unchecked",
            Convergence::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub t_strength: f64,
    /// NaN when the cell failed.
    pub fidelity: f64,
    pub steps: u64,
    pub converged: Convergence,
    /// Largest norm deviation of the primary run; NaN when the cell failed.
    pub norm_drift: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, omega: f64, t: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.omega == omega && r.t_strength == t)
    }
}

fn run_cell(plan: &SweepPlan, omega: f64, t: f64) -> SweepRow {
    let attempt = || -> Result<(f64, u64, Convergence, f64)> {
        let nnn = NnnPlacement::new(plan.placement, t)?;
        let protocol = DriveProtocol::theta_ramp(omega, nnn)?;
        let init = edge_state(&plan.lattice, plan.initial);
        let target = edge_state(&plan.lattice, plan.target);
        let options = EvolveOptions {
            dt: plan.dt,
            max_steps: u64::MAX,
            ..Default::default()
        };
        let tr = evolve(&plan.lattice, &protocol, &init, &target, 2, &options)?;
        if !plan.check_convergence {
            return Ok((
                tr.final_fidelity,
                tr.steps,
                Convergence::Unchecked,
                tr.max_norm_drift(),
            ));
        }
        let check = check_convergence(&plan.lattice, &protocol, &init, &target, &tr, &options)?;
        let steps = tr.steps + StepPlan::new(protocol.duration(), 2, tr.step / 2.0)?.total_steps();
        let flag = if check.passed {
            Convergence::Passed
        } else {
            Convergence::Failed
        };
        Ok((tr.final_fidelity, steps, flag, tr.max_norm_drift()))
    };
    match attempt() {
        Ok((fidelity, steps, converged, norm_drift)) => SweepRow {
            omega,
            t_strength: t,
            fidelity,
            steps,
            converged,
            norm_drift,
            error: None,
        },
        Err(e) => SweepRow {
            omega,
            t_strength: t,
            fidelity: f64::NAN,
            steps: 0,
            converged: Convergence::Error,
            norm_drift: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every cell, row-major over Ω then T, on `workers` threads.
///
/// Cell failures are recorded in their rows; only an invalid plan is an error.
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<SweepResult> {
    plan.validate()?;
    let cells: Vec<(f64, f64)> = (0..plan.cell_count()).map(|i| plan.cell(i)).collect();
    let rows = run_cells(plan, &cells, workers.max(1))?;
    Ok(SweepResult { rows })
}

#[cfg(feature = "parallel")]
fn run_cells(plan: &SweepPlan, cells: &[(f64, f64)], workers: usize) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    if workers == 1 {
        return Ok(cells.iter().map(|&(o, t)| run_cell(plan, o, t)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(o, t)| run_cell(plan, o, t))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_cells(plan: &SweepPlan, cells: &[(f64, f64)], _workers: usize) -> Result<Vec<SweepRow>> {
    Ok(cells.iter().map(|&(o, t)| run_cell(plan, o, t)).collect())
}
