//! Browser bindings for the spectrum, gap-state and transfer computations.
//!
//! Every export returns a flat `Float64Array`; the row layout is given on each function.

use ssh_transfer::dynamics::{edge_state, evolve, DriveProtocol, EdgeSite, EvolveOptions};
use ssh_transfer::lattice::{LatticeSpec, NnnPlacement, NnnSites};
use ssh_transfer::spectral::{gap_state, spectrum_at, spectrum_sweep, theta_grid};
use wasm_bindgen::prelude::*;

/// Largest chain the page accepts, in cells.
pub const MAX_CELLS: usize = 40;

fn lattice(cells: usize, placement: &str, t: f64) -> Result<(LatticeSpec, NnnPlacement), String> {
    if cells > MAX_CELLS {
        return Err(format!("at most {MAX_CELLS} cells"));
    }
    let spec = LatticeSpec::new(cells).map_err(|e| e.to_string())?;
    let sites: NnnSites = placement
        .parse()
        .map_err(|e: ssh_transfer::Error| e.to_string())?;
    let t = if sites == NnnSites::None { 0.0 } else { t };
    let nnn = NnnPlacement::new(sites, t).map_err(|e| e.to_string())?;
    Ok((spec, nnn))
}

/// Rows of `[θ, E₁, …, E_L]` over `points` values of θ in `[0, 2π]`.
pub fn spectrum_rows(
    cells: usize,
    placement: &str,
    t: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let (spec, nnn) = lattice(cells, placement, t)?;
    let grid = theta_grid(points, 0.0, 2.0 * std::f64::consts::PI);
    let results = spectrum_sweep(&spec, &nnn, &grid).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(points * (spec.n_sites() + 1));
    for r in results {
        out.push(r.theta);
        out.extend(r.eigenvalues.iter());
    }
    Ok(out)
}

/// `[E, p₁, …, p_L]` for the gap state at `theta`.
pub fn localization_row(
    cells: usize,
    placement: &str,
    t: f64,
    theta: f64,
) -> Result<Vec<f64>, String> {
    let (spec, nnn) = lattice(cells, placement, t)?;
    let result = spectrum_at(&spec, theta, &nnn).map_err(|e| e.to_string())?;
    let g = gap_state(&result, None).map_err(|e| e.to_string())?;
    let mut out = vec![g.energy];
    out.extend(g.populations);
    Ok(out)
}

/// Rows of `[t, fidelity, p₁, …, p_L]` for a θ ramp at rate `omega`.
pub fn transfer_rows(
    cells: usize,
    placement: &str,
    t: f64,
    omega: f64,
    init: &str,
    target: &str,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let (spec, nnn) = lattice(cells, placement, t)?;
    if omega.is_nan() || omega < 1e-4 {
        return Err("ramp rate must be at least 1e-4 in the browser".into());
    }
    let init: EdgeSite = init
        .parse()
        .map_err(|e: ssh_transfer::Error| e.to_string())?;
    let target: EdgeSite = target
        .parse()
        .map_err(|e: ssh_transfer::Error| e.to_string())?;
    let protocol = DriveProtocol::theta_ramp(omega, nnn).map_err(|e| e.to_string())?;
    let tr = evolve(
        &spec,
        &protocol,
        &edge_state(&spec, init),
        &edge_state(&spec, target),
        samples,
        &EvolveOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(samples * (spec.n_sites() + 2));
    for ((time, f), pops) in tr
        .times
        .iter()
        .zip(&tr.fidelity_vs_target)
        .zip(&tr.populations)
    {
        out.push(*time);
        out.push(*f);
        out.extend(pops);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn spectrum(cells: usize, placement: &str, t: f64, points: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(cells, placement, t, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn localization(
    cells: usize,
    placement: &str,
    t: f64,
    theta: f64,
) -> Result<Vec<f64>, JsError> {
    localization_row(cells, placement, t, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn transfer(
    cells: usize,
    placement: &str,
    t: f64,
    omega: f64,
    init: &str,
    target: &str,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    transfer_rows(cells, placement, t, omega, init, target, samples).map_err(|e| JsError::new(&e))
}
