//! Dense eigendecomposition, θ-resolved spectra and the in-gap branch.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, HamiltonianMatrix, LatticeSpec, NnnPlacement};

/// Sweep limit handed to the implicit QR iteration.
pub const MAX_EIGEN_SWEEPS: usize = 10_000;

/// Two branches closer than this are treated as a crossing when tracking the gap state.
pub const BRANCH_TIE_TOLERANCE: f64 = 1e-6;

/// Default number of θ samples over `[0, 2π]`.
pub const DEFAULT_THETA_POINTS: usize = 512;

/// Eigenpairs sorted by ascending eigenvalue; column `k` of `vectors` pairs with `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn diagonalize(h: &HamiltonianMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    if n == 0 {
        return Ok(Eigensystem {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(h.as_matrix().clone(), f64::EPSILON, MAX_EIGEN_SWEEPS)
        .ok_or(Error::NumericFailure {
            dim: n,
            max_iterations: MAX_EIGEN_SWEEPS,
            context: None,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(Eigensystem { values, vectors })
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Sorted index of the middle level, `N` (0-based) for `L = 2N + 1`.
    pub fn middle_index(&self) -> usize {
        self.dim() / 2
    }

    pub fn middle_energy(&self) -> f64 {
        self.eigenvalues[self.middle_index()]
    }
}

pub fn spectrum_at(spec: &LatticeSpec, theta: f64, nnn: &NnnPlacement) -> Result<SpectrumResult> {
    let h = build_hamiltonian(spec, theta, nnn)?;
    let eig = diagonalize(&h).map_err(|e| e.with_context(format!("theta = {theta}")))?;
    Ok(SpectrumResult {
        theta,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

/// `points` uniform samples over `[start, end]`, both ends included.
pub fn theta_grid(points: usize, start: f64, end: f64) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (end - start) / (points - 1) as f64;
            (0..points)
                .map(|k| {
                    if k == points - 1 {
                        end
                    } else {
                        start + step * k as f64
                    }
                })
                .collect()
        }
    }
}

pub fn spectrum_sweep(
    spec: &LatticeSpec,
    nnn: &NnnPlacement,
    thetas: &[f64],
) -> Result<Vec<SpectrumResult>> {
    if thetas.is_empty() {
        return Err(Error::invalid("theta grid is empty"));
    }
    if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(format!("theta grid contains {bad}")));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        thetas
            .par_iter()
            .map(|&t| spectrum_at(spec, t, nnn))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        thetas.iter().map(|&t| spectrum_at(spec, t, nnn)).collect()
    }
}

/// The in-gap eigenstate used as the transfer channel.
#[derive(Clone, Debug, PartialEq)]
pub struct GapState {
    pub energy: f64,
    pub amplitudes: Vec<f64>,
    pub populations: Vec<f64>,
}

/// Picks the middle branch of the sorted spectrum.
///
/// With `previous`, any branch within [`BRANCH_TIE_TOLERANCE`] of the middle
/// energy competes and the one with the largest overlap wins; the sign is
/// then aligned with `previous`. Without it the largest-magnitude amplitude
/// is made positive.
pub fn gap_state(result: &SpectrumResult, previous: Option<&GapState>) -> Result<GapState> {
    let n = result.dim();
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "gap state needs an odd number of sites, got {n}"
        )));
    }
    if let Some(p) = previous {
        if p.amplitudes.len() != n {
            return Err(Error::invalid("previous gap state has the wrong length"));
        }
    }
    let mid = result.middle_index();
    let e_mid = result.eigenvalues[mid];
    let mut chosen = mid;
    if let Some(prev) = previous {
        let prev_v = DVector::from_column_slice(&prev.amplitudes);
        let overlap = |k: usize| result.eigenvectors.column(k).dot(&prev_v).abs();
        let mut best = overlap(mid);
        for k in 0..n {
            if k != mid && (result.eigenvalues[k] - e_mid).abs() <= BRANCH_TIE_TOLERANCE {
                let o = overlap(k);
                if o > best {
                    best = o;
                    chosen = k;
                }
            }
        }
    }
    let mut amplitudes: Vec<f64> = result.eigenvectors.column(chosen).iter().copied().collect();
    let flip = match previous {
        Some(prev) => {
            let dot: f64 = amplitudes
                .iter()
                .zip(&prev.amplitudes)
                .map(|(a, b)| a * b)
                .sum();
            dot < 0.0
        }
        None => {
            let peak = amplitudes.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let lead = amplitudes
                .iter()
                .find(|x| x.abs() >= peak - 1e-12)
                .copied()
                .unwrap_or(0.0);
            lead < 0.0
        }
    };
    if flip {
        amplitudes.iter_mut().for_each(|x| *x = -*x);
    }
    let populations = amplitudes.iter().map(|x| x * x).collect();
    Ok(GapState {
        energy: result.eigenvalues[chosen],
        amplitudes,
        populations,
    })
}

/// Gap states along a θ grid, each one tracked from its predecessor.
pub fn track_gap_states(results: &[SpectrumResult]) -> Result<Vec<GapState>> {
    let mut out: Vec<GapState> = Vec::with_capacity(results.len());
    for r in results {
        let g = gap_state(r, out.last())?;
        out.push(g);
    }
    Ok(out)
}
