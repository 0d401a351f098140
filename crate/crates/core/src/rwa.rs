//! Checks that the phase-modulated three-mode optomechanical model reduces
//! to the SSH trimer once `J₀(κ) = 0` removes the counter-rotating terms.
//!
//! The full model keeps `a₁, b₁, a₂` in a truncated Fock space and the
//! exact phase `2ω_b·t + κ·sin(νt + φ₀)` on the pair-creation terms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::StepPlan;
use crate::error::{Error, Result};
use crate::lattice::{build_from_couplings, LatticeSpec, NnnPlacement, SignConvention};
use crate::spectral::{diagonalize, MAX_EIGEN_SWEEPS};

pub const DEFAULT_DIM_CEILING: usize = 4096;
/// Smallest allowed `ν / ω_b`.
pub const MIN_FREQUENCY_RATIO: f64 = 5.0;
/// Relative rms shift under `n_max → n_max + 1` above which the cutoff is flagged.
pub const CUTOFF_SHIFT_LIMIT: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct DetuningInputs {
    /// `Δ_{a,n} = ω_{a,n} − ω_d`, length `N + 1`.
    pub delta_a: Vec<f64>,
    /// Single-phonon couplings `g_n`, length `N`.
    pub g: Vec<f64>,
    /// Mechanical steady-state amplitudes `β_n`, length `N`.
    pub beta: Vec<Complex64>,
}

/// Cavity detunings shifted by the static mechanical displacement `X_n = β_n* + β_n`.
///
/// First cavity: `Δ − g₁X₁`. Last cavity: `Δ + g_N·X_N`. Interior cavity
/// `n`: `Δ − g_{n−1}X_{n−1} + g_n·X_n`.
pub fn effective_detunings(inputs: &DetuningInputs) -> Result<Vec<f64>> {
    let n = inputs.g.len();
    if inputs.beta.len() != n || inputs.delta_a.len() != n + 1 || n == 0 {
        return Err(Error::invalid(format!(
            "expected N+1 detunings and N couplings/amplitudes, got {}, {}, {}",
            inputs.delta_a.len(),
            n,
            inputs.beta.len()
        )));
    }
    let shift: Vec<f64> = inputs
        .g
        .iter()
        .zip(&inputs.beta)
        .map(|(g, b)| g * (b.conj() + b).re)
        .collect();
    Ok(inputs
        .delta_a
        .iter()
        .enumerate()
        .map(|(k, d)| match k {
            0 => d - shift[0],
            k if k == n => d + shift[n - 1],
            k => d - shift[k - 1] + shift[k],
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockModelSpec {
    pub omega_b: f64,
    pub nu: f64,
    /// Modulation strength λ; the Bessel argument is `κ = 2λ`.
    pub lambda_mod: f64,
    pub g1: f64,
    pub g2: f64,
    /// Direct cavity–cavity hopping.
    pub t_direct: f64,
    pub n_max: usize,
    /// Modulation phase φ₀.
    #[serde(default)]
    pub phase: f64,
    /// Drop the pair-creation terms entirely (harness self-check).
    #[serde(default = "default_true")]
    pub counter_rotating: bool,
    #[serde(default = "default_ceiling")]
    pub dim_ceiling: usize,
}

fn default_true() -> bool {
    true
}

fn default_ceiling() -> usize {
    DEFAULT_DIM_CEILING
}

impl FockModelSpec {
    /// Validation point: `ω_b = 10`, `ν = 100`, `G₁ = G₂ = 1`, `T = 0`,
    /// `κ` at the first zero of `J₀`, `n_max = 2`.
    pub fn validation_default() -> Self {
        Self {
            omega_b: 10.0,
            nu: 100.0,
            lambda_mod: 0.5 * crate::bessel::first_j0_zero(),
            g1: 1.0,
            g2: 1.0,
            t_direct: 0.0,
            n_max: 2,
            phase: 0.0,
            counter_rotating: true,
            dim_ceiling: DEFAULT_DIM_CEILING,
        }
    }

    pub fn kappa(&self) -> f64 {
        2.0 * self.lambda_mod
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.lambda_mod = 0.5 * kappa;
        self
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(3)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_b,
            self.nu,
            self.lambda_mod,
            self.g1,
            self.g2,
            self.t_direct,
            self.phase,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("Fock model parameters must be finite"));
        }
        if self.omega_b <= 0.0 || self.nu <= 0.0 {
            return Err(Error::invalid("omega_b and nu must be positive"));
        }
        if self.nu / self.omega_b < MIN_FREQUENCY_RATIO {
            return Err(Error::invalid(format!(
                "nu / omega_b = {} is below {MIN_FREQUENCY_RATIO}; the m = 0 sideband is not isolated",
                self.nu / self.omega_b
            )));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("Fock cutoff n_max must be at least 1"));
        }
        let dim = self.levels().checked_pow(3);
        match dim {
            Some(d) if d <= self.dim_ceiling => Ok(()),
            _ => Err(Error::ResourceLimit(format!(
                "Fock dimension ({})^3 exceeds the ceiling {}",
                self.levels(),
                self.dim_ceiling
            ))),
        }
    }

    /// `2ω_b·t + 2λ·sin(νt + φ₀)`.
    pub fn counter_rotating_phase(&self, t: f64) -> f64 {
        2.0 * self.omega_b * t + 2.0 * self.lambda_mod * (self.nu * t + self.phase).sin()
    }

    /// Occupations `(n_a1, n_b1, n_a2)` of a basis index.
    pub fn occupations(&self, index: usize) -> [usize; 3] {
        let m = self.levels();
        [index / (m * m), (index / m) % m, index % m]
    }

    pub fn index(&self, occ: [usize; 3]) -> usize {
        let m = self.levels();
        occ[0] * m * m + occ[1] * m + occ[2]
    }
}

#[derive(Clone, Copy)]
enum Ladder {
    Create,
    Annihilate,
}

const A1: usize = 0;
const B1: usize = 1;
const A2: usize = 2;

/// Adds `coeff · op₁ op₂` (acting right to left on distinct modes) to `m`.
fn add_bilinear(
    spec: &FockModelSpec,
    m: &mut DMatrix<Complex64>,
    coeff: Complex64,
    ops: [(usize, Ladder); 2],
) {
    if coeff == Complex64::new(0.0, 0.0) {
        return;
    }
    let n_max = spec.n_max;
    for col in 0..spec.dim() {
        let mut occ = spec.occupations(col);
        let mut amp = 1.0f64;
        let mut alive = true;
        for &(mode, op) in ops.iter().rev() {
            match op {
                Ladder::Create => {
                    if occ[mode] == n_max {
                        alive = false;
                        break;
                    }
                    occ[mode] += 1;
                    amp *= (occ[mode] as f64).sqrt();
                }
                Ladder::Annihilate => {
                    if occ[mode] == 0 {
                        alive = false;
                        break;
                    }
                    amp *= (occ[mode] as f64).sqrt();
                    occ[mode] -= 1;
                }
            }
        }
        if alive {
            m[(spec.index(occ), col)] += coeff * amp;
        }
    }
}

/// Full pre-RWA Hamiltonian of the trimer at time `t`.
///
/// `−G₁a₁†b₁ + G₂a₂†b₁ + T·a₂†a₁ + e^{iφ(t)}(−G₁a₁†b₁† + G₂a₂†b₁†) + H.c.`
pub fn build_full_hamiltonian(spec: &FockModelSpec, t: f64) -> Result<DMatrix<Complex64>> {
    spec.validate()?;
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    use Ladder::{Annihilate, Create};
    let dim = spec.dim();
    let mut half = DMatrix::<Complex64>::zeros(dim, dim);
    let re = |x: f64| Complex64::new(x, 0.0);
    add_bilinear(
        spec,
        &mut half,
        re(-spec.g1),
        [(A1, Create), (B1, Annihilate)],
    );
    add_bilinear(
        spec,
        &mut half,
        re(spec.g2),
        [(A2, Create), (B1, Annihilate)],
    );
    add_bilinear(
        spec,
        &mut half,
        re(spec.t_direct),
        [(A2, Create), (A1, Annihilate)],
    );
    if spec.counter_rotating {
        let phase = Complex64::from_polar(1.0, spec.counter_rotating_phase(t));
        add_bilinear(
            spec,
            &mut half,
            phase * -spec.g1,
            [(A1, Create), (B1, Create)],
        );
        add_bilinear(
            spec,
            &mut half,
            phase * spec.g2,
            [(A2, Create), (B1, Create)],
        );
    }
    Ok(&half + half.adjoint())
}

fn hermitian_step(
    h: DMatrix<Complex64>,
    psi: &DVector<Complex64>,
    dt: f64,
) -> Result<DVector<Complex64>> {
    let dim = h.nrows();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_EIGEN_SWEEPS).ok_or(
        Error::NumericFailure {
            dim,
            max_iterations: MAX_EIGEN_SWEEPS,
            context: Some("Fock-space Hamiltonian".into()),
        },
    )?;
    let mut c = eig.eigenvectors.ad_mul(psi);
    for (k, e) in eig.eigenvalues.iter().enumerate() {
        c[k] *= Complex64::from_polar(1.0, -e * dt);
    }
    Ok(&eig.eigenvectors * c)
}

/// Mode occupations `⟨n_a1⟩, ⟨n_b1⟩, ⟨n_a2⟩`.
fn occupations(spec: &FockModelSpec, psi: &DVector<Complex64>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, a) in psi.iter().enumerate() {
        let p = a.norm_sqr();
        let occ = spec.occupations(i);
        for k in 0..3 {
            out[k] += p * occ[k] as f64;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedTrajectory {
    pub times: Vec<f64>,
    /// `⟨n_a1⟩, ⟨n_b1⟩, ⟨n_a2⟩` of the full model.
    pub full: Vec<[f64; 3]>,
    /// Site populations of the effective trimer.
    pub effective: Vec<[f64; 3]>,
}

impl PairedTrajectory {
    pub fn deviations(&self) -> (f64, f64) {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        let mut count = 0usize;
        for (f, e) in self.full.iter().zip(&self.effective) {
            for k in 0..3 {
                let d = f[k] - e[k];
                sum += d * d;
                max = max.max(d.abs());
                count += 1;
            }
        }
        ((sum / count as f64).sqrt(), max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwaParams {
    pub model: FockModelSpec,
    pub kappa: f64,
    pub j0_kappa: Option<f64>,
    pub duration: f64,
    pub dt: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RwaReport {
    pub params: RwaParams,
    pub rms_deviation: f64,
    pub max_deviation: f64,
    /// `|rms(n_max + 1) − rms(n_max)| / rms(n_max)`; zero when both are below 1e−9.
    pub nmax_convergence_ratio: Option<f64>,
    pub cutoff_warning: Option<String>,
    #[serde(skip)]
    pub trajectories: PairedTrajectory,
}

/// Evolves both models from a single photon in `a₁` and pairs their occupations.
pub fn simulate_pair(
    spec: &FockModelSpec,
    duration: f64,
    dt: f64,
    samples: usize,
) -> Result<PairedTrajectory> {
    spec.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    let limit = 0.02 * 2.0 * std::f64::consts::PI / spec.nu;
    if dt.is_nan() || dt <= 0.0 || dt > limit * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "dt = {dt} must be positive and at most 0.02 * 2pi / nu = {limit}"
        )));
    }
    let plan = StepPlan::new(duration, samples, dt)?;
    let span = duration / plan.intervals as f64;

    let lattice = LatticeSpec::new(1)?;
    let nnn = NnnPlacement::odd(spec.t_direct.abs())?;
    let h_eff = build_from_couplings(
        &lattice,
        spec.g1,
        spec.g2,
        &nnn,
        SignConvention::AllPositive,
    );
    let eff = diagonalize(&h_eff)?;
    let effective_at = |t: f64| -> [f64; 3] {
        // ψ(t) = V·e^{−iEt}·Vᵀ·e₁
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut z = Complex64::new(0.0, 0.0);
            for k in 0..3 {
                z += Complex64::from_polar(
                    eff.vectors[(i, k)] * eff.vectors[(0, k)],
                    -eff.values[k] * t,
                );
            }
            *o = z.norm_sqr();
        }
        out
    };

    let mut psi = DVector::<Complex64>::zeros(spec.dim());
    psi[spec.index([1, 0, 0])] = Complex64::new(1.0, 0.0);
    let mut times = vec![0.0];
    let mut full = vec![occupations(spec, &psi)];
    let mut effective = vec![effective_at(0.0)];
    for interval in 0..plan.intervals {
        let t0 = span * interval as f64;
        for j in 0..plan.substeps {
            let t_mid = t0 + plan.step * (j as f64 + 0.5);
            psi = hermitian_step(build_full_hamiltonian(spec, t_mid)?, &psi, plan.step)?;
        }
        let t = if interval + 1 == plan.intervals {
            duration
        } else {
            span * (interval + 1) as f64
        };
        times.push(t);
        full.push(occupations(spec, &psi));
        effective.push(effective_at(t));
    }
    Ok(PairedTrajectory {
        times,
        full,
        effective,
    })
}

/// Runs the comparison at `n_max` and, if `check_cutoff`, again at `n_max + 1`.
pub fn rwa_compare(
    spec: &FockModelSpec,
    duration: f64,
    dt: f64,
    samples: usize,
    check_cutoff: bool,
) -> Result<RwaReport> {
    let trajectories = simulate_pair(spec, duration, dt, samples)?;
    let (rms, max) = trajectories.deviations();
    let mut ratio = None;
    let mut warning = None;
    if check_cutoff {
        let bigger = FockModelSpec {
            n_max: spec.n_max + 1,
            ..*spec
        };
        let (rms_big, _) = simulate_pair(&bigger, duration, dt, samples)?.deviations();
        let r = if rms.max(rms_big) < 1e-9 {
            0.0
        } else {
            (rms_big - rms).abs() / rms
        };
        if r > CUTOFF_SHIFT_LIMIT {
            warning = Some(format!(
                "raising n_max to {} shifts the rms deviation by {:.1}%",
                bigger.n_max,
                100.0 * r
            ));
        }
        ratio = Some(r);
    }
    Ok(RwaReport {
        params: RwaParams {
            model: *spec,
            kappa: spec.kappa(),
            j0_kappa: crate::bessel::bessel_j0(spec.kappa()).ok(),
            duration,
            dt,
            samples,
        },
        rms_deviation: rms,
        max_deviation: max,
        nmax_convergence_ratio: ratio,
        cutoff_warning: warning,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dt_for(spec: &FockModelSpec) -> f64 {
        0.02 * 2.0 * std::f64::consts::PI / spec.nu
    }

    #[test]
    fn detuning_examples() {
        let d = effective_detunings(&DetuningInputs {
            delta_a: vec![5.0, 5.0, 5.0],
            g: vec![1.0, 1.0],
            beta: vec![Complex64::new(0.5, 0.0); 2],
        })
        .unwrap();
        assert_eq!(d, vec![4.0, 5.0, 6.0]);
        let unchanged = DetuningInputs {
            delta_a: vec![1.0, 2.0, 3.0, 4.0],
            g: vec![0.3, 0.4, 0.5],
            beta: vec![Complex64::new(0.0, 0.0); 3],
        };
        assert_eq!(effective_detunings(&unchanged).unwrap(), unchanged.delta_a);
        let zero_g = DetuningInputs {
            g: vec![0.0; 3],
            beta: vec![Complex64::new(1.0, 2.0); 3],
            ..unchanged.clone()
        };
        assert_eq!(effective_detunings(&zero_g).unwrap(), unchanged.delta_a);
        // imaginary parts of β cancel in β* + β
        let imag = DetuningInputs {
            delta_a: vec![0.0, 0.0],
            g: vec![2.0],
            beta: vec![Complex64::new(0.25, 7.0)],
        };
        assert_eq!(effective_detunings(&imag).unwrap(), vec![-1.0, 1.0]);
        let graded = DetuningInputs {
            delta_a: vec![0.0; 4],
            g: vec![1.0, 2.0, 3.0],
            beta: vec![Complex64::new(0.5, 0.0); 3],
        };
        assert_eq!(
            effective_detunings(&graded).unwrap(),
            vec![-1.0, 1.0, 1.0, 3.0]
        );
        let bad = DetuningInputs {
            g: vec![1.0],
            ..unchanged
        };
        assert!(effective_detunings(&bad).is_err());
    }

    #[test]
    fn phase_factor_is_one_at_origin() {
        let s = FockModelSpec::validation_default();
        assert_eq!(s.counter_rotating_phase(0.0), 0.0);
        let h = build_full_hamiltonian(&s, 0.0).unwrap();
        // ⟨1,1,1| a₂†b₁† |1,0,0⟩ = 1 · 1, coefficient +G₂·e^{i0}
        let (to, from) = (s.index([1, 1, 1]), s.index([1, 0, 0]));
        assert!((h[(to, from)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let s = FockModelSpec {
            g1: 0.0,
            g2: 0.0,
            t_direct: 0.0,
            ..FockModelSpec::validation_default()
        };
        let h = build_full_hamiltonian(&s, 0.37).unwrap();
        assert!(h.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_excitation_block_matches_lattice() {
        let s = FockModelSpec {
            n_max: 1,
            g1: 0.7,
            g2: 1.3,
            t_direct: 0.4,
            ..FockModelSpec::validation_default()
        };
        let h = build_full_hamiltonian(&s, 1.234).unwrap();
        let sites = [s.index([1, 0, 0]), s.index([0, 1, 0]), s.index([0, 0, 1])];
        // number-conserving part in the optomechanical sign convention
        let expected = [[0.0, -0.7, 0.4], [-0.7, 0.0, 1.3], [0.4, 1.3, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (h[(sites[i], sites[j])] - Complex64::new(expected[i][j], 0.0)).norm() < 1e-15
                );
            }
        }
        let lat = build_from_couplings(
            &LatticeSpec::new(1).unwrap(),
            0.7,
            1.3,
            &NnnPlacement::odd(0.4).unwrap(),
            SignConvention::NegativeIntra,
        );
        for i in 0..3 {
            for j in 0..3 {
                if i != j && !(i == 1 && j == 2) && !(i == 2 && j == 1) {
                    assert_eq!(lat.get(i, j), expected[i][j]);
                }
            }
        }
    }

    #[test]
    fn hermitian_and_parity_pattern() {
        let s = FockModelSpec {
            n_max: 3,
            t_direct: 0.5,
            ..FockModelSpec::validation_default()
        };
        for t in [0.0, 0.013, 0.5, 3.7] {
            let h = build_full_hamiltonian(&s, t).unwrap();
            let diff = (&h - h.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-14);
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    if h[(i, j)].norm() > 0.0 {
                        let ni: usize = s.occupations(i).iter().sum();
                        let nj: usize = s.occupations(j).iter().sum();
                        assert!(matches!(ni.abs_diff(nj), 0 | 2), "{i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        let base = FockModelSpec::validation_default();
        assert!((base.kappa() - crate::bessel::first_j0_zero()).abs() < 1e-15);
        assert!(FockModelSpec { nu: 40.0, ..base }.validate().is_err());
        assert!(FockModelSpec { n_max: 0, ..base }.validate().is_err());
        assert!(matches!(
            FockModelSpec { n_max: 16, ..base }.validate(),
            Err(Error::ResourceLimit(_))
        ));
        assert!(simulate_pair(&base, 1.0, 0.01, 11).is_err());
    }

    #[test]
    fn hermitian_step_matches_series() {
        let s = FockModelSpec {
            t_direct: 0.3,
            ..FockModelSpec::validation_default()
        };
        let h = build_full_hamiltonian(&s, 0.71).unwrap();
        let mut psi = DVector::<Complex64>::zeros(s.dim());
        psi[s.index([1, 0, 0])] = Complex64::new(0.6, 0.0);
        psi[s.index([0, 1, 1])] = Complex64::new(0.0, 0.8);
        let dt = 0.05;
        let out = hermitian_step(h.clone(), &psi, dt).unwrap();
        let a = h.map(|z| z * Complex64::new(0.0, -dt));
        let mut term = psi.clone();
        let mut reference = psi.clone();
        for k in 1..40 {
            term = &a * term / Complex64::new(k as f64, 0.0);
            reference += &term;
        }
        assert!((out - reference).norm() < 1e-12);
    }

    #[test]
    fn photon_hopping_only_matches_exactly() {
        let s = FockModelSpec {
            g1: 0.0,
            g2: 0.0,
            t_direct: 1.0,
            ..FockModelSpec::validation_default()
        };
        let r = rwa_compare(&s, 10.0, dt_for(&s), 101, false).unwrap();
        assert!(r.rms_deviation <= 1e-9, "{}", r.rms_deviation);
    }

    #[test]
    fn harness_unbiased_without_counter_rotating_terms() {
        for kappa in [0.0, 1.0, crate::bessel::first_j0_zero()] {
            let s = FockModelSpec {
                counter_rotating: false,
                t_direct: 0.3,
                ..FockModelSpec::validation_default().with_kappa(kappa)
            };
            let r = rwa_compare(&s, 3.0, dt_for(&s), 31, false).unwrap();
            assert!(
                r.rms_deviation <= 1e-9,
                "kappa {kappa}: {}",
                r.rms_deviation
            );
        }
    }
}
