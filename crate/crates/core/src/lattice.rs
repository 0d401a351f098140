//! Single-excitation Hamiltonian of the modulated SSH chain.
//!
//! Sites are indexed `0..L` in code; site `i` here is site `i + 1` in the
//! usual 1-based labelling, so even indices are cavities `a_n` and odd
//! indices are mechanical resonators `b_n`. The energy unit is `G₀ = 1`
//! (physically this presumes `G₀ ≤ ω_b / 2`).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chain of `n_cells` unit cells plus one closing cavity: `L = 2N + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpecRaw", into = "LatticeSpecRaw")]
pub struct LatticeSpec {
    n_cells: usize,
}

#[derive(Serialize, Deserialize)]
struct LatticeSpecRaw {
    n_cells: usize,
}

impl TryFrom<LatticeSpecRaw> for LatticeSpec {
    type Error = Error;
    fn try_from(raw: LatticeSpecRaw) -> Result<Self> {
        LatticeSpec::new(raw.n_cells)
    }
}

impl From<LatticeSpec> for LatticeSpecRaw {
    fn from(spec: LatticeSpec) -> Self {
        LatticeSpecRaw {
            n_cells: spec.n_cells,
        }
    }
}

impl LatticeSpec {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::invalid("lattice needs at least one unit cell"));
        }
        Ok(Self { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_sites(&self) -> usize {
        2 * self.n_cells + 1
    }

    /// Physical role of the 0-based site index.
    pub fn site_role(&self, site: usize) -> Option<SiteRole> {
        if site >= self.n_sites() {
            return None;
        }
        Some(if site.is_multiple_of(2) {
            SiteRole::Cavity(site / 2 + 1)
        } else {
            SiteRole::Resonator(site / 2 + 1)
        })
    }
}

/// `Cavity(n)` is `a_n`, `Resonator(n)` is `b_n` (both 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteRole {
    Cavity(usize),
    Resonator(usize),
}

/// Which sublattice carries the next-nearest-neighbor hopping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NnnSites {
    None,
    /// Cavity–cavity pairs (sites 2n−1, 2n+1 in 1-based labels).
    Odd,
    /// Resonator–resonator pairs (sites 2n, 2n+2).
    Even,
}

impl FromStr for NnnSites {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NnnSites::None),
            "odd" | "cavity" | "cavities" => Ok(NnnSites::Odd),
            "even" | "resonator" | "resonators" => Ok(NnnSites::Even),
            "both" | "all" => Err(Error::invalid(
                "NNN hopping on odd and even sites at once is not supported",
            )),
            other => Err(Error::invalid(format!("unknown NNN placement `{other}`"))),
        }
    }
}

impl fmt::Display for NnnSites {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NnnSites::None => "none",
            NnnSites::Odd => "odd",
            NnnSites::Even => "even",
        })
    }
}

/// Partial NNN hopping: placement and strength `T ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NnnPlacementRaw", into = "NnnPlacementRaw")]
pub struct NnnPlacement {
    sites: NnnSites,
    strength: f64,
}

#[derive(Serialize, Deserialize)]
struct NnnPlacementRaw {
    sites: NnnSites,
    #[serde(default)]
    strength: f64,
}

impl TryFrom<NnnPlacementRaw> for NnnPlacement {
    type Error = Error;
    fn try_from(raw: NnnPlacementRaw) -> Result<Self> {
        NnnPlacement::new(raw.sites, raw.strength)
    }
}

impl From<NnnPlacement> for NnnPlacementRaw {
    fn from(p: NnnPlacement) -> Self {
        NnnPlacementRaw {
            sites: p.sites,
            strength: p.strength,
        }
    }
}

impl Default for NnnPlacement {
    fn default() -> Self {
        Self::none()
    }
}

impl NnnPlacement {
    /// A `None` placement always carries zero strength, whatever is passed.
    pub fn new(sites: NnnSites, strength: f64) -> Result<Self> {
        if sites == NnnSites::None {
            return Ok(Self::none());
        }
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::invalid(format!(
                "NNN strength must be finite and nonnegative, got {strength}"
            )));
        }
        Ok(Self { sites, strength })
    }

    pub fn none() -> Self {
        Self {
            sites: NnnSites::None,
            strength: 0.0,
        }
    }

    pub fn odd(strength: f64) -> Result<Self> {
        Self::new(NnnSites::Odd, strength)
    }

    pub fn even(strength: f64) -> Result<Self> {
        Self::new(NnnSites::Even, strength)
    }

    pub fn sites(&self) -> NnnSites {
        self.sites
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn with_strength(&self, strength: f64) -> Result<Self> {
        Self::new(self.sites, strength)
    }
}

/// SSH bond strengths at one point of the θ cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub theta: f64,
    pub intra: f64,
    pub inter: f64,
}

/// `intra = 1 − cos θ`, `inter = 1 + cos θ`.
pub fn ssh_couplings(theta: f64) -> Result<CouplingPoint> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("theta must be finite, got {theta}")));
    }
    let c = theta.cos();
    Ok(CouplingPoint {
        theta,
        intra: 1.0 - c,
        inter: 1.0 + c,
    })
}

/// Sign attached to the intra-cell bonds.
///
/// The optomechanical form carries `−Gₙ` on the `aₙ†bₙ` terms; the ramp
/// Hamiltonian writes every bond positive. At `T = 0` the two are related by
/// a site-local sign change and have identical spectra and populations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    #[default]
    AllPositive,
    NegativeIntra,
}

/// Real symmetric `L×L` matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix(DMatrix<f64>);

impl HamiltonianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// Wraps an arbitrary matrix after checking it is square, finite and exactly symmetric.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("Hamiltonian must be square"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("Hamiltonian has non-finite entries"));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::invalid(format!(
                        "Hamiltonian is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    fn set_pair(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
        self.0[(j, i)] = value;
    }
}

/// Hamiltonian at angle θ with the all-positive bond convention.
pub fn build_hamiltonian(
    spec: &LatticeSpec,
    theta: f64,
    nnn: &NnnPlacement,
) -> Result<HamiltonianMatrix> {
    let c = ssh_couplings(theta)?;
    Ok(build_from_couplings(
        spec,
        c.intra,
        c.inter,
        nnn,
        SignConvention::AllPositive,
    ))
}

/// Hamiltonian from explicit bond strengths.
///
/// Bond `(2n−1, 2n)` gets `intra`, `(2n, 2n+1)` gets `inter`, and the NNN
/// pairs of the chosen sublattice get `nnn.strength()`.
pub fn build_from_couplings(
    spec: &LatticeSpec,
    intra: f64,
    inter: f64,
    nnn: &NnnPlacement,
    sign: SignConvention,
) -> HamiltonianMatrix {
    let l = spec.n_sites();
    let mut h = HamiltonianMatrix::zeros(l);
    let intra = match sign {
        SignConvention::AllPositive => intra,
        SignConvention::NegativeIntra => -intra,
    };
    for cell in 0..spec.n_cells() {
        let a = 2 * cell;
        h.set_pair(a, a + 1, intra);
        h.set_pair(a + 1, a + 2, inter);
    }
    let first = match nnn.sites() {
        NnnSites::None => None,
        NnnSites::Odd => Some(0),
        NnnSites::Even => Some(1),
    };
    if let Some(first) = first {
        if nnn.strength() != 0.0 {
            let mut i = first;
            while i + 2 < l {
                h.set_pair(i, i + 2, nnn.strength());
                i += 2;
            }
        }
    }
    h
}

/// Diagonal of the sublattice operator `S = diag(+1, −1, +1, …)`.
pub fn sublattice_parity(spec: &LatticeSpec) -> Vec<f64> {
    (0..spec.n_sites())
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Largest entry of `|S·H·S + H|`; zero iff `H` is chiral under `S`.
pub fn chiral_violation(h: &HamiltonianMatrix) -> f64 {
    let n = h.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            worst = worst.max((s * h.get(i, j) + h.get(i, j)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec(n: usize) -> LatticeSpec {
        LatticeSpec::new(n).unwrap()
    }

    #[test]
    fn couplings_at_special_angles() {
        let c = ssh_couplings(FRAC_PI_2).unwrap();
        assert!((c.intra - 1.0).abs() < 1e-15 && (c.inter - 1.0).abs() < 1e-15);
        let c = ssh_couplings(0.0).unwrap();
        assert_eq!((c.intra, c.inter), (0.0, 2.0));
        let c = ssh_couplings(PI).unwrap();
        assert_eq!((c.intra, c.inter), (2.0, 0.0));
        assert!(ssh_couplings(f64::NAN).is_err());
        assert!(ssh_couplings(f64::INFINITY).is_err());
    }

    #[test]
    fn site_count_and_roles() {
        assert!(LatticeSpec::new(0).is_err());
        let s = spec(10);
        assert_eq!(s.n_sites(), 21);
        assert_eq!(s.site_role(0), Some(SiteRole::Cavity(1)));
        assert_eq!(s.site_role(1), Some(SiteRole::Resonator(1)));
        assert_eq!(s.site_role(20), Some(SiteRole::Cavity(11)));
        assert_eq!(s.site_role(21), None);
    }

    #[test]
    fn trimer_matrices() {
        let h = build_hamiltonian(&spec(1), FRAC_PI_2, &NnnPlacement::none()).unwrap();
        let expected = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
        let h2 = build_hamiltonian(&spec(1), FRAC_PI_2, &NnnPlacement::odd(0.2).unwrap()).unwrap();
        assert_eq!(h2.get(0, 2), 0.2);
        assert_eq!(h2.get(2, 0), 0.2);
        assert_eq!(h2.get(0, 1), h.get(0, 1));
    }

    #[test]
    fn no_nnn_is_tridiagonal() {
        let h = build_hamiltonian(&spec(10), 0.37, &NnnPlacement::none()).unwrap();
        for i in 0..21usize {
            for j in 0..21 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn placement_parity() {
        let s = spec(4);
        let odd = build_hamiltonian(&s, 1.0, &NnnPlacement::odd(3.0).unwrap()).unwrap();
        let even = build_hamiltonian(&s, 1.0, &NnnPlacement::even(3.0).unwrap()).unwrap();
        for i in 0..s.n_sites() - 2 {
            let (o, e) = (odd.get(i, i + 2), even.get(i, i + 2));
            if i % 2 == 0 {
                assert_eq!((o, e), (3.0, 0.0));
            } else {
                assert_eq!((o, e), (0.0, 3.0));
            }
        }
    }

    #[test]
    fn placement_validation() {
        assert!(NnnPlacement::odd(-0.1).is_err());
        assert!(NnnPlacement::even(f64::NAN).is_err());
        let p = NnnPlacement::new(NnnSites::None, 5.0).unwrap();
        assert_eq!(p.strength(), 0.0);
        assert!("both".parse::<NnnSites>().is_err());
        assert_eq!("odd".parse::<NnnSites>().unwrap(), NnnSites::Odd);
    }

    #[test]
    fn odd_sites_break_chiral_symmetry() {
        let h = build_hamiltonian(&spec(10), 0.8, &NnnPlacement::odd(0.5).unwrap()).unwrap();
        assert!(chiral_violation(&h) > 0.0);
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(HamiltonianMatrix::from_matrix(m).is_err());
    }

    fn placement() -> impl Strategy<Value = NnnPlacement> {
        (0..3u8, 0.0..8.0f64).prop_map(|(k, t)| match k {
            0 => NnnPlacement::none(),
            1 => NnnPlacement::odd(t).unwrap(),
            _ => NnnPlacement::even(t).unwrap(),
        })
    }

    proptest! {
        #[test]
        fn symmetric_zero_diagonal(n in 1usize..12, theta in -10.0..10.0f64, p in placement()) {
            let h = build_hamiltonian(&spec(n), theta, &p).unwrap();
            for i in 0..h.dim() {
                prop_assert_eq!(h.get(i, i), 0.0);
                for j in 0..h.dim() {
                    prop_assert_eq!(h.get(i, j), h.get(j, i));
                    let d = i.abs_diff(j);
                    if d > 2 || (d == 2 && h.get(i, j) != 0.0 && (p.sites() == NnnSites::None
                        || (p.sites() == NnnSites::Odd) != (i % 2 == 0))) {
                        prop_assert_eq!(h.get(i, j), 0.0);
                    }
                }
            }
        }

        #[test]
        fn chiral_without_nnn(n in 1usize..12, theta in -10.0..10.0f64) {
            let h = build_hamiltonian(&spec(n), theta, &NnnPlacement::none()).unwrap();
            prop_assert_eq!(chiral_violation(&h), 0.0);
        }

        #[test]
        fn couplings_periodic(theta in -50.0..50.0f64) {
            let a = ssh_couplings(theta).unwrap();
            let b = ssh_couplings(theta + 2.0 * PI).unwrap();
            prop_assert!((a.intra - b.intra).abs() < 1e-12);
            prop_assert!((a.inter - b.inter).abs() < 1e-12);
            prop_assert!((a.intra + a.inter - 2.0).abs() < 1e-15);
            prop_assert!(a.intra >= 0.0 && a.inter <= 2.0);
        }
    }
}
