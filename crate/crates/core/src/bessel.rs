//! Bessel function `J₀` and its first positive zero.

use crate::error::{Error, Result};

/// Arguments beyond this are rejected.
pub const J0_WINDOW: f64 = 20.0;

/// Below this the power series is summed directly; above it the
/// cancellation between terms costs more than 1e−13 absolute.
const SERIES_LIMIT: f64 = 8.0;

/// `J₀(x)` for `|x| ≤ 20`, accurate to about 1e−14 absolute.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > J0_WINDOW {
        return Err(Error::invalid(format!(
            "J0 is evaluated only for |x| <= {J0_WINDOW}, got {x}"
        )));
    }
    let x = x.abs();
    Ok(if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_backward_recurrence(x)
    })
}

/// `Σ (−1)^k (x/2)^{2k} / (k!)²`, summed until the terms drop below 1e−17.
fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2.0 * x {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Miller's algorithm: run `J_{n−1} = (2n/x)·J_n − J_{n+1}` downward from a
/// start order well above `x`, then normalize with `1 = J₀ + 2·Σ J_{2k}`.
fn j0_backward_recurrence(x: f64) -> f64 {
    let start = 2 * ((x as usize + 30) / 2 + 10);
    let mut next = 0.0f64; // J_{n+1}
    let mut cur = 1e-30f64; // J_n
    let mut norm = 0.0f64;
    let mut j0 = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
        }
        // cur now holds J_{n-1}
        if n == 1 {
            j0 = cur;
        } else if (n - 1) % 2 == 0 {
            norm += 2.0 * cur;
        }
    }
    norm += j0;
    j0 / norm
}

/// Smallest positive root of `J₀` (≈ 2.404825557695773).
pub fn first_j0_zero() -> f64 {
    let j0 = |x: f64| j0_series(x);
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    let f_lo = j0(lo);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if (j0(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton with J₀′ = −J₁
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = j0(x) / -j1_series(x);
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

fn j1_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..60 {
        let k = k as f64;
        term *= q / (k * (k + 1.0));
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed 64-term power series, no early exit.
    fn series64(x: f64) -> f64 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..64 {
            term *= q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!((bessel_j0(1.0).unwrap() - 0.765197686557967).abs() < 1e-12);
        // 40-digit references
        let table = [
            (0.5, 0.938_469_807_240_812_9),
            (2.5, -0.048_383_776_468_197_996),
            (5.0, -0.177_596_771_314_338_3),
            (7.5, 0.266_339_657_880_378_4),
            (8.0, 0.171_650_807_137_553_9),
            (9.0, -0.090_333_611_182_876_13),
            (10.0, -0.245_935_764_451_348_34),
            (12.5, 0.146_884_054_700_421_1),
            (15.0, -0.014_224_472_826_780_773),
            (17.5, -0.103_110_398_228_685_92),
            (20.0, 0.167_024_664_340_583_15),
            (-3.0, -0.260_051_954_901_933_44),
        ];
        for (x, want) in table {
            let got = bessel_j0(x).unwrap();
            assert!((got - want).abs() < 1e-12, "J0({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn agrees_with_fixed_series_on_0_to_5() {
        for k in 0..=500 {
            let x = 5.0 * k as f64 / 500.0;
            assert!((bessel_j0(x).unwrap() - series64(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_series_at_handover() {
        for x in [6.0, 7.0, 8.0] {
            assert!((j0_backward_recurrence(x) - j0_series(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn window() {
        assert!(bessel_j0(20.5).is_err());
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j0(-20.0).is_ok());
    }

    #[test]
    fn first_zero() {
        // bisection oracle on the evaluator, independent of the Newton refinement
        let (mut lo, mut hi) = (2.0f64, 3.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bessel_j0(mid).unwrap() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = first_j0_zero();
        assert!((root - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((root - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j0(root).unwrap().abs() <= 1e-12);
        assert!(bessel_j0(root - 1e-6).unwrap() > 0.0);
        assert!(bessel_j0(root + 1e-6).unwrap() < 0.0);
        assert!(root > 2.0 && root < 3.0);
    }
}
