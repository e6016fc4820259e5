//! Line spectral pairs of the generalized-cepstral polynomial
//! `A(z) = 1 + gamma * sum_{m=1..M} c_m z^-m`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GRID: usize = 4096;
const BISECT_TOL: f64 = 1e-10;

fn polynomial(coefs: &[f64], gamma: f64) -> Vec<f64> {
    std::iter::once(1.0).chain(coefs.iter().map(|c| gamma * c)).collect()
}

/// Sum (`P`) and difference (`Q`) polynomial coefficients, degree `M + 1`.
fn sum_difference(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len(); // M + 1
    let at = |k: usize| if k < n { a[k] } else { 0.0 };
    let p = (0..=n).map(|k| at(k) + at(n - k)).collect();
    let q = (0..=n).map(|k| at(k) - at(n - k)).collect();
    (p, q)
}

/// `e^{j w (M+1)/2} P(e^{jw})` (real) and `-j e^{j w (M+1)/2} Q(e^{jw})` (real).
fn zero_phase(coefs: &[f64], omega: f64, sine: bool) -> f64 {
    let half = (coefs.len() - 1) as f64 / 2.0;
    coefs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let arg = (half - k as f64) * omega;
            c * if sine { arg.sin() } else { arg.cos() }
        })
        .sum()
}

fn roots_on_grid(coefs: &[f64], sine: bool) -> Vec<f64> {
    let f = |w: f64| zero_phase(coefs, w, sine);
    let mut roots = Vec::new();
    let mut lo = PI / GRID as f64;
    let mut flo = f(lo);
    for i in 2..GRID {
        let hi = PI * i as f64 / GRID as f64;
        let fhi = f(hi);
        if flo == 0.0 {
            roots.push(lo);
        } else if flo.signum() != fhi.signum() && fhi != 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, flo);
            while b - a > BISECT_TOL {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        flo = fhi;
    }
    roots
}

/// Converts normalized generalized cepstral coefficients `c_1..c_M` to `M`
/// ascending line spectral frequencies in `(0, pi)`.
///
/// Fails with [`Error::UnstableFrame`] when the roots of the sum and
/// difference polynomials do not interlace on the unit circle, which happens
/// when `A` is not minimum phase.
pub fn mgc_to_lsp(coefs: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let m = coefs.len();
    let a = polynomial(coefs, gamma);
    let (p, q) = sum_difference(&a);
    let rp = roots_on_grid(&p, false);
    let rq = roots_on_grid(&q, true);
    let found = rp.len() + rq.len();
    if found != m || rp.len() != m.div_ceil(2) {
        return Err(Error::UnstableFrame { found, expected: m });
    }
    let mut lsp = Vec::with_capacity(m);
    for i in 0..m {
        lsp.push(if i % 2 == 0 { rp[i / 2] } else { rq[i / 2] });
    }
    if !is_valid_lsp(&lsp) {
        return Err(Error::UnstableFrame { found, expected: m });
    }
    Ok(lsp)
}

/// Strictly ascending and inside `(0, pi)`.
pub fn is_valid_lsp(lsp: &[f64]) -> bool {
    lsp.iter().all(|w| w.is_finite() && *w > 0.0 && *w < PI) && lsp.windows(2).all(|w| w[0] < w[1])
}

fn multiply(poly: &[f64], factor: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + factor.len() - 1];
    for (i, a) in poly.iter().enumerate() {
        for (j, b) in factor.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Inverse of [`mgc_to_lsp`].
pub fn lsp_to_mgc(lsp: &[f64], gamma: f64) -> Vec<f64> {
    let m = lsp.len();
    let (mut p, mut q) = if m.is_multiple_of(2) {
        (vec![1.0, 1.0], vec![1.0, -1.0])
    } else {
        (vec![1.0], vec![1.0, 0.0, -1.0])
    };
    for (i, w) in lsp.iter().enumerate() {
        let quad = [1.0, -2.0 * w.cos(), 1.0];
        if i % 2 == 0 {
            p = multiply(&p, &quad);
        } else {
            q = multiply(&q, &quad);
        }
    }
    (1..=m).map(|k| 0.5 * (p[k] + q[k]) / gamma).collect()
}

/// Whether `1 + sum a_m z^-m` has all zeros strictly inside the unit
/// circle (step-down recursion on the reflection coefficients).
pub fn is_minimum_phase(coefs: &[f64], gamma: f64) -> bool {
    let mut a: Vec<f64> = polynomial(coefs, gamma);
    while a.len() > 1 {
        let n = a.len() - 1;
        let k = a[n];
        if !(k.abs() < 1.0) {
            return false;
        }
        let d = 1.0 - k * k;
        a = (0..n).map(|i| (a[i] - k * a[n - i]) / d).collect();
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GAMMA: f64 = -1.0 / 3.0;

    /// Coefficients whose polynomial has the given zeros (conjugate pairs
    /// plus optional real zeros).
    fn from_zeros(pairs: &[(f64, f64)], reals: &[f64]) -> Vec<f64> {
        let mut a = vec![1.0];
        for &(r, th) in pairs {
            a = multiply(&a, &[1.0, -2.0 * r * th.cos(), r * r]);
        }
        for &r in reals {
            a = multiply(&a, &[1.0, -r]);
        }
        a[1..].iter().map(|v| v / GAMMA).collect()
    }

    #[test]
    fn flat_spectrum_gives_equal_spacing() {
        for m in [24usize, 7] {
            let lsp = mgc_to_lsp(&vec![0.0; m], GAMMA).unwrap();
            for (k, w) in lsp.iter().enumerate() {
                assert!((w - (k + 1) as f64 * PI / (m + 1) as f64).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn unstable_polynomial_is_rejected() {
        // zeros outside the unit circle
        let c = from_zeros(&[(1.3, 0.5), (0.5, 1.0)], &[]);
        assert!(!is_minimum_phase(&c, GAMMA));
        assert!(matches!(
            mgc_to_lsp(&c, GAMMA),
            Err(Error::UnstableFrame { expected: 4, .. })
        ));
    }

    #[test]
    fn known_second_order() {
        let c = from_zeros(&[(0.9, 1.0)], &[]);
        let lsp = mgc_to_lsp(&c, GAMMA).unwrap();
        // both LSPs bracket the pole angle
        assert!(lsp[0] < 1.0 && lsp[1] > 1.0);
        let back = lsp_to_mgc(&lsp, GAMMA);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    fn stable_frame(order: usize) -> impl Strategy<Value = Vec<f64>> {
        let pairs = proptest::collection::vec((0.05..0.95f64, 0.05..3.09f64), order / 2);
        let real = proptest::collection::vec(-0.9..0.9f64, order % 2);
        (pairs, real).prop_map(|(p, r)| from_zeros(&p, &r))
    }

    proptest! {
        #[test]
        fn round_trip(c in stable_frame(24)) {
            prop_assume!(is_minimum_phase(&c, GAMMA));
            let lsp = mgc_to_lsp(&c, GAMMA).unwrap();
            prop_assert!(is_valid_lsp(&lsp));
            let back = lsp_to_mgc(&lsp, GAMMA);
            for (a, b) in c.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
            }
        }

        #[test]
        fn round_trip_odd_order(c in stable_frame(5)) {
            let lsp = mgc_to_lsp(&c, GAMMA).unwrap();
            prop_assert!(is_valid_lsp(&lsp));
            let back = lsp_to_mgc(&lsp, GAMMA);
            for (a, b) in c.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn valid_lsp_maps_to_minimum_phase(mut w in proptest::collection::vec(0.01..3.13f64, 24)) {
            w.sort_by(f64::total_cmp);
            prop_assume!(w.windows(2).all(|p| p[1] - p[0] > 1e-3));
            let c = lsp_to_mgc(&w, GAMMA);
            prop_assert!(is_minimum_phase(&c, GAMMA));
        }
    }
}
