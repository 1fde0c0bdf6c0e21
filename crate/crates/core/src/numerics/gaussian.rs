//! Normal-law helpers and truncated-Gaussian moments.
//!
//! Everything here is expressed through `erfc`/`erfcx` so that interval
//! masses, posterior weights and truncated means stay accurate far into the
//! tails (standardized offsets of 38 and beyond), where naive `Phi`
//! differences underflow or cancel.

use crate::error::{Error, Result};
use crate::numerics::erf::{erfc, erfcx};

pub const LN_2PI: f64 = 1.8378770664093453;
pub const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;
const SQRT_2_OVER_PI: f64 = 0.7978845608028654;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal upper-tail probability `P(Z > x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF `P(Z <= x)`.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `ln P(Z > x)`, accurate for all `x` (no underflow until `x ~ 1e154`).
pub fn log_norm_sf(x: f64) -> f64 {
    if x <= 0.0 {
        (-norm_sf(-x)).ln_1p()
    } else {
        -0.5 * x * x + (0.5 * erfcx(x * FRAC_1_SQRT_2)).ln()
    }
}

/// Log-density of `N(mean, var)` at `x`.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + var.ln() + LN_2PI)
}

/// Mass, mean and variance of a Gaussian restricted to an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussianMoments {
    /// Probability of the interval under the parent Gaussian.
    pub mass: f64,
    /// Mean of the restriction.
    pub mean: f64,
    /// Variance of the restriction.
    pub variance: f64,
}

/// Moments of `N(m, v)` restricted to `[a, b]` (`a`/`b` may be infinite).
pub fn truncated_gaussian_moments(
    m: f64,
    v: f64,
    a: f64,
    b: f64,
) -> Result<TruncatedGaussianMoments> {
    if !m.is_finite() || !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncated_gaussian_moments: mean {m}, variance {v}"
        )));
    }
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "truncated_gaussian_moments: interval [{a}, {b}]"
        )));
    }
    let sigma = v.sqrt();
    let alpha = (a - m) / sigma;
    let beta = (b - m) / sigma;
    let (log_mass, mean_std, var_std) = std_truncated_moments(alpha, beta);
    Ok(TruncatedGaussianMoments {
        mass: log_mass.exp().min(1.0),
        mean: m + sigma * mean_std,
        variance: v * var_std,
    })
}

/// Standardized truncated moments: `(log mass, mean, variance)` of `N(0,1)`
/// restricted to `(alpha, beta)`.
pub(crate) fn std_truncated_moments(alpha: f64, beta: f64) -> (f64, f64, f64) {
    debug_assert!(alpha < beta);
    if alpha == f64::NEG_INFINITY && beta == f64::INFINITY {
        return (0.0, 0.0, 1.0);
    }
    // Work on the side where the interval center is nonnegative; the other
    // side follows by reflection.
    let reflect = if beta == f64::INFINITY {
        false
    } else if alpha == f64::NEG_INFINITY {
        true
    } else {
        alpha + beta < 0.0
    };
    if reflect {
        let (lm, mean, var) = right_truncated_moments(-beta, -alpha);
        (lm, -mean, var)
    } else {
        right_truncated_moments(alpha, beta)
    }
}

/// Core computation under the convention `alpha + beta >= 0` (so
/// `|beta| >= |alpha|`), with `alpha` finite.
fn right_truncated_moments(alpha: f64, beta: f64) -> (f64, f64, f64) {
    // Narrow finite interval: midpoint approximation, which keeps full
    // accuracy where the erfcx difference below would cancel.
    if beta.is_finite() {
        let w = beta - alpha;
        let c = 0.5 * (alpha + beta);
        if w <= 1e-7 * (1.0 + c.abs()) {
            let lm = w.ln() - 0.5 * c * c - 0.5 * LN_2PI;
            return (lm, c, w * w / 12.0);
        }
    }

    let sa = alpha * FRAC_1_SQRT_2;
    // Factor e^{-alpha^2/2} out of the mass so only erfcx evaluations and a
    // decaying exponential remain: Z = (1/2) e^{-alpha^2/2} d with
    // d = erfcx(alpha/sqrt2) - e^{-t} erfcx(beta/sqrt2), t = (beta^2-alpha^2)/2.
    let (d, em, one_minus_em) = if beta == f64::INFINITY {
        (erfcx(sa), 0.0, 1.0)
    } else {
        let t = 0.5 * (beta - alpha) * (beta + alpha);
        let em = (-t).exp();
        (erfcx(sa) - em * erfcx(beta * FRAC_1_SQRT_2), em, -(-t).exp_m1())
    };

    let log_mass = if alpha > 0.0 && d > 0.0 && d.is_finite() {
        -0.5 * alpha * alpha + (0.5 * d).ln()
    } else if beta == f64::INFINITY {
        log_norm_sf(alpha)
    } else {
        (norm_sf(alpha) - norm_sf(beta)).max(f64::MIN_POSITIVE).ln()
    };

    if !(d > 0.0) {
        // Mass too small to resolve; fall back to the midpoint shape.
        let c = if beta.is_finite() { 0.5 * (alpha + beta) } else { alpha };
        let w = if beta.is_finite() { beta - alpha } else { 0.0 };
        return (log_mass, c, w * w / 12.0);
    }

    // Ratios phi/Z computed without ever forming the underflowing pieces.
    let r1 = SQRT_2_OVER_PI * one_minus_em / d;
    let r2 = if beta == f64::INFINITY {
        SQRT_2_OVER_PI * alpha / d
    } else {
        SQRT_2_OVER_PI * (alpha - beta * em) / d
    };
    let mean = r1;
    let var = (1.0 + r2 - r1 * r1).max(0.0);
    (log_mass, mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, test-local oracle.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn quad<F: Fn(f64) -> f64 + Copy>(
            f: F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                quad(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + quad(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        quad(f, a, b, fa, fm, fb, whole, tol, 48)
    }

    fn oracle(m: f64, v: f64, a: f64, b: f64) -> (f64, f64, f64) {
        let s = v.sqrt();
        let lo = a.max(m - 40.0 * s);
        let hi = b.min(m + 40.0 * s);
        // factor out the peak exponent so far-tail integrals keep relative
        // precision instead of underflowing
        let d0 = if m < lo {
            (lo - m) / s
        } else if m > hi {
            (m - hi) / s
        } else {
            0.0
        };
        let shift = 0.5 * d0 * d0;
        let g = |z: f64| {
            let t = (z - m) / s;
            (shift - 0.5 * t * t).exp()
        };
        let i0 = simpson(g, lo, hi, 1e-13);
        let i1 = simpson(|z| z * g(z), lo, hi, 1e-13);
        let i2 = simpson(|z| z * z * g(z), lo, hi, 1e-13);
        let mean = i1 / i0;
        let mass = (-shift).exp() * i0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        (mass, mean, i2 / i0 - mean * mean)
    }

    #[test]
    fn untruncated_matches_parent() {
        let t = truncated_gaussian_moments(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(t.mass, 1.0);
        assert_eq!(t.mean, 0.0);
        assert_eq!(t.variance, 1.0);
        let t = truncated_gaussian_moments(-2.5, 3.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((t.mean + 2.5).abs() < 1e-15 && (t.variance - 3.0).abs() < 1e-15);
    }

    #[test]
    fn half_normal_closed_form() {
        // mass 1/2, mean sqrt(2/pi), variance 1 - 2/pi
        let t = truncated_gaussian_moments(0.0, 1.0, 0.0, f64::INFINITY).unwrap();
        assert!((t.mass - 0.5).abs() < 1e-15);
        assert!((t.mean - 0.7978845608028654).abs() < 1e-14);
        assert!((t.variance - 0.36338022763241865).abs() < 1e-14);
    }

    #[test]
    fn matches_quadrature_oracle() {
        let cases = [
            (3.0, 4.0, -1.0, 7.0),
            (0.0, 1.0, -0.5, 0.25),
            (1.0, 0.01, 1.05, f64::INFINITY),
            (-2.0, 0.5, f64::NEG_INFINITY, -1.0),
            (0.0, 1.0, 2.0, 2.5),
            (0.0, 1.0, -8.5, -8.0),
            (5.0, 2.0, -3.0, 4.0),
        ];
        for (m, v, a, b) in cases {
            let t = truncated_gaussian_moments(m, v, a, b).unwrap();
            let (mass, mean, var) = oracle(m, v, a, b);
            assert!((t.mass - mass).abs() < 1e-10, "mass {:?}", (m, v, a, b));
            assert!((t.mean - mean).abs() < 1e-8, "mean {:?}", (m, v, a, b));
            assert!((t.variance - var).abs() < 1e-8, "var {:?}", (m, v, a, b));
        }
    }

    #[test]
    fn deep_tail_stays_finite_and_ordered() {
        // [8, inf): classic inverse-Mills asymptotics mean ~ alpha + 1/alpha
        let t = truncated_gaussian_moments(0.0, 1.0, 8.0, f64::INFINITY).unwrap();
        assert!(t.mean > 8.0 && t.mean < 8.0 + 1.0 / 8.0);
        assert!(t.variance > 0.0 && t.variance < 1.0 / 64.0);
        // 38 standard deviations: mass underflows but moments stay sane
        let t = truncated_gaussian_moments(0.0, 1.0, 38.0, f64::INFINITY).unwrap();
        assert!(t.mean > 38.0 && t.mean < 38.0 + 1.0 / 38.0);
        assert!(t.variance.is_finite() && t.variance > 0.0);
        let t = truncated_gaussian_moments(0.0, 1.0, 38.0, 38.5).unwrap();
        assert!(t.mean > 38.0 && t.mean < 38.5 && t.variance < 0.1);
    }

    #[test]
    fn narrow_interval_midpoint_rule() {
        let t = truncated_gaussian_moments(0.0, 1.0, -1e-15, 1e-15).unwrap();
        assert!((t.mass - 2e-15 * norm_pdf(0.0)).abs() < 1e-25);
        assert!(t.mean.abs() < 1e-16);
        assert!((t.variance - (2e-15f64).powi(2) / 12.0).abs() < 1e-31);
    }

    #[test]
    fn reflection_symmetry() {
        let p = truncated_gaussian_moments(0.0, 1.0, 0.5, 2.0).unwrap();
        let q = truncated_gaussian_moments(0.0, 1.0, -2.0, -0.5).unwrap();
        assert!((p.mass - q.mass).abs() < 1e-16);
        assert!((p.mean + q.mean).abs() < 1e-14);
        assert!((p.variance - q.variance).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(truncated_gaussian_moments(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(truncated_gaussian_moments(0.0, -1.0, 0.0, 1.0).is_err());
        assert!(truncated_gaussian_moments(f64::NAN, 1.0, 0.0, 1.0).is_err());
        assert!(truncated_gaussian_moments(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(truncated_gaussian_moments(0.0, 1.0, 2.0, -2.0).is_err());
    }

    #[test]
    fn log_norm_sf_reference() {
        assert!((log_norm_sf(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_norm_sf(1.0) - norm_sf(1.0).ln()).abs() < 1e-12);
        // far tail: ln Q(x) ~ -x^2/2 - ln(x sqrt(2 pi))
        let x = 40.0;
        let approx = -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((log_norm_sf(x) - approx).abs() < 1e-3);
    }
}
