//! The two posterior computations at the heart of the decoder: symbol-wise
//! de-clipping and section-wise demodulation, each returning posterior means
//! plus the average of the per-symbol posterior variances.

use crate::clipping::NO_CLIP_EPSILON;
use crate::code::CodeParams;
use crate::error::{Error, Result};
use crate::numerics::gaussian::{log_normal_pdf, std_truncated_moments};

/// A message passed between decoder blocks: a mean vector with one scalar
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPair {
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Returned variances are clamped below at this floor so downstream
/// orthogonalization stays finite.
pub const VARIANCE_FLOOR: f64 = 1e-13;

fn check_variance(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

/// Posterior of a symbol `z` with prior `N(z_pri, v_pri)` observed through
/// `y = scale * clip(z, eps) + N(0, noise_var)`.
///
/// The posterior is an exact three-component mixture: the interior region
/// `|z| <= eps` contributes a Gaussian-product posterior truncated to
/// `[-eps, eps]`; each tail contributes the prior truncated to that tail,
/// weighted by the constant likelihood at the clamp value. Mixture weights
/// are combined in the log domain.
///
/// Returns the per-symbol posterior means and the average posterior
/// variance over the batch.
pub fn declip_posterior(
    y: &[f64],
    z_pri: &[f64],
    v_pri: f64,
    eps: f64,
    scale: f64,
    noise_var: f64,
) -> Result<BeliefPair> {
    if y.len() != z_pri.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: z_pri.len(),
            context: "declip prior vs observation",
        });
    }
    check_variance("v_pri", v_pri)?;
    check_variance("noise_var", noise_var)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {eps} must be positive")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
    }

    let n = y.len();
    let mut mean = vec![0.0; n];
    let mut var_sum = 0.0;

    // Gaussian-product pieces shared across symbols.
    let post_prec = 1.0 / v_pri + scale * scale / noise_var;
    let v_c = 1.0 / post_prec;
    let sigma_c = v_c.sqrt();
    let evidence_var = noise_var + scale * scale * v_pri;

    if eps >= NO_CLIP_EPSILON {
        // identity observation: plain linear-Gaussian combining
        for i in 0..n {
            mean[i] = v_c * (z_pri[i] / v_pri + scale * y[i] / noise_var);
        }
        let v = v_c.max(VARIANCE_FLOOR);
        return Ok(BeliefPair { mean, variance: v });
    }

    let sigma_pri = v_pri.sqrt();
    for i in 0..n {
        let (zp, yi) = (z_pri[i], y[i]);

        // interior: truncated Gaussian-product posterior on [-eps, eps]
        let m_c = v_c * (zp / v_pri + scale * yi / noise_var);
        let (lm_int, mean_int_s, var_int_s) =
            std_truncated_moments((-eps - m_c) / sigma_c, (eps - m_c) / sigma_c);
        let lw_int = log_normal_pdf(yi, scale * zp, evidence_var) + lm_int;
        let mean_int = m_c + sigma_c * mean_int_s;
        let var_int = v_c * var_int_s;

        // tails: prior truncated beyond +/-eps, constant likelihood
        let (lm_up, mean_up_s, var_up_s) =
            std_truncated_moments((eps - zp) / sigma_pri, f64::INFINITY);
        let lw_up = log_normal_pdf(yi, scale * eps, noise_var) + lm_up;
        let mean_up = zp + sigma_pri * mean_up_s;
        let var_up = v_pri * var_up_s;

        let (lm_lo, mean_lo_s, var_lo_s) =
            std_truncated_moments(f64::NEG_INFINITY, (-eps - zp) / sigma_pri);
        let lw_lo = log_normal_pdf(yi, -scale * eps, noise_var) + lm_lo;
        let mean_lo = zp + sigma_pri * mean_lo_s;
        let var_lo = v_pri * var_lo_s;

        // normalize in the log domain
        let lmax = lw_int.max(lw_up).max(lw_lo);
        let (w_int, w_up, w_lo) = if lmax.is_finite() {
            ((lw_int - lmax).exp(), (lw_up - lmax).exp(), (lw_lo - lmax).exp())
        } else {
            (1.0, 1.0, 1.0)
        };
        let wsum = w_int + w_up + w_lo;
        let (w_int, w_up, w_lo) = (w_int / wsum, w_up / wsum, w_lo / wsum);

        let m1 = w_int * mean_int + w_up * mean_up + w_lo * mean_lo;
        let m2 = w_int * (var_int + mean_int * mean_int)
            + w_up * (var_up + mean_up * mean_up)
            + w_lo * (var_lo + mean_lo * mean_lo);
        mean[i] = m1;
        var_sum += (m2 - m1 * m1).max(0.0);
    }

    Ok(BeliefPair {
        mean,
        variance: (var_sum / n as f64).max(VARIANCE_FLOOR),
    })
}

/// Section-by-section demodulation: posterior over the `b` one-hot
/// hypotheses with uniform prior.
///
/// Hypothesis weights are `w_j ∝ exp(sqrt(b) * x_pri[j] / v_pri)` (softmax
/// with max subtraction); the posterior mean entry is `sqrt(b) * w_j` and
/// each section contributes a per-symbol variance of `1 - sum_j w_j^2`.
pub fn demod_posterior(x_pri: &[f64], v_pri: f64, params: &CodeParams) -> Result<BeliefPair> {
    if x_pri.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: x_pri.len(),
            context: "demodulation input",
        });
    }
    check_variance("v_pri", v_pri)?;

    let b = params.b;
    let amp = (b as f64).sqrt();
    let coeff = amp / v_pri;
    let mut mean = vec![0.0; params.n];
    let mut var_sum = 0.0;

    for (section, chunk) in x_pri.chunks_exact(b).enumerate() {
        let mut lmax = f64::NEG_INFINITY;
        for &v in chunk {
            let t = coeff * v;
            if t > lmax {
                lmax = t;
            }
        }
        let out = &mut mean[section * b..(section + 1) * b];
        let mut wsum = 0.0;
        for (o, &v) in out.iter_mut().zip(chunk) {
            let w = (coeff * v - lmax).exp();
            *o = w;
            wsum += w;
        }
        let mut wsq = 0.0;
        for o in out.iter_mut() {
            let w = *o / wsum;
            wsq += w * w;
            *o = amp * w;
        }
        var_sum += 1.0 - wsq;
    }

    Ok(BeliefPair {
        mean,
        variance: (var_sum / params.l as f64).max(VARIANCE_FLOOR),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clipping::{clip_power, cr_to_epsilon};
    use crate::code::derive_params;

    #[test]
    fn no_clipping_reduces_to_linear_combining() {
        let y = [0.7, -0.2, 1.4];
        let z_pri = [0.1, 0.0, -0.3];
        let (v_pri, nv) = (0.5, 0.1);
        let out = declip_posterior(&y, &z_pri, v_pri, f64::INFINITY, 1.0, nv).unwrap();
        let v_post = 1.0 / (1.0 / v_pri + 1.0 / nv);
        assert!((out.variance - v_post).abs() < 1e-15);
        for i in 0..3 {
            let expect = v_post * (z_pri[i] / v_pri + y[i] / nv);
            assert!((out.mean[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn uninformative_observation_returns_prior() {
        let y = [0.4, -1.0];
        let z_pri = [0.25, -0.6];
        let v_pri = 0.3;
        let out = declip_posterior(&y, &z_pri, v_pri, 1.0, 1.0, 1e12).unwrap();
        for i in 0..2 {
            assert!((out.mean[i] - z_pri[i]).abs() / z_pri[i].abs() < 1e-6);
        }
        assert!((out.variance - v_pri).abs() / v_pri < 1e-6);
    }

    #[test]
    fn sign_flip_invariance() {
        let eps = cr_to_epsilon(-6.0);
        let alpha = 1.0 / clip_power(eps).sqrt();
        let y = [0.45, -0.8, 0.05];
        let z_pri = [0.3, 0.2, -0.9];
        let pos = declip_posterior(&y, &z_pri, 0.4, eps, alpha, 0.2).unwrap();
        let yn: Vec<f64> = y.iter().map(|v| -v).collect();
        let zn: Vec<f64> = z_pri.iter().map(|v| -v).collect();
        let neg = declip_posterior(&yn, &zn, 0.4, eps, alpha, 0.2).unwrap();
        for i in 0..3 {
            assert!((pos.mean[i] + neg.mean[i]).abs() < 1e-12);
        }
        assert!((pos.variance - neg.variance).abs() < 1e-14);
    }

    #[test]
    fn variance_contracts() {
        let eps = cr_to_epsilon(-13.0);
        let alpha = 1.0 / clip_power(eps).sqrt();
        for &v_pri in &[1e-4, 1e-2, 0.5, 1.0] {
            let y = [0.3, -0.9, 1.2, 0.0];
            let z_pri = [0.1, -0.4, 0.8, 0.2];
            let out = declip_posterior(&y, &z_pri, v_pri, eps, alpha, 0.25).unwrap();
            assert!(out.variance <= v_pri * (1.0 + 1e-12), "v_pri={v_pri}");
        }
    }

    #[test]
    fn hard_sign_regime_stays_finite() {
        // CR -300: scale ~ 1e15, threshold 1e-15
        let eps = 1e-15;
        let alpha = 1.0 / clip_power(eps).sqrt();
        let y = [1.1, -0.9, 0.2, -2.0];
        let z_pri = [0.4, 0.4, -0.1, 0.3];
        let out = declip_posterior(&y, &z_pri, 0.7, eps, alpha, 0.5).unwrap();
        assert!(out.mean.iter().all(|m| m.is_finite()));
        assert!(out.variance.is_finite() && out.variance > 0.0);
        // positive observation pulls the posterior toward the positive tail
        assert!(out.mean[0] > z_pri[0]);
        assert!(out.mean[1] < z_pri[1]);
    }

    #[test]
    fn demod_uniform_on_zero_input() {
        let p = derive_params(4, 2, 1.0).unwrap();
        let out = demod_posterior(&vec![0.0; p.n], 1.0, &p).unwrap();
        for &v in &out.mean {
            assert!((v - 0.5).abs() < 1e-15); // 1/sqrt(4)
        }
        assert!((out.variance - (1.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn demod_hard_decision_limit() {
        let p = derive_params(8, 4, 1.0).unwrap();
        let mut x = vec![0.0; p.n];
        let amp = (p.b as f64).sqrt();
        for s in 0..p.l {
            x[s * p.b + (s % p.b)] = amp;
        }
        let out = demod_posterior(&x, 1e-6, &p).unwrap();
        for (a, b) in out.mean.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(out.variance <= 1e-9);
    }

    #[test]
    fn demod_matches_enumeration_b4() {
        let p = derive_params(4, 1, 1.0).unwrap();
        let x_pri = [2.0, 0.0, 0.0, 0.0];
        let v = 1.0;
        let out = demod_posterior(&x_pri, v, &p).unwrap();

        // explicit 4-term enumeration
        let amp = 2.0;
        let logits: Vec<f64> = x_pri.iter().map(|&u| amp * u / v).collect();
        let lmax = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ws: Vec<f64> = logits.iter().map(|&t| (t - lmax).exp()).collect();
        let wsum: f64 = ws.iter().sum();
        let ws: Vec<f64> = ws.iter().map(|w| w / wsum).collect();
        for j in 0..4 {
            assert!((out.mean[j] - amp * ws[j]).abs() < 1e-14);
        }
        let expect_var = 1.0 - ws.iter().map(|w| w * w).sum::<f64>();
        assert!((out.variance - expect_var).abs() < 1e-14);
    }

    #[test]
    fn demod_weights_sum_to_one() {
        let p = derive_params(16, 8, 0.5).unwrap();
        let x_pri: Vec<f64> = (0..p.n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let out = demod_posterior(&x_pri, 0.37, &p).unwrap();
        let amp = (p.b as f64).sqrt();
        for section in out.mean.chunks_exact(p.b) {
            let total: f64 = section.iter().map(|v| v / amp).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_arguments() {
        let p = derive_params(4, 1, 1.0).unwrap();
        assert!(demod_posterior(&[0.0; 4], 0.0, &p).is_err());
        assert!(demod_posterior(&[0.0; 5], 1.0, &p).is_err());
        assert!(declip_posterior(&[0.0], &[0.0, 0.0], 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(declip_posterior(&[0.0], &[0.0], -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(declip_posterior(&[0.0], &[0.0], 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(declip_posterior(&[0.0], &[0.0], 1.0, 0.0, 1.0, 1.0).is_err());
    }
}
