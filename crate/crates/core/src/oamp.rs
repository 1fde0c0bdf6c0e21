//! The iterative decoding loop: de-clip, orthogonalize, inverse transform,
//! demodulate, orthogonalize, transform — with scalar variance tracking,
//! stopping rules, and per-iteration traces.

use serde::Serialize;

use crate::clipping::ClippingProfile;
use crate::code::{decide_sections, CodeParams, Message};
use crate::denoisers::{declip_posterior, demod_posterior};
use crate::error::{Error, Result};
use crate::numerics::dct::Dct;
use crate::numerics::select::SelectionSet;

/// Stopping-rule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodeOptions {
    pub max_iters: usize,
    /// Stop once the demodulation posterior variance falls below this.
    pub v_target: f64,
    /// Stop when the relative change of the demodulation posterior variance
    /// over five iterations falls below this.
    pub stall_tol: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            max_iters: 120,
            v_target: 1e-10,
            stall_tol: 1e-4,
        }
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxIterations,
    VarianceTarget,
    Stall,
    OrthogonalizationDegenerate,
}

/// One iteration's scalar variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationTrace {
    pub v_z_pri: f64,
    pub v_z_post: f64,
    pub v_x_pri: f64,
    pub v_x_post: f64,
}

/// Decoder output.
///
/// `x_post_final` is the demodulation posterior of the iteration with the
/// smallest reported variance — identical to the last iteration when the
/// trajectory is monotone, and the decoder's best answer when an
/// iteration cap interrupts a near-converged pass.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub x_post_final: Vec<f64>,
    pub message_hat: Message,
    pub iterations_run: usize,
    pub trace: Vec<IterationTrace>,
    pub termination: Termination,
}

/// Extrinsic (orthogonalized) message: removes the prior contribution from
/// a posterior so input and output errors decorrelate.
///
/// `v_orth = (1/v_post - 1/v_pri)^-1`,
/// `u_orth = v_orth (u_post / v_post - u_pri / v_pri)`.
pub fn orthogonalize(
    u_post: &[f64],
    v_post: f64,
    u_pri: &[f64],
    v_pri: f64,
) -> Result<(Vec<f64>, f64)> {
    if u_post.len() != u_pri.len() {
        return Err(Error::DimensionMismatch {
            expected: u_post.len(),
            got: u_pri.len(),
            context: "orthogonalization inputs",
        });
    }
    if !(v_post > 0.0) || !(v_pri > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "orthogonalization variances must be positive: {v_post}, {v_pri}"
        )));
    }
    if v_post >= v_pri {
        return Err(Error::DegenerateOrthogonalization { v_post, v_pri });
    }
    let v_orth = 1.0 / (1.0 / v_post - 1.0 / v_pri);
    let out = u_post
        .iter()
        .zip(u_pri)
        .map(|(&post, &pri)| v_orth * (post / v_post - pri / v_pri))
        .collect();
    Ok((out, v_orth))
}

/// Margin used when a posterior variance fails to contract: it is clamped
/// to `v_pri * (1 - CLAMP_MARGIN)` and the event counted; three consecutive
/// clamped iterations terminate the decode.
const CLAMP_MARGIN: f64 = 1e-9;

fn clamp_contraction(v_post: f64, v_pri: f64, clamped: &mut bool) -> f64 {
    let limit = v_pri * (1.0 - CLAMP_MARGIN);
    if v_post >= limit {
        *clamped = true;
        limit
    } else {
        v_post
    }
}

/// Runs the decoding loop on a received word.
///
/// Per iteration: (1) group-wise de-clipping on the selected coordinates
/// (unselected coordinates pass through, posterior = prior), averaging the
/// group posterior variances by slot count; (2) `z`-orthogonalization with
/// the compression-mixed variance `delta * v_post + (1 - delta) * v_pri`;
/// (3) inverse transform; (4) demodulation; (5) `x`-orthogonalization;
/// (6) forward transform. Starts from a zero extrinsic mean with unit
/// symbol power.
pub fn decode(
    y: &[f64],
    sel: &SelectionSet,
    profile: &ClippingProfile,
    params: &CodeParams,
    noise_var: f64,
    opts: &DecodeOptions,
) -> Result<DecodeResult> {
    let (m, n) = (params.m, params.n);
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
            context: "received word",
        });
    }
    if sel.len() != m || sel.ambient() != n {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: sel.len(),
            context: "selection for decode",
        });
    }
    if profile.total_slots() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: profile.total_slots(),
            context: "profile partition for decode",
        });
    }
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance {noise_var} must be positive"
        )));
    }

    let mut dct = Dct::new(n)?;
    let delta = params.delta;

    // initialization: zero extrinsic mean, unit symbol power
    let mut z_pri = vec![0.0; n];
    let mut v_z_pri = 1.0;

    let mut z_sel = vec![0.0; m];
    let mut z_post_full = vec![0.0; n];
    let mut z_orth = vec![0.0; n];
    let mut x_pri = vec![0.0; n];
    let mut x_orth = vec![0.0; n];

    let mut x_post: Vec<f64> = Vec::new();
    let mut best_x_post: Vec<f64> = Vec::new();
    let mut best_v_x_post = f64::INFINITY;
    let mut trace: Vec<IterationTrace> = Vec::with_capacity(opts.max_iters.min(256));
    let mut termination = Termination::MaxIterations;
    let mut consecutive_clamps = 0usize;

    if opts.max_iters == 0 {
        // no information: demodulate the flat initial prior
        let post = demod_posterior(&vec![0.0; n], 1.0, params)?;
        let message_hat = decide_sections(&post.mean, params);
        return Ok(DecodeResult {
            x_post_final: post.mean,
            message_hat,
            iterations_run: 0,
            trace,
            termination: Termination::MaxIterations,
        });
    }

    let mut y_group = Vec::with_capacity(m);
    let mut z_group = Vec::with_capacity(m);

    for iter in 0..opts.max_iters {
        // (1) irregular de-clip on the observed coordinates, pass-through elsewhere
        for (dst, &idx) in z_sel.iter_mut().zip(sel.indices()) {
            *dst = z_pri[idx];
        }
        z_post_full.copy_from_slice(&z_pri);
        let mut v_z_post = 0.0;
        for g in profile.groups() {
            if g.is_empty() {
                continue;
            }
            y_group.clear();
            z_group.clear();
            for &s in &g.slots {
                y_group.push(y[s]);
                z_group.push(z_sel[s]);
            }
            let out = declip_posterior(
                &y_group,
                &z_group,
                v_z_pri,
                g.threshold,
                g.scale,
                noise_var,
            )?;
            v_z_post += g.len() as f64 / m as f64 * out.variance;
            for (&mean, &s) in out.mean.iter().zip(&g.slots) {
                z_post_full[sel.indices()[s]] = mean;
            }
        }

        // (2) orthogonalize z with the compression-mixed variance
        let mut clamped = false;
        let v_mixed = delta * v_z_post + (1.0 - delta) * v_z_pri;
        let v_used = clamp_contraction(v_mixed, v_z_pri, &mut clamped);
        let v_z_orth = 1.0 / (1.0 / v_used - 1.0 / v_z_pri);
        for i in 0..n {
            z_orth[i] = v_z_orth * (z_post_full[i] / v_used - z_pri[i] / v_z_pri);
        }

        // (3) inverse transform
        dct.inverse_into(&z_orth, &mut x_pri)?;
        let v_x_pri = v_z_orth;

        // (4) demodulate
        let post = demod_posterior(&x_pri, v_x_pri, params)?;
        let v_x_post = post.variance;
        x_post = post.mean;
        if v_x_post < best_v_x_post {
            best_v_x_post = v_x_post;
            best_x_post.clone_from(&x_post);
        }

        trace.push(IterationTrace {
            v_z_pri,
            v_z_post,
            v_x_pri,
            v_x_post,
        });

        if v_x_post <= opts.v_target {
            termination = Termination::VarianceTarget;
            break;
        }
        if trace.len() >= 6 {
            let prev = trace[trace.len() - 6].v_x_post;
            if ((v_x_post - prev).abs() / prev) < opts.stall_tol {
                termination = Termination::Stall;
                break;
            }
        }

        // (5) orthogonalize x
        let v_x_used = clamp_contraction(v_x_post, v_x_pri, &mut clamped);
        let v_x_orth = 1.0 / (1.0 / v_x_used - 1.0 / v_x_pri);
        for i in 0..n {
            x_orth[i] = v_x_orth * (x_post[i] / v_x_used - x_pri[i] / v_x_pri);
        }

        // (6) forward transform
        dct.forward_into(&x_orth, &mut z_pri)?;
        v_z_pri = v_x_orth;

        if clamped {
            consecutive_clamps += 1;
            if consecutive_clamps >= 3 {
                termination = Termination::OrthogonalizationDegenerate;
                break;
            }
        } else {
            consecutive_clamps = 0;
        }

        if iter + 1 == opts.max_iters {
            termination = Termination::MaxIterations;
        }
    }

    let x_post_final = if best_x_post.is_empty() { x_post } else { best_x_post };
    let message_hat = decide_sections(&x_post_final, params);
    Ok(DecodeResult {
        iterations_run: trace.len(),
        x_post_final,
        message_hat,
        trace,
        termination,
    })
}
