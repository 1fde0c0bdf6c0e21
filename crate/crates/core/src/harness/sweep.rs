//! Seeded, thread-count-independent Monte Carlo SER sweeps.
//!
//! Every trial derives its own random streams from `(root seed, snr index,
//! trial index)` alone, and accumulation is order-independent (integer
//! sums), so results are byte-identical for any worker count. Trials run
//! in fixed-size parallel batches; stopping decisions happen between
//! batches.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::clipping::{ClippingProfile, ProfileSpec};
use crate::code::{encode_message, section_error_rate, synthesize_codeword, CodeParams, Message};
use crate::error::{Error, Result};
use crate::harness::config::{ProfileSource, SimConfig, TrialPolicy};
use crate::numerics::dct::Dct;
use crate::numerics::rng::{mix_seed, stream_rng, StreamKind};
use crate::numerics::select::select_coefficient_rows;
use crate::oamp::{decode, DecodeOptions, Termination};
use crate::optimizer::{optimize_fractions, GapProblem};
use crate::se::{build_demod_table, DemodTable, SeAnalysis, SeOptions};

/// Trials per parallel batch. Fixed so the set of trials run never depends
/// on the thread count.
const BATCH: usize = 16;

/// Outcome of one encode/transmit/decode trial.
#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub section_errors: u64,
    pub sections: u64,
    pub iterations: u64,
    pub degenerate: bool,
}

/// Accumulated estimate at one SNR point.
#[derive(Debug, Clone, Serialize)]
pub struct SnrPointResult {
    pub snr_db: f64,
    pub ser: f64,
    pub sections: u64,
    pub errors: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_iters: f64,
    pub degenerate_trials: u64,
    /// Profile actually used at this point.
    pub profile: ProfileSpec,
}

/// Full sweep output with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<SnrPointResult>,
    pub config_hash: String,
    pub seed: u64,
}

/// 95% Wilson score interval for `errors` out of `n`.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959963984540054;
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs batches of `trial` until the stopping policy is met; returns the
/// merged counts. `trial` must be a pure function of the trial index.
pub fn run_adaptive_point<F>(policy: &TrialPolicy, trial: F) -> (u64, u64, u64, u64, u64)
where
    F: Fn(u64) -> TrialOutcome + Sync,
{
    let mut errors = 0u64;
    let mut sections = 0u64;
    let mut iters = 0u64;
    let mut degenerate = 0u64;
    let mut trials = 0u64;
    while (trials as usize) < policy.max_trials {
        let start = trials;
        let count = BATCH.min(policy.max_trials - trials as usize);
        let outcomes: Vec<TrialOutcome> =
            (start..start + count as u64).into_par_iter().map(&trial).collect();
        for o in outcomes {
            errors += o.section_errors;
            sections += o.sections;
            iters += o.iterations;
            degenerate += o.degenerate as u64;
        }
        trials += count as u64;
        if trials as usize >= policy.min_trials
            && errors >= policy.target_section_errors as u64
        {
            break;
        }
    }
    (errors, sections, iters, degenerate, trials)
}

/// One seeded trial: draw message, encode, clip, add noise, decode, count.
pub fn run_trial(
    params: &CodeParams,
    profile: &ClippingProfile,
    noise_var: f64,
    root_seed: u64,
    trial_index: u64,
    opts: &DecodeOptions,
) -> TrialOutcome {
    let sel = select_coefficient_rows(mix_seed(root_seed, trial_index), params.m, params.n)
        .expect("selection parameters validated");
    let mut msg_rng = stream_rng(root_seed, StreamKind::Message, trial_index);
    let msg = Message::random(params, &mut msg_rng);
    let x = encode_message(&msg, params).expect("message fits geometry");
    let mut dct = Dct::new(params.n).expect("power-of-two geometry");
    let c = synthesize_codeword(&x, &sel, profile, &mut dct).expect("consistent dimensions");
    let sigma = noise_var.sqrt();
    let mut noise_rng = stream_rng(root_seed, StreamKind::Noise, trial_index);
    let y: Vec<f64> = c
        .iter()
        .map(|&ci| ci + sigma * noise_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let result = decode(&y, &sel, profile, params, noise_var, opts)
        .expect("decode arguments validated");
    let ser = section_error_rate(&msg, &result.message_hat).expect("equal lengths");
    TrialOutcome {
        section_errors: (ser * params.l as f64).round() as u64,
        sections: params.l as u64,
        iterations: result.iterations_run as u64,
        degenerate: result.termination == Termination::OrthogonalizationDegenerate,
    }
}

fn se_options_for(cfg: &SimConfig, snr_seed: u64) -> SeOptions {
    SeOptions {
        v_min: cfg.optimizer.v_min,
        v_points: cfg.optimizer.v_points,
        declip_samples: cfg.optimizer.declip_samples,
        demod_sections: cfg.optimizer.demod_sections,
        seed: snr_seed,
        ..SeOptions::default()
    }
}

/// Runs the configured sweep: one adaptive SER estimate per SNR.
pub fn run_ser_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let params = cfg.code.params()?;
    let fixed_profile = cfg.profile.fixed_profile(params.m)?;
    let opts = DecodeOptions {
        max_iters: cfg.max_iters,
        ..DecodeOptions::default()
    };

    // the demod table is channel-independent: build at most once
    let mut demod_cache: Option<DemodTable> = None;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let profile = match (&fixed_profile, &cfg.profile) {
            (Some(p), _) => p.clone(),
            (None, ProfileSource::Optimize { candidate_cr_db }) => {
                let se_opts = se_options_for(cfg, mix_seed(cfg.seed, 0x5e ^ snr_idx as u64));
                let demod = match &demod_cache {
                    Some(d) => d.clone(),
                    None => {
                        let d = build_demod_table(params.b, &se_opts)?;
                        demod_cache = Some(d.clone());
                        d
                    }
                };
                let analysis =
                    SeAnalysis::with_demod(&params, candidate_cr_db, noise_var, demod, &se_opts)?;
                let problem = GapProblem::from_analysis(&analysis);
                let solution = optimize_fractions(&problem, cfg.optimizer.tol).map_err(|e| {
                    match e {
                        Error::Infeasible(msg) => Error::Infeasible(format!(
                            "SNR {snr_db} dB: {msg}"
                        )),
                        other => other,
                    }
                })?;
                crate::clipping::build_profile(candidate_cr_db, &solution.lambda, params.m)?
            }
            _ => unreachable!("fixed profile covers the other sources"),
        };

        let point_seed = mix_seed(cfg.seed, (snr_idx as u64) << 32);
        let (errors, sections, iters, degenerate, trials) =
            run_adaptive_point(&cfg.trials, |trial_index| {
                run_trial(&params, &profile, noise_var, point_seed, trial_index, &opts)
            });
        let (ci_low, ci_high) = wilson_interval(errors, sections);
        points.push(SnrPointResult {
            snr_db,
            ser: errors as f64 / sections.max(1) as f64,
            sections,
            errors,
            trials,
            ci_low,
            ci_high,
            mean_iters: iters as f64 / trials.max(1) as f64,
            degenerate_trials: degenerate,
            profile: profile.spec(),
        });
    }

    Ok(SweepResult {
        points,
        config_hash: cfg.hash(),
        seed: cfg.seed,
    })
}

/// Results CSV with the fixed column schema.
pub fn write_results_csv<W: std::io::Write>(out: &mut W, result: &SweepResult) -> Result<()> {
    writeln!(out, "snr_db,ser,sections,errors,trials,ci_low,ci_high,mean_iters")?;
    for p in &result.points {
        writeln!(
            out,
            "{},{:.6e},{},{},{},{:.6e},{:.6e},{:.3}",
            p.snr_db, p.ser, p.sections, p.errors, p.trials, p.ci_low, p.ci_high, p.mean_iters
        )?;
    }
    Ok(())
}
