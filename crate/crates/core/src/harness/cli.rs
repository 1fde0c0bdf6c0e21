//! Command-line interface: `simulate`, `se-chart`, `optimize`,
//! `decode-demo`.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 infeasible
//! optimization, 1 other failures.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::clipping::{ClippingProfile, ProfileSpec};
use crate::code::{encode_message, section_error_rate, synthesize_codeword, Message};
use crate::error::{Error, Result};
use crate::harness::config::SimConfig;
use crate::harness::sweep::{run_ser_sweep, write_results_csv};
use crate::numerics::dct::Dct;
use crate::numerics::rng::{mix_seed, stream_rng, StreamKind};
use crate::numerics::select::select_coefficient_rows;
use crate::oamp::{decode, DecodeOptions};
use crate::optimizer::{optimize_fractions, GapProblem};
use crate::se::{build_demod_table, SeAnalysis, SeOptions};

#[derive(Parser, Debug)]
#[command(
    name = "srcodes",
    version,
    about = "Irregularly clipped sparse regression codes: simulation, transfer charts, and threshold optimization"
)]
struct Cli {
    /// Root seed (overrides the config file where one applies).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: SRCODES_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (CSV or JSON depending on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    /// Section size (power of two).
    #[arg(long)]
    b: usize,
    /// Section count.
    #[arg(long)]
    l: usize,
    /// Code rate in bits per symbol.
    #[arg(long)]
    r: f64,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Regular clipping at this ratio (dB).
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["profile", "unclipped"])]
    cr_db: Option<f64>,
    /// JSON profile file: {"cr_db": [...], "lambda": [...]}.
    #[arg(long, conflicts_with = "unclipped")]
    profile: Option<PathBuf>,
    /// No clipping.
    #[arg(long)]
    unclipped: bool,
}

impl ProfileArgs {
    fn build(&self, m: usize) -> Result<ClippingProfile> {
        if let Some(cr) = self.cr_db {
            ClippingProfile::regular(cr, m)
        } else if let Some(path) = &self.profile {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let spec: ProfileSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad profile {}: {e}", path.display())))?;
            ClippingProfile::from_spec(&spec, m)
        } else if self.unclipped {
            ClippingProfile::unclipped(m)
        } else {
            Err(Error::Config(
                "choose a profile: --cr-db, --profile, or --unclipped".into(),
            ))
        }
    }
}

#[derive(Args, Debug)]
struct SeGridArgs {
    /// Smallest sampled variance.
    #[arg(long, default_value_t = 1e-6)]
    v_min: f64,
    /// Sample points on [v_min, 1].
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Monte Carlo samples per de-clip grid point.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Monte Carlo sections per demod grid point.
    #[arg(long, default_value_t = 200_000)]
    sections: usize,
}

impl SeGridArgs {
    fn options(&self, seed: u64) -> SeOptions {
        SeOptions {
            v_min: self.v_min,
            v_points: self.points,
            declip_samples: self.samples,
            demod_sections: self.sections,
            seed,
            ..SeOptions::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an SER sweep from a JSON config file.
    Simulate {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Optional JSON mirror of the results.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Emit a transfer-curve CSV for a profile at one SNR.
    SeChart {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        /// SNR in dB (noise variance is 10^(-snr/10)).
        #[arg(long, allow_negative_numbers = true)]
        snr_db: f64,
        #[command(flatten)]
        grid: SeGridArgs,
    },
    /// Optimize the fraction distribution for candidate CRs per SNR.
    Optimize {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Comma-separated candidate CRs in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "preset")]
        candidates: Option<Vec<f64>>,
        /// Use the built-in (non-canonical) candidate grid.
        #[arg(long)]
        preset: bool,
        /// Comma-separated SNR list in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        snr_db: Vec<f64>,
        #[command(flatten)]
        grid: SeGridArgs,
        /// Bisection tolerance in gap units.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Single seeded encode/decode with a per-iteration trace dump.
    DecodeDemo {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 120)]
        max_iters: usize,
    },
}

/// Parses `std::env::args`, runs, and maps errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("SRCODES_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible(_) => 3,
                Error::Config(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::InvalidParams(_)
                | Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SolutionRecord {
    cr_db: Vec<f64>,
    lambda: Vec<f64>,
    min_gap: f64,
    snr_db: f64,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, json_out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = SimConfig::from_json(&text)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let result = run_ser_sweep(&cfg)?;
            let mut csv = Vec::new();
            write_results_csv(&mut csv, &result)?;
            let csv_path = cli.out.or(cfg.output.csv.clone());
            write_output(csv_path.as_deref(), &csv)?;
            if let Some(json_path) = json_out.or(cfg.output.json.clone()) {
                fs::write(&json_path, serde_json::to_vec_pretty(&result)?)?;
            }
            for p in &result.points {
                eprintln!(
                    "snr {} dB: ser {:.3e} ({} errors / {} sections, {} trials)",
                    p.snr_db, p.ser, p.errors, p.sections, p.trials
                );
            }
            Ok(())
        }
        Command::SeChart {
            geometry,
            profile,
            snr_db,
            grid,
        } => {
            let params = crate::code::derive_params(geometry.b, geometry.l, geometry.r)?;
            let prof = profile.build(params.m)?;
            let spec = prof.spec();
            let noise_var = 10f64.powf(-snr_db / 10.0);
            let seed = cli.seed.unwrap_or(0);
            let analysis =
                SeAnalysis::build(&params, &spec.cr_db, noise_var, &grid.options(seed))?;
            let mut csv = Vec::new();
            writeln!(csv, "v_z,v_x_declip,v_x_demod_inverse")?;
            for (v, declip, inv) in analysis.chart_rows(&spec.lambda) {
                writeln!(csv, "{v:.9e},{declip:.9e},{inv:.9e}")?;
            }
            write_output(cli.out.as_deref(), &csv)?;
            Ok(())
        }
        Command::Optimize {
            geometry,
            candidates,
            preset,
            snr_db,
            grid,
            tol,
        } => {
            let params = crate::code::derive_params(geometry.b, geometry.l, geometry.r)?;
            let candidates = match (candidates, preset) {
                (Some(c), _) => c,
                (None, true) => crate::harness::config::CANDIDATE_CR_PRESET.to_vec(),
                (None, false) => {
                    return Err(Error::Config(
                        "provide --candidates or --preset".into(),
                    ))
                }
            };
            let seed = cli.seed.unwrap_or(0);
            let demod = build_demod_table(params.b, &grid.options(seed))?;
            let mut records = Vec::new();
            for (i, &snr) in snr_db.iter().enumerate() {
                let noise_var = 10f64.powf(-snr / 10.0);
                let opts = grid.options(mix_seed(seed, i as u64));
                let analysis = SeAnalysis::with_demod(
                    &params,
                    &candidates,
                    noise_var,
                    demod.clone(),
                    &opts,
                )?;
                let problem = GapProblem::from_analysis(&analysis);
                let solution = optimize_fractions(&problem, tol).map_err(|e| match e {
                    Error::Infeasible(msg) => {
                        Error::Infeasible(format!("SNR {snr} dB: {msg}"))
                    }
                    other => other,
                })?;
                eprintln!(
                    "snr {snr} dB: min gap {:.4e}, {} active points",
                    solution.min_gap,
                    solution.active_points.len()
                );
                records.push(SolutionRecord {
                    cr_db: candidates.clone(),
                    lambda: solution.lambda,
                    min_gap: solution.min_gap,
                    snr_db: snr,
                });
            }
            let mut json = serde_json::to_vec_pretty(&records)?;
            json.push(b'\n');
            write_output(cli.out.as_deref(), &json)?;
            Ok(())
        }
        Command::DecodeDemo {
            geometry,
            profile,
            snr_db,
            max_iters,
        } => {
            let params = crate::code::derive_params(geometry.b, geometry.l, geometry.r)?;
            let prof = profile.build(params.m)?;
            let seed = cli.seed.unwrap_or(0);
            let noise_var = 10f64.powf(-snr_db / 10.0);
            let sel = select_coefficient_rows(mix_seed(seed, 0), params.m, params.n)?;
            let mut msg_rng = stream_rng(seed, StreamKind::Message, 0);
            let msg = Message::random(&params, &mut msg_rng);
            let x = encode_message(&msg, &params)?;
            let mut dct = Dct::new(params.n)?;
            let c = synthesize_codeword(&x, &sel, &prof, &mut dct)?;
            let mut noise_rng = stream_rng(seed, StreamKind::Noise, 0);
            let sigma = noise_var.sqrt();
            let y: Vec<f64> = c
                .iter()
                .map(|&ci| ci + sigma * noise_rng.sample::<f64, _>(StandardNormal))
                .collect();
            let opts = DecodeOptions {
                max_iters,
                ..DecodeOptions::default()
            };
            let result = decode(&y, &sel, &prof, &params, noise_var, &opts)?;
            let ser = section_error_rate(&msg, &result.message_hat)?;
            let mut csv = Vec::new();
            writeln!(csv, "iter,v_z_pri,v_z_post,v_x_pri,v_x_post")?;
            for (i, t) in result.trace.iter().enumerate() {
                writeln!(
                    csv,
                    "{i},{:.9e},{:.9e},{:.9e},{:.9e}",
                    t.v_z_pri, t.v_z_post, t.v_x_pri, t.v_x_post
                )?;
            }
            write_output(cli.out.as_deref(), &csv)?;
            eprintln!(
                "ser {ser:.6e} after {} iterations ({:?})",
                result.iterations_run, result.termination
            );
            Ok(())
        }
    }
}
