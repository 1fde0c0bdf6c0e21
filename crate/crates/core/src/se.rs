//! State-evolution transfer curves for de-clipping and demodulation, their
//! orthogonalized forms, monotone tabulation/inversion, tunnel analysis and
//! fixed-point prediction.
//!
//! The scalar recursion tracked here predicts the decoder's variance
//! trajectory: de-clipping maps a `z`-side prior variance `v_z` to an
//! `x`-side prior variance, demodulation maps back. Decoding succeeds when
//! a positive gap (the "tunnel") separates the de-clip transfer from the
//! inverse demod transfer all the way down to the target variance. Both
//! raw curves are estimated by seeded Monte Carlo and projected to
//! monotone tables so they can be interpolated and inverted.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::clipping::{clip_power, clip_scalar, cr_to_epsilon};
use crate::code::CodeParams;
use crate::denoisers::{declip_posterior, demod_posterior};
use crate::error::{Error, Result};
use crate::numerics::rng::{stream_rng, StreamKind};

/// Floor for tabulated values so log-domain interpolation stays defined.
const VALUE_FLOOR: f64 = 1e-300;

/// Isotonic projection must move no point (above the check floor) by more
/// than this relative amount, or the sample count is doubled.
const MAX_PROJECTION_ADJUSTMENT: f64 = 0.02;
const ADJUSTMENT_CHECK_FLOOR: f64 = 1e-9;

const DEMOD_SEED_TAG: u64 = 0x4445_4d4f_4453_4545; // "DEMODSEE"

/// Provenance of a tabulated curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMeta {
    /// Channel noise variance (de-clip curves only).
    pub noise_var: Option<f64>,
    /// Clipping threshold (de-clip curves only).
    pub threshold: Option<f64>,
    /// Section size (demod curves only).
    pub section_size: Option<usize>,
    /// Monte Carlo samples (or sections) per grid point.
    pub samples: usize,
    pub seed: u64,
}

/// A monotone sampled transfer map with log-log interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeCurveTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    std_errors: Vec<f64>,
    pub meta: CurveMeta,
}

impl SeCurveTable {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn std_errors(&self) -> &[f64] {
        &self.std_errors
    }

    /// Piecewise-linear interpolation in log-log coordinates, clamped to
    /// the endpoint values outside the grid.
    pub fn eval(&self, v: f64) -> f64 {
        let grid = &self.grid;
        if v <= grid[0] {
            return self.values[0];
        }
        if v >= *grid.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = match grid.binary_search_by(|g| g.partial_cmp(&v).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let (x0, x1) = (grid[i].ln(), grid[i + 1].ln());
        let (y0, y1) = (self.values[i].ln(), self.values[i + 1].ln());
        let t = (v.ln() - x0) / (x1 - x0);
        (y0 + t * (y1 - y0)).exp()
    }

    /// Inverse of the monotone map, interpolating in log-log. Flat
    /// stretches resolve to their left edge.
    pub fn invert(&self, value: f64) -> Result<f64> {
        let lo = self.values[0];
        let hi = *self.values.last().unwrap();
        if value < lo || value > hi {
            return Err(Error::OutOfRange { value, lo, hi });
        }
        let i = self.values.partition_point(|&y| y < value);
        if i == 0 {
            return Ok(self.grid[0]);
        }
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        if y1 <= y0 {
            return Ok(self.grid[i - 1]);
        }
        let t = (value.ln() - y0.ln()) / (y1.ln() - y0.ln());
        Ok((self.grid[i - 1].ln() + t * (self.grid[i].ln() - self.grid[i - 1].ln())).exp())
    }
}

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Demodulation estimate: the per-symbol empirical MSE is the reference
/// value; the average reported posterior variance is kept alongside (the
/// two agree in expectation because the demod model is matched).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodMmseEstimate {
    pub value: f64,
    pub posterior_variance: f64,
    pub std_error: f64,
}

const MIN_SAMPLES: usize = 1000;
const CHUNK: usize = 4096;

/// Monte Carlo estimate of the de-clip MMSE at prior variance `v`: the
/// average reported posterior variance under the calibrated message law
/// the decoder actually produces on the transform side:
/// `z ~ N(0,1)`, `z_pri = (1-v) z + N(0, v(1-v))`,
/// `y = scale * clip(z, eps) + N(0, noise_var)`.
///
/// Under this law the working prior `N(z_pri, v)` is the exact conditional
/// of `z` given `z_pri` (the transform-side message is an orthogonalized
/// posterior-mean estimate of a unit-power signal, so `E[z_pri z] =
/// var(z_pri) = 1 - v`), which is what makes the reported variance track
/// the block's true MSE. At `v = 1` this reduces to the flat start
/// `z_pri = 0`.
pub fn declip_mmse(
    eps: f64,
    scale: f64,
    v: f64,
    noise_var: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MmseEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "declip_mmse needs at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if !(v > 0.0) || !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(
            "declip_mmse variances must be positive".into(),
        ));
    }
    if v > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "declip_mmse prior variance {v} exceeds the unit signal power"
        )));
    }
    let mut rng = stream_rng(seed, StreamKind::SeSampling, 0);
    let shrink = 1.0 - v;
    let spread = (v * shrink).max(0.0).sqrt();
    let sn = noise_var.sqrt();
    let mut chunk_means = Vec::with_capacity(n_samples / CHUNK + 1);
    let mut remaining = n_samples;
    let mut z_pri = vec![0.0; CHUNK];
    let mut y = vec![0.0; CHUNK];
    while remaining > 0 {
        let count = remaining.min(CHUNK);
        for i in 0..count {
            let zi: f64 = rng.sample(StandardNormal);
            z_pri[i] = shrink * zi + spread * rng.sample::<f64, _>(StandardNormal);
            y[i] = scale * clip_scalar(zi, eps) + sn * rng.sample::<f64, _>(StandardNormal);
        }
        let out = declip_posterior(&y[..count], &z_pri[..count], v, eps, scale, noise_var)?;
        chunk_means.push((out.variance, count));
        remaining -= count;
    }
    Ok(aggregate(&chunk_means))
}

/// Monte Carlo estimate of the demodulation MMSE at prior variance `v` for
/// section size `b`: empirical `MSE / b` over random one-hot sections with
/// `x_pri = x + N(0, v I)`.
pub fn demod_mmse(v: f64, b: usize, n_sections: usize, seed: u64) -> Result<DemodMmseEstimate> {
    if n_sections < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "demod_mmse needs at least {MIN_SAMPLES} sections, got {n_sections}"
        )));
    }
    if !(v > 0.0) {
        return Err(Error::InvalidArgument("demod_mmse needs v > 0".into()));
    }
    if b < 2 || !b.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "demod_mmse section size {b} must be a power of two >= 2"
        )));
    }
    let mut rng = stream_rng(seed, StreamKind::SeSampling, 0);
    let sv = v.sqrt();
    let amp = (b as f64).sqrt();
    let sections_per_chunk = (CHUNK / b).max(1);
    let mut mse_chunks = Vec::new();
    let mut var_chunks = Vec::new();
    let mut remaining = n_sections;
    let mut x = vec![0.0; sections_per_chunk * b];
    let mut x_pri = vec![0.0; sections_per_chunk * b];
    while remaining > 0 {
        let count = remaining.min(sections_per_chunk);
        let len = count * b;
        for s in 0..count {
            let pos = rng.random_range(0..b);
            for j in 0..b {
                let xi = if j == pos { amp } else { 0.0 };
                x[s * b + j] = xi;
                x_pri[s * b + j] = xi + sv * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let params = section_batch_params(b, count);
        let out = demod_posterior(&x_pri[..len], v, &params)?;
        let mse: f64 = out.mean[..len]
            .iter()
            .zip(&x[..len])
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
            / len as f64;
        mse_chunks.push((mse, count));
        var_chunks.push((out.variance, count));
        remaining -= count;
    }
    let mse = aggregate(&mse_chunks);
    let var = aggregate(&var_chunks);
    Ok(DemodMmseEstimate {
        value: mse.value,
        posterior_variance: var.value,
        std_error: mse.std_error,
    })
}

/// Geometry stand-in for a batch of independent sections.
fn section_batch_params(b: usize, sections: usize) -> CodeParams {
    CodeParams {
        b,
        l: sections,
        m: sections * b,
        n: sections * b,
        r: (b as f64).log2(),
        delta: 1.0,
    }
}

/// Combines per-chunk means into an overall mean and standard error.
fn aggregate(chunks: &[(f64, usize)]) -> MmseEstimate {
    let total: usize = chunks.iter().map(|(_, c)| c).sum();
    let mean: f64 = chunks.iter().map(|(m, c)| m * *c as f64).sum::<f64>() / total as f64;
    if chunks.len() < 2 {
        return MmseEstimate {
            value: mean,
            std_error: 0.0,
        };
    }
    let var: f64 = chunks
        .iter()
        .map(|(m, c)| {
            let w = *c as f64 / total as f64;
            w * w * (m - mean) * (m - mean)
        })
        .sum::<f64>()
        * chunks.len() as f64
        / (chunks.len() as f64 - 1.0);
    MmseEstimate {
        value: mean,
        std_error: var.sqrt(),
    }
}

/// Log-uniform grid with both endpoints included exactly.
pub fn log_uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == points - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Pool-adjacent-violators projection onto nondecreasing sequences.
/// Returns the projection and the maximum relative adjustment among points
/// above the check floor.
fn isotonic_nondecreasing(values: &[f64]) -> (Vec<f64>, f64) {
    struct Block {
        sum: f64,
        count: usize,
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(values.len());
    for &v in values {
        let mut b = Block { sum: v, count: 1 };
        while let Some(last) = blocks.last() {
            if last.sum / last.count as f64 > b.sum / b.count as f64 {
                b.sum += last.sum;
                b.count += last.count;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push(b);
    }
    let mut out = Vec::with_capacity(values.len());
    for b in &blocks {
        let mean = b.sum / b.count as f64;
        out.extend(std::iter::repeat(mean).take(b.count));
    }
    let mut max_adj: f64 = 0.0;
    for (&raw, &proj) in values.iter().zip(&out) {
        if raw > ADJUSTMENT_CHECK_FLOOR {
            max_adj = max_adj.max((proj - raw).abs() / raw);
        }
    }
    (out, max_adj)
}

fn build_curve<F>(
    grid: &[f64],
    base_samples: usize,
    estimate: F,
    meta_of: impl Fn(usize) -> CurveMeta,
) -> Result<SeCurveTable>
where
    F: Fn(f64, usize, usize) -> Result<MmseEstimate> + Sync,
{
    let mut samples = base_samples;
    for attempt in 0..3 {
        let points: Result<Vec<MmseEstimate>> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &v)| estimate(v, samples, i))
            .collect();
        let points = points?;
        let raw: Vec<f64> = points.iter().map(|p| p.value.max(VALUE_FLOOR)).collect();
        let (proj, max_adj) = isotonic_nondecreasing(&raw);
        if max_adj < MAX_PROJECTION_ADJUSTMENT || attempt == 2 {
            return Ok(SeCurveTable {
                grid: grid.to_vec(),
                values: proj,
                std_errors: points.iter().map(|p| p.std_error).collect(),
                meta: meta_of(samples),
            });
        }
        samples *= 2;
    }
    unreachable!()
}

/// De-clip MMSE curve on `grid`, estimated in parallel and projected
/// monotone. Sample counts double (up to twice) if the projection moves
/// any point by 2% or more.
pub fn build_declip_curve(
    eps: f64,
    scale: f64,
    noise_var: f64,
    grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<SeCurveTable> {
    build_curve(
        grid,
        n_samples,
        |v, samples, i| declip_mmse(eps, scale, v, noise_var, samples, seed ^ ((i as u64) << 20)),
        |samples| CurveMeta {
            noise_var: Some(noise_var),
            threshold: Some(eps),
            section_size: None,
            samples,
            seed,
        },
    )
}

/// Demodulation MMSE curve on `grid` (independent of the channel).
pub fn build_demod_curve(
    b: usize,
    grid: &[f64],
    n_sections: usize,
    seed: u64,
) -> Result<SeCurveTable> {
    build_curve(
        grid,
        n_sections,
        |v, samples, i| {
            demod_mmse(v, b, samples, seed ^ ((i as u64) << 20)).map(|e| MmseEstimate {
                value: e.value,
                std_error: e.std_error,
            })
        },
        |samples| CurveMeta {
            noise_var: None,
            threshold: None,
            section_size: Some(b),
            samples,
            seed,
        },
    )
}

/// Orthogonalized de-clip transfer: maps a `z`-side prior variance and a
/// mixture MMSE `sum_k lambda_k mmse_k(v)` to the `x`-side variance
/// `v (delta mmse + (1 - delta) v) / (delta (v - mmse))`.
pub fn declip_transfer_from_mmse(v: f64, mixture_mmse: f64, delta: f64) -> Result<f64> {
    if !(mixture_mmse < v) {
        return Err(Error::NoContraction {
            v,
            mmse: mixture_mmse,
        });
    }
    let avg = delta * mixture_mmse + (1.0 - delta) * v;
    Ok(avg * v / (delta * (v - mixture_mmse)))
}

/// Orthogonalized demod transfer: `(1/mmse - 1/v)^-1`.
pub fn demod_transfer_from_mmse(v: f64, mmse: f64) -> Result<f64> {
    if !(mmse < v) {
        return Err(Error::NoContraction { v, mmse });
    }
    Ok(mmse * v / (v - mmse))
}

/// Analysis options: grids, sample counts, and the root seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeOptions {
    /// `z`-side grid (tunnel sampling): log-uniform on `[v_min, v_max]`.
    pub v_min: f64,
    pub v_max: f64,
    pub v_points: usize,
    /// `x`-side grid for the demod curve.
    pub vx_min: f64,
    pub vx_max: f64,
    pub vx_points: usize,
    pub declip_samples: usize,
    pub demod_sections: usize,
    pub seed: u64,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            v_min: 1e-6,
            v_max: 1.0,
            v_points: 100,
            vx_min: 1e-2,
            vx_max: 1e4,
            vx_points: 160,
            declip_samples: 200_000,
            demod_sections: 200_000,
            seed: 0,
        }
    }
}

/// The demodulation tables (raw MMSE and orthogonalized transfer) for one
/// section size; independent of the channel, so reusable across noise
/// levels and profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodTable {
    pub raw: SeCurveTable,
    pub orth: SeCurveTable,
    pub b: usize,
}

/// Builds the demod tables on the `x`-side grid.
pub fn build_demod_table(b: usize, opts: &SeOptions) -> Result<DemodTable> {
    let grid = log_uniform_grid(opts.vx_min, opts.vx_max, opts.vx_points);
    let raw = build_demod_curve(b, &grid, opts.demod_sections, opts.seed ^ DEMOD_SEED_TAG)?;
    let orth_vals: Result<Vec<f64>> = grid
        .iter()
        .zip(raw.values())
        .map(|(&v, &mmse)| demod_transfer_from_mmse(v, mmse.min(v * (1.0 - 1e-12))))
        .collect();
    let (proj, _) = isotonic_nondecreasing(&orth_vals?);
    let orth = SeCurveTable {
        grid: grid.clone(),
        values: proj.iter().map(|&v| v.max(VALUE_FLOOR)).collect(),
        std_errors: raw.std_errors().to_vec(),
        meta: raw.meta.clone(),
    };
    Ok(DemodTable { raw, orth, b })
}

/// Transfer-curve bundle for one geometry, candidate threshold set and
/// noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SeAnalysis {
    pub v_grid: Vec<f64>,
    pub cr_db: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub scales: Vec<f64>,
    /// De-clip MMSE curve per candidate threshold on `v_grid`.
    pub declip: Vec<SeCurveTable>,
    pub demod: DemodTable,
    pub delta: f64,
    pub b: usize,
    pub noise_var: f64,
}

/// SE tunnel verdict at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelReport {
    /// True iff the gap is positive at every grid point.
    pub open: bool,
    /// Minimum gap over the grid (negative infinity where the de-clip
    /// transfer has no contraction).
    pub min_gap: f64,
    /// Grid point attaining the minimum.
    pub argmin_v: f64,
    /// Fixed-point section error rate predicted by Monte Carlo hard
    /// decisions at the terminal `x`-side variance.
    pub predicted_ser: f64,
}

/// One step of the predicted variance trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub v_z_pri: f64,
    pub v_x_pri: f64,
    pub v_x_post: f64,
}

impl SeAnalysis {
    /// Builds all tables for `crs_db` candidates at one noise level.
    pub fn build(
        params: &CodeParams,
        crs_db: &[f64],
        noise_var: f64,
        opts: &SeOptions,
    ) -> Result<Self> {
        let demod = build_demod_table(params.b, opts)?;
        Self::with_demod(params, crs_db, noise_var, demod, opts)
    }

    /// Builds the de-clip tables, reusing an existing demod table.
    pub fn with_demod(
        params: &CodeParams,
        crs_db: &[f64],
        noise_var: f64,
        demod: DemodTable,
        opts: &SeOptions,
    ) -> Result<Self> {
        if crs_db.is_empty() {
            return Err(Error::InvalidParams(
                "need at least one candidate CR".into(),
            ));
        }
        if demod.b != params.b {
            return Err(Error::InvalidParams(format!(
                "demod table built for section size {}, geometry has {}",
                demod.b, params.b
            )));
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance {noise_var} must be positive"
            )));
        }
        let v_grid = log_uniform_grid(opts.v_min, opts.v_max, opts.v_points);
        let thresholds: Vec<f64> = crs_db.iter().map(|&cr| cr_to_epsilon(cr)).collect();
        let scales: Vec<f64> = thresholds
            .iter()
            .map(|&e| 1.0 / clip_power(e).sqrt())
            .collect();
        let declip: Result<Vec<SeCurveTable>> = thresholds
            .iter()
            .zip(&scales)
            .enumerate()
            .map(|(k, (&eps, &scale))| {
                build_declip_curve(
                    eps,
                    scale,
                    noise_var,
                    &v_grid,
                    opts.declip_samples,
                    opts.seed ^ ((k as u64 + 1) << 40),
                )
            })
            .collect();
        Ok(Self {
            v_grid,
            cr_db: crs_db.to_vec(),
            thresholds,
            scales,
            declip: declip?,
            demod,
            delta: params.delta,
            b: params.b,
            noise_var,
        })
    }

    /// `sum_k lambda_k mmse_k(v)` interpolated from the tables.
    pub fn mixture_mmse(&self, v: f64, fractions: &[f64]) -> f64 {
        fractions
            .iter()
            .zip(&self.declip)
            .map(|(&l, curve)| l * curve.eval(v))
            .sum()
    }

    /// Orthogonalized de-clip transfer at `v` for a fraction distribution.
    pub fn declip_transfer(&self, v: f64, fractions: &[f64]) -> Result<f64> {
        declip_transfer_from_mmse(v, self.mixture_mmse(v, fractions), self.delta)
    }

    /// Orthogonalized demod transfer at an `x`-side variance.
    pub fn demod_transfer(&self, v_x: f64) -> Result<f64> {
        demod_transfer_from_mmse(v_x, self.demod.raw.eval(v_x).min(v_x * (1.0 - 1e-12)))
    }

    /// Inverse of the orthogonalized demod transfer.
    pub fn invert_demod_transfer(&self, v_z: f64) -> Result<f64> {
        self.demod.orth.invert(v_z)
    }

    /// Inverse with out-of-range targets capped to the grid ends (a target
    /// above every tabulated output means any `x`-side variance suffices).
    pub fn demod_inverse_capped(&self, v_z: f64) -> f64 {
        match self.demod.orth.invert(v_z) {
            Ok(v) => v,
            Err(_) => {
                if v_z > *self.demod.orth.values().last().unwrap() {
                    *self.demod.orth.grid().last().unwrap()
                } else {
                    self.demod.orth.grid()[0]
                }
            }
        }
    }

    /// Gap between the inverse demod transfer and the de-clip transfer at
    /// `v`; negative infinity where de-clipping has no contraction.
    pub fn gap(&self, v: f64, fractions: &[f64]) -> f64 {
        match self.declip_transfer(v, fractions) {
            Ok(vx) => self.demod_inverse_capped(v) - vx,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Scans the grid for the minimum gap and predicts the fixed-point SER.
    pub fn analyze_tunnel(
        &self,
        fractions: &[f64],
        ser_sections: usize,
        seed: u64,
    ) -> TunnelReport {
        let mut min_gap = f64::INFINITY;
        let mut argmin_v = self.v_grid[0];
        for &v in &self.v_grid {
            let g = self.gap(v, fractions);
            if g < min_gap {
                min_gap = g;
                argmin_v = v;
            }
        }
        let trajectory = self.fixed_point_trajectory(fractions, 2000);
        let predicted_ser = match trajectory.last() {
            Some(p) => predicted_section_error(self.b, p.v_x_pri, ser_sections, seed),
            None => 1.0 - 1.0 / self.b as f64,
        };
        TunnelReport {
            open: min_gap > 0.0,
            min_gap,
            argmin_v,
            predicted_ser,
        }
    }

    /// Alternates the two transfers from `v_z = 1` until convergence, the
    /// grid floor, or a stall at a crossing.
    pub fn fixed_point_trajectory(
        &self,
        fractions: &[f64],
        max_steps: usize,
    ) -> Vec<TrajectoryPoint> {
        let mut out = Vec::new();
        let mut v_z = 1.0f64;
        for _ in 0..max_steps {
            let v_x = match self.declip_transfer(v_z, fractions) {
                Ok(v) => v,
                Err(_) => break, // crossing: no contraction at this v_z
            };
            let v_x_post = self.demod.raw.eval(v_x);
            out.push(TrajectoryPoint {
                v_z_pri: v_z,
                v_x_pri: v_x,
                v_x_post,
            });
            if v_x_post >= v_x {
                break;
            }
            let next = demod_transfer_from_mmse(v_x, v_x_post).expect("contraction checked");
            if next < self.v_grid[0] || (v_z - next).abs() <= 1e-9 * v_z {
                break;
            }
            v_z = next;
        }
        out
    }

    /// Rows for a transfer-chart CSV: `(v_z, de-clip transfer, inverse
    /// demod transfer)` per grid point; non-contracting points yield
    /// infinities.
    pub fn chart_rows(&self, fractions: &[f64]) -> Vec<(f64, f64, f64)> {
        self.v_grid
            .iter()
            .map(|&v| {
                let declip = self.declip_transfer(v, fractions).unwrap_or(f64::INFINITY);
                let inv = self
                    .invert_demod_transfer(v)
                    .unwrap_or(f64::INFINITY);
                (v, declip, inv)
            })
            .collect()
    }
}

/// Monte Carlo hard-decision section error rate of demodulation at prior
/// variance `v_x`.
pub fn predicted_section_error(b: usize, v_x: f64, n_sections: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, StreamKind::SeSampling, DEMOD_SEED_TAG);
    let amp = (b as f64).sqrt();
    let sv = v_x.sqrt();
    let sections_per_chunk = (CHUNK / b).max(1);
    let mut errors = 0usize;
    let mut done = 0usize;
    let mut x_pri = vec![0.0; sections_per_chunk * b];
    let mut truth = Vec::with_capacity(sections_per_chunk);
    while done < n_sections {
        let count = (n_sections - done).min(sections_per_chunk);
        let len = count * b;
        truth.clear();
        for s in 0..count {
            let pos = rng.random_range(0..b);
            truth.push(pos);
            for j in 0..b {
                let xi = if j == pos { amp } else { 0.0 };
                x_pri[s * b + j] = xi + sv * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let params = section_batch_params(b, count);
        let post = demod_posterior(&x_pri[..len], v_x, &params).expect("valid demod inputs");
        for (s, &pos) in truth.iter().enumerate() {
            let section = &post.mean[s * b..(s + 1) * b];
            let mut best = 0;
            for (j, &val) in section.iter().enumerate().skip(1) {
                if val > section[best] {
                    best = j;
                }
            }
            if best != pos {
                errors += 1;
            }
        }
        done += count;
    }
    errors as f64 / n_sections as f64
}
