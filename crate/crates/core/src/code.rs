//! SR code parameterization, message <-> block-sparse vector mapping,
//! codeword synthesis, and section error accounting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clipping::{apply_irregular_clip, ClippingProfile};
use crate::error::{Error, Result};
use crate::numerics::dct::Dct;
use crate::numerics::select::SelectionSet;

/// Code geometry.
///
/// A message has `l` sections of size `b`; the ambient dimension is
/// `n = l * b` and `m` transform coordinates are transmitted, giving the
/// rate `r = l * log2(b) / m` (bits per symbol) and compression rate
/// `delta = m / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Section size (power of two, >= 2).
    pub b: usize,
    /// Section count.
    pub l: usize,
    /// Code length (transmitted symbols).
    pub m: usize,
    /// Ambient dimension `l * b` (power of two).
    pub n: usize,
    /// Code rate in bits per symbol.
    pub r: f64,
    /// Compression rate `m / n`.
    pub delta: f64,
}

/// Derives the full geometry from `(b, l, r)`: `m = round(l log2 b / r)`.
pub fn derive_params(b: usize, l: usize, r: f64) -> Result<CodeParams> {
    if b < 2 || !b.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "section size {b} must be a power of two >= 2"
        )));
    }
    if l == 0 {
        return Err(Error::InvalidParams("need at least one section".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("rate {r} must be positive")));
    }
    let n = l
        .checked_mul(b)
        .ok_or_else(|| Error::InvalidParams("ambient dimension overflow".into()))?;
    if !n.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "ambient dimension {n} = l*b must be a power of two (choose l a power of two)"
        )));
    }
    let bits = l as f64 * (b as f64).log2();
    let m = (bits / r).round() as usize;
    if m == 0 {
        return Err(Error::InvalidParams(format!("rate {r} yields empty code")));
    }
    if m > n {
        return Err(Error::InvalidParams(format!(
            "rate {r} needs {m} symbols but only {n} transform rows exist (compression rate > 1)"
        )));
    }
    Ok(CodeParams {
        b,
        l,
        m,
        n,
        r,
        delta: m as f64 / n as f64,
    })
}

/// The nonzero position of each section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    positions: Vec<usize>,
}

impl Message {
    pub fn new(positions: Vec<usize>, params: &CodeParams) -> Result<Self> {
        if positions.len() != params.l {
            return Err(Error::DimensionMismatch {
                expected: params.l,
                got: positions.len(),
                context: "message sections",
            });
        }
        if let Some(&p) = positions.iter().find(|&&p| p >= params.b) {
            return Err(Error::InvalidParams(format!(
                "position {p} out of range for section size {}",
                params.b
            )));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Uniform random message.
    pub fn random<R: Rng>(params: &CodeParams, rng: &mut R) -> Self {
        Self {
            positions: (0..params.l).map(|_| rng.random_range(0..params.b)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Block-sparse vector: one entry of amplitude `sqrt(b)` per section, so
/// the squared norm is exactly `n`.
pub fn encode_message(msg: &Message, params: &CodeParams) -> Result<Vec<f64>> {
    if msg.len() != params.l {
        return Err(Error::DimensionMismatch {
            expected: params.l,
            got: msg.len(),
            context: "message sections",
        });
    }
    let amp = (params.b as f64).sqrt();
    let mut x = vec![0.0; params.n];
    for (section, &pos) in msg.positions().iter().enumerate() {
        if pos >= params.b {
            return Err(Error::InvalidParams(format!(
                "position {pos} out of range for section size {}",
                params.b
            )));
        }
        x[section * params.b + pos] = amp;
    }
    Ok(x)
}

/// Transforms, selects and clips a sparse vector into a length-`m` codeword.
pub fn synthesize_codeword(
    x: &[f64],
    sel: &SelectionSet,
    profile: &ClippingProfile,
    dct: &mut Dct,
) -> Result<Vec<f64>> {
    if sel.len() != profile.total_slots() {
        return Err(Error::DimensionMismatch {
            expected: sel.len(),
            got: profile.total_slots(),
            context: "profile partition vs selection",
        });
    }
    let z = dct.forward(x)?;
    let z_obs: Vec<f64> = sel.indices().iter().map(|&i| z[i]).collect();
    apply_irregular_clip(&z_obs, profile)
}

/// Per-section argmax hard decision; ties go to the lowest index.
pub fn decide_sections(x_post: &[f64], params: &CodeParams) -> Message {
    debug_assert_eq!(x_post.len(), params.n);
    let positions = x_post
        .chunks_exact(params.b)
        .map(|section| {
            let mut best = 0;
            for (j, &v) in section.iter().enumerate().skip(1) {
                if v > section[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    Message { positions }
}

/// Fraction of sections whose decided position differs from the truth.
pub fn section_error_rate(truth: &Message, decided: &Message) -> Result<f64> {
    if truth.len() != decided.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: decided.len(),
            context: "section error comparison",
        });
    }
    let errors = truth
        .positions()
        .iter()
        .zip(decided.positions())
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / truth.len() as f64)
}
