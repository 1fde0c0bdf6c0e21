//! Named, splittable random streams.
//!
//! Every source of randomness in the crate draws from a `ChaCha12` generator
//! whose 256-bit seed is derived from `(root seed, stream kind, index)` by a
//! splitmix64 chain. Components can therefore be re-run independently:
//! trial 17's noise does not depend on how many messages were drawn before
//! it, and results are identical for any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The independent random streams used by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// DCT row selection.
    RowSelection,
    /// Message (nonzero position) draws.
    Message,
    /// Channel noise.
    Noise,
    /// State-evolution Monte Carlo sampling.
    SeSampling,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::RowSelection => 0x524f_5753_454c_4543, // "ROWSELEC"
            StreamKind::Message => 0x4d45_5353_4147_4553,      // "MESSAGES"
            StreamKind::Noise => 0x4e4f_4953_4553_5452,        // "NOISESTR"
            StreamKind::SeSampling => 0x5345_5341_4d50_4c45,   // "SESAMPLE"
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 256-bit seed for the `(root, kind, index)` sub-stream.
pub fn derive_seed(root: u64, kind: StreamKind, index: u64) -> [u8; 32] {
    let mut state = root
        ^ kind.tag().wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// Generator for the `(root, kind, index)` sub-stream.
pub fn stream_rng(root: u64, kind: StreamKind, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(root, kind, index))
}

/// Derives an independent root seed, e.g. one per trial.
pub fn mix_seed(root: u64, salt: u64) -> u64 {
    let mut state = root ^ salt.wrapping_mul(0xd1b5_4a32_d192_ed03);
    splitmix64(&mut state)
}
