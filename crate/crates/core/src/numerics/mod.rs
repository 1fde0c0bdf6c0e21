//! Deterministic numerical kernels: Gaussian special functions,
//! truncated-Gaussian moments, seeded random streams, and a fast
//! orthonormal DCT pair with row selection.

pub mod dct;
pub mod erf;
pub mod gaussian;
pub mod rng;
pub mod select;

pub use dct::{dct_forward, dct_inverse, Dct};
pub use erf::{erf, erfc, erfcx};
pub use gaussian::{
    log_norm_sf, log_normal_pdf, norm_cdf, norm_pdf, norm_sf, truncated_gaussian_moments,
    TruncatedGaussianMoments,
};
pub use rng::{derive_seed, mix_seed, stream_rng, StreamKind};
pub use select::{select_coefficient_rows, select_rows, SelectionSet};
