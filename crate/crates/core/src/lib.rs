//! Irregularly clipped sparse regression (SR) codes with OAMP decoding.
//!
//! An SR codeword is a partial-DCT transform of a block-sparse message
//! vector, passed through a per-symbol clipping nonlinearity and an AWGN
//! channel. Decoding alternates two locally optimal denoisers (de-clipping
//! and section demodulation) with orthogonalization steps; the scalar
//! variance recursion of that loop is tracked by state evolution (SE).
//! Splitting the transmitted symbols into groups with distinct clipping
//! thresholds ("irregular clipping") widens the SE decoding tunnel, and the
//! threshold distribution is optimized by a max-min program over the
//! sampled transfer curves.
//!
//! The crate is organized as:
//!
//! * [`numerics`] — Gaussian special functions, truncated-Gaussian moments,
//!   an orthonormal power-of-two DCT pair, seeded random streams and row
//!   selection.
//! * [`code`] — code parameterization, message/sparse-vector mapping,
//!   codeword synthesis and section error accounting.
//! * [`clipping`] — regular and irregular clipping profiles with power
//!   compensation.
//! * [`denoisers`] — posterior mean/variance computations for de-clipping
//!   and demodulation.
//! * [`oamp`] — the iterative decoding loop with variance tracking.
//! * [`se`] — Monte Carlo transfer-curve tables, tunnel analysis and
//!   fixed-point prediction.
//! * [`optimizer`] — max-min optimization of the threshold distribution by
//!   bisection over linear feasibility problems.
//! * [`harness`] — simulation configuration, seeded parallel SER sweeps and
//!   the command-line interface.

pub mod clipping;
pub mod code;
pub mod denoisers;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod oamp;
pub mod optimizer;
pub mod se;

pub use error::{Error, Result};
