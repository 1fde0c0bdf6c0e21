//! Orthonormal DCT-II / DCT-III pair for power-of-two lengths.
//!
//! Both directions are computed through a single size-`n` complex FFT
//! (Makhoul's even/odd reordering), so a transform costs `O(n log n)` and the
//! pair is orthonormal: `inverse(forward(x)) == x` and norms are preserved
//! to machine precision.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Reusable transform context for one length `n`.
pub struct Dct {
    n: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / (2n))` for `k = 0..n`.
    twiddle: Vec<Complex<f64>>,
    scale_dc: f64,
    scale_ac: f64,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Dct {
    /// Plans transforms of length `n` (must be a power of two).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "transform length {n} is not a power of two"
            )));
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        let twiddle = (0..n)
            .map(|k| {
                let theta = std::f64::consts::PI * k as f64 / (2.0 * n as f64);
                Complex::new(theta.cos(), -theta.sin())
            })
            .collect();
        let scratch_len = fft_fwd
            .get_inplace_scratch_len()
            .max(fft_inv.get_inplace_scratch_len());
        Ok(Self {
            n,
            fft_fwd,
            fft_inv,
            twiddle,
            scale_dc: 1.0 / (n as f64).sqrt(),
            scale_ac: (2.0 / n as f64).sqrt(),
            buf: vec![Complex::new(0.0, 0.0); n],
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
                context: "DCT input length",
            });
        }
        Ok(())
    }

    /// Orthonormal DCT-II, writing into `out`.
    pub fn forward_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(out.len())?;
        let n = self.n;
        if n == 1 {
            out[0] = x[0];
            return Ok(());
        }
        // even-index entries ascending, odd-index entries descending
        for j in 0..n / 2 {
            self.buf[j] = Complex::new(x[2 * j], 0.0);
            self.buf[n - 1 - j] = Complex::new(x[2 * j + 1], 0.0);
        }
        self.fft_fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        out[0] = self.scale_dc * self.buf[0].re;
        for k in 1..n {
            let a = self.buf[k] * self.twiddle[k];
            out[k] = self.scale_ac * a.re;
        }
        Ok(())
    }

    /// Orthonormal DCT-III (the inverse of [`Dct::forward_into`]).
    pub fn inverse_into(&mut self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(y.len())?;
        self.check_len(out.len())?;
        let n = self.n;
        if n == 1 {
            out[0] = y[0];
            return Ok(());
        }
        // Rebuild the spectrum: with c_k the unnormalized DCT-II coefficients,
        // V_k e^{-i pi k/(2n)} = c_k - i c_{n-k} (and V_0 = c_0).
        let c0 = y[0] / self.scale_dc;
        self.buf[0] = Complex::new(c0, 0.0);
        for k in 1..n {
            let ck = y[k] / self.scale_ac;
            let cnk = y[n - k] / self.scale_ac;
            let a = Complex::new(ck, -cnk);
            self.buf[k] = a * self.twiddle[k].conj();
        }
        self.fft_inv
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let inv_n = 1.0 / n as f64;
        for j in 0..n / 2 {
            out[2 * j] = self.buf[j].re * inv_n;
            out[2 * j + 1] = self.buf[n - 1 - j].re * inv_n;
        }
        Ok(())
    }

    /// Allocating forward transform.
    pub fn forward(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.forward_into(x, &mut out)?;
        Ok(out)
    }

    /// Allocating inverse transform.
    pub fn inverse(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.inverse_into(y, &mut out)?;
        Ok(out)
    }
}

/// One-shot orthonormal DCT-II of a power-of-two-length vector.
pub fn dct_forward(x: &[f64]) -> Result<Vec<f64>> {
    Dct::new(x.len())?.forward(x)
}

/// One-shot orthonormal DCT-III (inverse of [`dct_forward`]).
pub fn dct_inverse(y: &[f64]) -> Result<Vec<f64>> {
    Dct::new(y.len())?.inverse(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::numerics::rng::{stream_rng, StreamKind};

    /// Dense orthonormal DCT-II matrix, the oracle for small sizes.
    fn dense_dct_matrix(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                let s = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                (0..n)
                    .map(|j| {
                        s * (std::f64::consts::PI * k as f64 * (2.0 * j as f64 + 1.0)
                            / (2.0 * n as f64))
                            .cos()
                    })
                    .collect()
            })
            .collect()
    }

    fn matvec(mat: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        mat.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn zero_maps_to_zero() {
        let y = dct_forward(&[0.0; 16]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_dense_matrix_small_sizes() {
        for n in [2usize, 4, 8, 16] {
            let mat = dense_dct_matrix(n);
            let mut rng = stream_rng(5, StreamKind::SeSampling, n as u64);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = dct_forward(&x).unwrap();
            let dense = matvec(&mat, &x);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
            // inverse = transpose multiply
            let back = dct_inverse(&fast).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_preserved_and_round_trip() {
        let n = 1024;
        let mut dct = Dct::new(n).unwrap();
        for trial in 0..100u64 {
            let mut rng = stream_rng(9, StreamKind::SeSampling, trial);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = dct.forward(&x).unwrap();
            let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((nx - ny).abs() < 1e-10 * nx);
            let back = dct.inverse(&y).unwrap();
            let linf = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let xmax = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(linf < 1e-10 * xmax);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Dct::new(0).is_err());
        assert!(Dct::new(3).is_err());
        assert!(Dct::new(12).is_err());
        let mut dct = Dct::new(8).unwrap();
        assert!(dct.forward(&[0.0; 7]).is_err());
    }
}
