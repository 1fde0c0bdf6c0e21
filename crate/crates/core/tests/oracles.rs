//! Oracle-equivalence tests: every computational core is checked against an
//! independent route (quadrature, dense matrices, enumeration).

mod common;

use rand::Rng;
use rand_distr::StandardNormal;

use srcodes::clipping::{clip_power, clip_scalar, cr_to_epsilon};
use srcodes::code::derive_params;
use srcodes::denoisers::{declip_posterior, demod_posterior};
use srcodes::numerics::dct::dct_forward;
use srcodes::numerics::gaussian::truncated_gaussian_moments;
use srcodes::numerics::rng::{stream_rng, StreamKind};
use srcodes::se::declip_mmse;

/// De-clip posterior vs adaptive quadrature on a randomized 500-point grid.
#[test]
fn declip_matches_quadrature_oracle() {
    let mut rng = stream_rng(0xACE, StreamKind::SeSampling, 0);
    let mut checked = 0;
    while checked < 500 {
        let v_pri = 10f64.powf(rng.random_range(-3.0..0.3));
        let noise_var = 10f64.powf(rng.random_range(-3.0..0.0));
        let cr_db = rng.random_range(-20.0..6.0);
        let eps = cr_to_epsilon(cr_db);
        let scale = 1.0 / clip_power(eps).sqrt();
        // draw (z, z_pri, y) from the generative model so the posterior is
        // never vanishingly unlikely
        let z: f64 = rng.sample(StandardNormal);
        let z_pri = z + v_pri.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let y = scale * clip_scalar(z, eps)
            + noise_var.sqrt() * rng.sample::<f64, _>(StandardNormal);

        let out = declip_posterior(&[y], &[z_pri], v_pri, eps, scale, noise_var).unwrap();
        let (mean_q, var_q) = common::declip_quadrature(y, z_pri, v_pri, eps, scale, noise_var);
        assert!(
            (out.mean[0] - mean_q).abs() < 1e-8,
            "mean {} vs {mean_q} at (y={y}, z_pri={z_pri}, v={v_pri}, cr={cr_db}, nv={noise_var})",
            out.mean[0]
        );
        assert!(
            (out.variance - var_q).abs() < 1e-8,
            "var {} vs {var_q} at (y={y}, z_pri={z_pri}, v={v_pri}, cr={cr_db}, nv={noise_var})",
            out.variance
        );
        checked += 1;
    }
}

/// Exact posterior at one fixed reference point.
#[test]
fn declip_reference_point() {
    let eps = 0.5;
    let scale = 1.0 / clip_power(eps).sqrt();
    let out = declip_posterior(&[0.3], &[0.1], 0.5, eps, scale, 0.1).unwrap();
    let (mean_q, var_q) = common::declip_quadrature(0.3, 0.1, 0.5, eps, scale, 0.1);
    assert!((out.mean[0] - mean_q).abs() < 1e-8);
    assert!((out.variance - var_q).abs() < 1e-8);
}

/// Demodulation vs explicit enumeration for small section sizes.
#[test]
fn demod_matches_enumeration_oracle() {
    let mut rng = stream_rng(0xDED, StreamKind::SeSampling, 1);
    for b in [2usize, 4, 8] {
        let l = 16;
        let params = derive_params(b, l, (b as f64).log2()).unwrap();
        for _ in 0..40 {
            let v = 10f64.powf(rng.random_range(-2.0..1.0));
            let amp = (b as f64).sqrt();
            let mut x_pri = vec![0.0; params.n];
            for s in 0..l {
                let pos = rng.random_range(0..b);
                for j in 0..b {
                    let t = if j == pos { amp } else { 0.0 };
                    x_pri[s * b + j] = t + v.sqrt() * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let out = demod_posterior(&x_pri, v, &params).unwrap();
            let mut var_accum = 0.0;
            for s in 0..l {
                let section = &x_pri[s * b..(s + 1) * b];
                let (mean_e, var_e) = common::demod_enumeration(section, v);
                for j in 0..b {
                    assert!(
                        (out.mean[s * b + j] - mean_e[j]).abs() < 1e-10,
                        "b={b} s={s} j={j}: {} vs {}",
                        out.mean[s * b + j],
                        mean_e[j]
                    );
                }
                var_accum += var_e;
            }
            assert!(
                (out.variance - (var_accum / l as f64).max(1e-13)).abs() < 1e-10,
                "b={b}: {} vs {}",
                out.variance,
                var_accum / l as f64
            );
        }
    }
}

/// Fast transform vs dense orthonormal matrix multiply.
#[test]
fn dct_matches_dense_oracle() {
    for n in [8usize, 16] {
        let mat = common::dense_dct_matrix(n);
        let mut rng = stream_rng(0xDC7, StreamKind::SeSampling, n as u64);
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fast = dct_forward(&x).unwrap();
            let dense = common::matvec(&mat, &x);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }
}

/// Truncated-Gaussian moments vs quadrature over a parameter grid that
/// reaches eight standard deviations into the tails.
#[test]
fn truncated_moments_match_quadrature_grid() {
    let ms = [-2.0f64, 0.0, 1.5];
    let vs = [0.04f64, 1.0, 9.0];
    let edges = [-8.0f64, -3.0, -0.5, 0.0, 0.7, 3.0, 8.0];
    for &m in &ms {
        for &v in &vs {
            let s = v.sqrt();
            for (i, &ea) in edges.iter().enumerate() {
                for &eb in &edges[i + 1..] {
                    let (a, b) = (m + ea * s, m + eb * s);
                    let t = truncated_gaussian_moments(m, v, a, b).unwrap();
                    let (mass_q, mean_q, var_q) = common::truncated_quadrature(m, v, a, b);
                    assert!((t.mass - mass_q).abs() < 1e-8, "mass {:?}", (m, v, ea, eb));
                    assert!((t.mean - mean_q).abs() < 1e-8, "mean {:?}", (m, v, ea, eb));
                    assert!(
                        (t.variance - var_q).abs() < 1e-8,
                        "var {:?}",
                        (m, v, ea, eb)
                    );
                    // half-infinite variants
                    let t = truncated_gaussian_moments(m, v, a, f64::INFINITY).unwrap();
                    let (mass_q, mean_q, var_q) =
                        common::truncated_quadrature(m, v, a, f64::INFINITY);
                    assert!((t.mass - mass_q).abs() < 1e-8);
                    assert!((t.mean - mean_q).abs() < 1e-8);
                    assert!((t.variance - var_q).abs() < 1e-8);
                }
            }
        }
    }
}

/// De-clip MMSE Monte Carlo estimate vs a two-dimensional quadrature
/// oracle at the reference point (threshold from CR -13 dB, v = 0.1,
/// noise variance 10^-0.2).
#[test]
fn declip_mmse_matches_2d_quadrature() {
    let eps = cr_to_epsilon(-13.0);
    let scale = 1.0 / clip_power(eps).sqrt();
    let v = 0.1;
    let noise_var = 10f64.powf(-0.2);

    let est = declip_mmse(eps, scale, v, noise_var, 200_000, 0xEE).unwrap();

    // E[var(z | z_pri, y)] over the calibrated message law:
    // z ~ N(0,1), z_pri = (1-v) z + N(0, v(1-v)), y = scale clip(z) + noise.
    // Outer integration over (z_pri, y); the joint density needs an inner
    // z-integral, done with the same quadrature primitive.
    let shrink = 1.0 - v;
    let spread_var = v * shrink;
    let z_pri_sd = (shrink * shrink + spread_var).sqrt();
    let y_sd = (1.0 + noise_var).sqrt(); // clip output power is ~1 after rescale
    let joint = |z_pri: f64, y: f64| -> f64 {
        let f = |z: f64| {
            common::normal_density(z, 0.0, 1.0)
                * common::normal_density(z_pri, shrink * z, spread_var)
                * common::normal_density(y, scale * clip_scalar(z, eps), noise_var)
        };
        let peak = [0.0, z_pri / shrink.max(1e-9), -eps, eps]
            .iter()
            .map(|&z| f(z))
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut total = 0.0;
        for (a, b) in [(-9.0, -eps), (-eps, eps), (eps, 9.0)] {
            total += common::adaptive_simpson(f, a, b, peak * 1e-10);
        }
        total
    };

    let half_z = 7.0 * z_pri_sd;
    let half_y = 7.0 * y_sd;
    let nodes = 180usize;
    let hz = 2.0 * half_z / nodes as f64;
    let hy = 2.0 * half_y / nodes as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..nodes {
        let z_pri = -half_z + (i as f64 + 0.5) * hz;
        for j in 0..nodes {
            let y = -half_y + (j as f64 + 0.5) * hy;
            let w = joint(z_pri, y);
            if w < 1e-20 {
                continue;
            }
            let (_, var_q) = common::declip_quadrature(y, z_pri, v, eps, scale, noise_var);
            num += w * var_q;
            den += w;
        }
    }
    let oracle = num / den;
    assert!(
        (est.value - oracle).abs() < 3.0 * est.std_error + 2e-4,
        "mmse {} vs quadrature {oracle} (se {})",
        est.value,
        est.std_error
    );
}
