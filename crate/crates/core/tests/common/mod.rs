//! Independent numerical oracles shared by the integration tests.
//!
//! Everything here recomputes quantities from first principles (quadrature,
//! dense linear algebra, explicit enumeration) without touching the
//! library's own computational paths, so a disagreement implicates the
//! implementation.

#![allow(dead_code)]

/// Adaptive Simpson quadrature with absolute tolerance. `min_depth`
/// subdivisions are forced before the error estimate may accept, so narrow
/// features cannot slip between the first sample points.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_forced(f, a, b, tol, 3)
}

pub fn adaptive_simpson_forced<F: Fn(f64) -> f64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    min_depth: u32,
) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64 + Copy>(
        f: F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        force: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (force == 0 && (left + right - whole).abs() <= 15.0 * tol) {
            left + right + (left + right - whole) / 15.0
        } else {
            let nf = force.saturating_sub(1);
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, nf)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, nf)
        }
    }
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 52, min_depth)
}

/// Integrates over `[lo, hi]` split at every interior breakpoint, so each
/// potential spike owns a subinterval.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64 + Copy>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts.windows(2)
        .map(|w| adaptive_simpson_forced(f, w[0], w[1], tol, 3))
        .sum()
}

pub fn normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn clip(z: f64, eps: f64) -> f64 {
    z.clamp(-eps, eps)
}

/// Posterior mean and variance of `z` under prior `N(z_pri, v_pri)` and
/// likelihood `N(y; scale * clip(z, eps), noise_var)`, by piecewise
/// adaptive quadrature over the three smooth regions.
pub fn declip_quadrature(
    y: f64,
    z_pri: f64,
    v_pri: f64,
    eps: f64,
    scale: f64,
    noise_var: f64,
) -> (f64, f64) {
    let s_pri = v_pri.sqrt();
    let lo = (z_pri - 42.0 * s_pri).min(-eps - 1.0);
    let hi = (z_pri + 42.0 * s_pri).max(eps + 1.0);
    let f = |z: f64| {
        normal_density(z, z_pri, v_pri) * normal_density(y, scale * clip(z, eps), noise_var)
    };
    // candidate spike locations: the prior mean, the clip corners, and the
    // interior Gaussian-product mean
    let v_c = 1.0 / (1.0 / v_pri + scale * scale / noise_var);
    let m_c = v_c * (z_pri / v_pri + scale * y / noise_var);
    let s_c = v_c.sqrt();
    let mut breakpoints = vec![-eps, eps];
    for spread in [1.0, 4.0, 12.0] {
        breakpoints.push(z_pri - spread * s_pri);
        breakpoints.push(z_pri + spread * s_pri);
        breakpoints.push(m_c - spread * s_c);
        breakpoints.push(m_c + spread * s_c);
    }
    breakpoints.push(z_pri);
    breakpoints.push(m_c);
    let peak = [z_pri, -eps, eps, clip(y / scale, eps), m_c, 0.0]
        .iter()
        .map(|&z| f(z))
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = peak * 1e-14;
    let zmax = lo.abs().max(hi.abs()) + 1.0;
    let m0 = integrate_with_breakpoints(f, lo, hi, &breakpoints, tol);
    let m1 = integrate_with_breakpoints(|z| z * f(z), lo, hi, &breakpoints, tol * zmax);
    let m2 = integrate_with_breakpoints(
        |z| z * z * f(z),
        lo,
        hi,
        &breakpoints,
        tol * zmax * zmax,
    );
    let mean = m1 / m0;
    (mean, (m2 / m0 - mean * mean).max(0.0))
}

/// Truncated-Gaussian mass/mean/variance by quadrature with the peak
/// exponent factored out, accurate far into the tails.
pub fn truncated_quadrature(m: f64, v: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let s = v.sqrt();
    let lo = a.max(m - 42.0 * s);
    let hi = b.min(m + 42.0 * s);
    let d0 = if m < lo {
        (lo - m) / s
    } else if m > hi {
        (m - hi) / s
    } else {
        0.0
    };
    let shift = 0.5 * d0 * d0;
    let g = |z: f64| {
        let t = (z - m) / s;
        (shift - 0.5 * t * t).exp()
    };
    // refine around the density peak within the interval (the endpoint
    // nearest the mean, or the mean itself), where all the mass sits
    let edge = m.clamp(lo, hi);
    let mut breakpoints = vec![m];
    for spread in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        breakpoints.push(edge - spread * s);
        breakpoints.push(edge + spread * s);
    }
    let tol = 1e-13 * (hi - lo).max(1.0);
    let zmax = lo.abs().max(hi.abs()) + 1.0;
    let i0 = integrate_with_breakpoints(g, lo, hi, &breakpoints, tol);
    let i1 = integrate_with_breakpoints(|z| z * g(z), lo, hi, &breakpoints, tol * zmax);
    let i2 = integrate_with_breakpoints(|z| z * z * g(z), lo, hi, &breakpoints, tol * zmax * zmax);
    let mean = i1 / i0;
    let mass = (-shift).exp() * i0 / (s * (2.0 * std::f64::consts::PI).sqrt());
    (mass, mean, (i2 / i0 - mean * mean).max(0.0))
}

/// Dense orthonormal DCT-II matrix.
pub fn dense_dct_matrix(n: usize) -> Vec<Vec<f64>> {
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

pub fn matvec(mat: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    mat.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Demodulation of one section by explicit hypothesis enumeration with the
/// full (no terms dropped) Gaussian likelihood.
pub fn demod_enumeration(section_pri: &[f64], v: f64) -> (Vec<f64>, f64) {
    let b = section_pri.len();
    let amp = (b as f64).sqrt();
    let log_like: Vec<f64> = (0..b)
        .map(|j| {
            let mut ss = 0.0;
            for (i, &u) in section_pri.iter().enumerate() {
                let target = if i == j { amp } else { 0.0 };
                ss += (u - target) * (u - target);
            }
            -0.5 * ss / v
        })
        .collect();
    let lmax = log_like.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w_raw: Vec<f64> = log_like.iter().map(|&t| (t - lmax).exp()).collect();
    let wsum: f64 = w_raw.iter().sum();
    let w: Vec<f64> = w_raw.iter().map(|x| x / wsum).collect();
    let mean: Vec<f64> = (0..b).map(|i| amp * w[i]).collect();
    // E||x - x_hat||^2 / b over the b hypotheses
    let mut mse = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        let mut ss = 0.0;
        for (i, &mi) in mean.iter().enumerate() {
            let target = if i == j { amp } else { 0.0 };
            ss += (target - mi) * (target - mi);
        }
        mse += wj * ss;
    }
    (mean, mse / b as f64)
}
