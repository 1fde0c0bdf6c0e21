//! Python bindings: code geometry, clipping profiles, encode/decode,
//! state-evolution charts and fraction optimization.
//!
//! Build with `cargo build --release -p srcodes-python`; the resulting
//! `libsrcodes_py.so` imports as the `srcodes_py` module (see
//! `python/smoke_test.py`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::Rng;
use rand_distr::StandardNormal;

use srcodes::clipping;
use srcodes::code;
use srcodes::harness::sweep;
use srcodes::harness::TrialPolicy;
use srcodes::numerics::dct::Dct;
use srcodes::numerics::gaussian;
use srcodes::numerics::rng::{mix_seed, stream_rng, StreamKind};
use srcodes::numerics::select::select_coefficient_rows;
use srcodes::oamp;
use srcodes::optimizer;
use srcodes::se;

fn to_py_err(e: srcodes::Error) -> PyErr {
    match e {
        srcodes::Error::Infeasible(msg) => PyRuntimeError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Code geometry derived from `(b, l, r)`.
#[pyclass(name = "CodeParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCodeParams {
    inner: code::CodeParams,
}

#[pymethods]
impl PyCodeParams {
    #[new]
    fn new(b: usize, l: usize, r: f64) -> PyResult<Self> {
        Ok(Self {
            inner: code::derive_params(b, l, r).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn b(&self) -> usize {
        self.inner.b
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    fn __repr__(&self) -> String {
        format!(
            "CodeParams(b={}, l={}, m={}, n={}, r={}, delta={})",
            self.inner.b, self.inner.l, self.inner.m, self.inner.n, self.inner.r, self.inner.delta
        )
    }
}

/// Clipping profile: thresholds (as dB ratios), fractions, and the derived
/// partition of the observed coordinates.
#[pyclass(name = "ClippingProfile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyClippingProfile {
    inner: clipping::ClippingProfile,
}

#[pymethods]
impl PyClippingProfile {
    #[new]
    fn new(cr_db: Vec<f64>, lambda: Vec<f64>, m: usize) -> PyResult<Self> {
        Ok(Self {
            inner: clipping::build_profile(&cr_db, &lambda, m).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn regular(cr_db: f64, m: usize) -> PyResult<Self> {
        Ok(Self {
            inner: clipping::ClippingProfile::regular(cr_db, m).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn unclipped(m: usize) -> PyResult<Self> {
        Ok(Self {
            inner: clipping::ClippingProfile::unclipped(m).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn cr_db(&self) -> Vec<f64> {
        self.inner.spec().cr_db
    }

    #[getter]
    fn lambda_(&self) -> Vec<f64> {
        self.inner.spec().lambda
    }

    #[getter]
    fn num_groups(&self) -> usize {
        self.inner.num_groups()
    }

    /// Applies the slot-wise clipping map to an observed vector.
    fn apply(&self, z_obs: Vec<f64>) -> PyResult<Vec<f64>> {
        clipping::apply_irregular_clip(&z_obs, &self.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        let spec = self.inner.spec();
        format!("ClippingProfile(cr_db={:?}, lambda={:?})", spec.cr_db, spec.lambda)
    }
}

/// Orthonormal DCT-II of a power-of-two-length vector.
#[pyfunction]
fn dct_forward(x: Vec<f64>) -> PyResult<Vec<f64>> {
    srcodes::numerics::dct::dct_forward(&x).map_err(to_py_err)
}

/// Inverse of `dct_forward`.
#[pyfunction]
fn dct_inverse(y: Vec<f64>) -> PyResult<Vec<f64>> {
    srcodes::numerics::dct::dct_inverse(&y).map_err(to_py_err)
}

/// `(mass, mean, variance)` of a Gaussian restricted to `[a, b]`.
#[pyfunction]
fn truncated_gaussian_moments(m: f64, v: f64, a: f64, b: f64) -> PyResult<(f64, f64, f64)> {
    let t = gaussian::truncated_gaussian_moments(m, v, a, b).map_err(to_py_err)?;
    Ok((t.mass, t.mean, t.variance))
}

/// Block-sparse vector for the given section positions.
#[pyfunction]
fn encode_message(params: &PyCodeParams, positions: Vec<usize>) -> PyResult<Vec<f64>> {
    let msg = code::Message::new(positions, &params.inner).map_err(to_py_err)?;
    code::encode_message(&msg, &params.inner).map_err(to_py_err)
}

/// Per-section argmax decisions.
#[pyfunction]
fn decide_sections(params: &PyCodeParams, x: Vec<f64>) -> PyResult<Vec<usize>> {
    if x.len() != params.inner.n {
        return Err(PyValueError::new_err(format!(
            "expected length {}, got {}",
            params.inner.n,
            x.len()
        )));
    }
    Ok(code::decide_sections(&x, &params.inner).positions().to_vec())
}

/// One seeded encode/transmit/decode round trip.
#[pyfunction]
#[pyo3(signature = (params, profile, snr_db, seed = 0, max_iters = 120))]
fn decode_once<'py>(
    py: Python<'py>,
    params: &PyCodeParams,
    profile: &PyClippingProfile,
    snr_db: f64,
    seed: u64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let sel = select_coefficient_rows(mix_seed(seed, 0), p.m, p.n).map_err(to_py_err)?;
    let mut msg_rng = stream_rng(seed, StreamKind::Message, 0);
    let msg = code::Message::random(p, &mut msg_rng);
    let x = code::encode_message(&msg, p).map_err(to_py_err)?;
    let mut dct = Dct::new(p.n).map_err(to_py_err)?;
    let c = code::synthesize_codeword(&x, &sel, &profile.inner, &mut dct).map_err(to_py_err)?;
    let mut noise_rng = stream_rng(seed, StreamKind::Noise, 0);
    let sigma = noise_var.sqrt();
    let y: Vec<f64> = c
        .iter()
        .map(|&ci| ci + sigma * noise_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let opts = oamp::DecodeOptions {
        max_iters,
        ..oamp::DecodeOptions::default()
    };
    let result = oamp::decode(&y, &sel, &profile.inner, p, noise_var, &opts).map_err(to_py_err)?;
    let ser = code::section_error_rate(&msg, &result.message_hat).map_err(to_py_err)?;

    let out = PyDict::new(py);
    out.set_item("ser", ser)?;
    out.set_item("iterations", result.iterations_run)?;
    out.set_item("termination", format!("{:?}", result.termination))?;
    out.set_item(
        "trace_v_x_post",
        result.trace.iter().map(|t| t.v_x_post).collect::<Vec<f64>>(),
    )?;
    Ok(out)
}

/// Adaptive Monte Carlo SER estimate at one SNR.
#[pyfunction]
#[pyo3(signature = (params, profile, snr_db, seed = 0, max_iters = 120,
                    min_trials = 8, max_trials = 200, target_section_errors = 50))]
#[allow(clippy::too_many_arguments)]
fn simulate_point<'py>(
    py: Python<'py>,
    params: &PyCodeParams,
    profile: &PyClippingProfile,
    snr_db: f64,
    seed: u64,
    max_iters: usize,
    min_trials: usize,
    max_trials: usize,
    target_section_errors: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let policy = TrialPolicy {
        min_trials,
        max_trials,
        target_section_errors,
    };
    let opts = oamp::DecodeOptions {
        max_iters,
        ..oamp::DecodeOptions::default()
    };
    let prof = profile.inner.clone();
    let (errors, sections, iters, degenerate, trials) =
        py.detach(|| {
            sweep::run_adaptive_point(&policy, |idx| {
                sweep::run_trial(&p, &prof, noise_var, seed, idx, &opts)
            })
        });
    let (ci_low, ci_high) = sweep::wilson_interval(errors, sections);
    let out = PyDict::new(py);
    out.set_item("snr_db", snr_db)?;
    out.set_item("ser", errors as f64 / sections.max(1) as f64)?;
    out.set_item("errors", errors)?;
    out.set_item("sections", sections)?;
    out.set_item("trials", trials)?;
    out.set_item("ci_low", ci_low)?;
    out.set_item("ci_high", ci_high)?;
    out.set_item("mean_iters", iters as f64 / trials.max(1) as f64)?;
    out.set_item("degenerate_trials", degenerate)?;
    Ok(out)
}

/// Transfer-curve rows `(v_z, declip, demod_inverse)` for a profile.
#[pyfunction]
#[pyo3(signature = (params, profile, snr_db, v_min = 1e-6, points = 100,
                    samples = 50_000, sections = 50_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn transfer_chart(
    py: Python<'_>,
    params: &PyCodeParams,
    profile: &PyClippingProfile,
    snr_db: f64,
    v_min: f64,
    points: usize,
    samples: usize,
    sections: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let spec = profile.inner.spec();
    let opts = se::SeOptions {
        v_min,
        v_points: points,
        declip_samples: samples,
        demod_sections: sections,
        seed,
        ..se::SeOptions::default()
    };
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let p = params.inner;
    let rows = py.detach(|| {
        se::SeAnalysis::build(&p, &spec.cr_db, noise_var, &opts)
            .map(|a| a.chart_rows(&spec.lambda))
    });
    let rows = rows.map_err(to_py_err)?;
    let mut v = Vec::with_capacity(rows.len());
    let mut declip = Vec::with_capacity(rows.len());
    let mut inv = Vec::with_capacity(rows.len());
    for (a, b, c) in rows {
        v.push(a);
        declip.push(b);
        inv.push(c);
    }
    Ok((v, declip, inv))
}

/// Optimizes the fraction distribution over candidate clipping ratios at
/// one SNR; returns `{lambda, min_gap, open}`.
#[pyfunction]
#[pyo3(signature = (params, candidate_cr_db, snr_db, v_min = 1e-6, points = 100,
                    samples = 50_000, sections = 50_000, seed = 0, tol = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn optimize_lambda<'py>(
    py: Python<'py>,
    params: &PyCodeParams,
    candidate_cr_db: Vec<f64>,
    snr_db: f64,
    v_min: f64,
    points: usize,
    samples: usize,
    sections: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = se::SeOptions {
        v_min,
        v_points: points,
        declip_samples: samples,
        demod_sections: sections,
        seed,
        ..se::SeOptions::default()
    };
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let p = params.inner;
    let crs = candidate_cr_db.clone();
    let solution = py.detach(|| {
        let analysis = se::SeAnalysis::build(&p, &crs, noise_var, &opts)?;
        let problem = optimizer::GapProblem::from_analysis(&analysis);
        optimizer::optimize_fractions(&problem, tol)
    });
    let solution = solution.map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("cr_db", candidate_cr_db)?;
    out.set_item("lambda", solution.lambda)?;
    out.set_item("min_gap", solution.min_gap)?;
    out.set_item("snr_db", snr_db)?;
    Ok(out)
}

#[pymodule]
fn srcodes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodeParams>()?;
    m.add_class::<PyClippingProfile>()?;
    m.add_function(wrap_pyfunction!(dct_forward, m)?)?;
    m.add_function(wrap_pyfunction!(dct_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_gaussian_moments, m)?)?;
    m.add_function(wrap_pyfunction!(encode_message, m)?)?;
    m.add_function(wrap_pyfunction!(decide_sections, m)?)?;
    m.add_function(wrap_pyfunction!(decode_once, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_point, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_chart, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_lambda, m)?)?;
    Ok(())
}
