//! Python bindings.
//!
//! Complex values cross the boundary as Python `complex`; spectra are
//! lists indexed by subcarrier.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nrjam::antijam::{self, AntijamConfig, Policy};
use nrjam::detector::{self, DetectionReport, DetectorConfig, Verdict};
use nrjam::jammer::{self, JammerConfig};
use nrjam::ofdm::{self, DEFAULT_SCS_HZ};
use nrjam::sim::{self, JammerSpec, TrialConfig};
use nrjam::{ssb, OfdmSymbol, SubcarrierSymbol};

fn py_err(e: nrjam::Error) -> PyErr {
    match e {
        nrjam::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(format!("{}: {other}", other.kind())),
    }
}

fn symbols_from_bins(bins: &[Complex64]) -> Vec<SubcarrierSymbol> {
    bins.iter()
        .enumerate()
        .map(|(k, v)| SubcarrierSymbol::from_complex(k, *v))
        .collect()
}

fn symbol(samples: Vec<Complex64>) -> PyResult<OfdmSymbol> {
    OfdmSymbol::new(samples, DEFAULT_SCS_HZ).map_err(py_err)
}

/// `sum_n e^{-j 2 pi d n / N}`.
#[pyfunction]
fn geometric_sum(d: f64, n: usize) -> PyResult<Complex64> {
    ofdm::geometric_sum(d, n).map_err(py_err)
}

#[pyfunction]
fn trace_a(k: usize, i: usize, m: f64, n: usize) -> PyResult<Complex64> {
    detector::trace_a(k, i, m, n).map(|t| t.value).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (i, m, n, epsilon = 1e-6))]
fn psi_analytic(i: usize, m: f64, n: usize, epsilon: f64) -> PyResult<usize> {
    detector::psi_analytic(i, m, n, epsilon).map_err(py_err)
}

/// Time samples `x_n = (1/N) sum_k X_k e^{j 2 pi k n / N}` from a full spectrum.
#[pyfunction]
fn synthesize(bins: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    if bins.len() < 2 {
        return Err(py_err(nrjam::Error::InvalidFftSize { n: bins.len(), min: 2 }));
    }
    Ok(ofdm::synthesize_bins(&bins))
}

/// Unnormalized DFT `Y_k = sum_n x_n e^{-j 2 pi k n / N}`.
#[pyfunction]
fn analyze(samples: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    ofdm::spectrum(&samples).map_err(py_err)
}

/// Symbol synthesized from `bins` with subcarrier `target` shifted by
/// `offset` and multiplied by `amplitude * e^{j phase}`.
#[pyfunction]
#[pyo3(signature = (bins, target, offset, amplitude = 1.0, phase = 0.0))]
fn frequency_shift(bins: Vec<Complex64>, target: usize, offset: f64, amplitude: f64, phase: f64) -> PyResult<Vec<Complex64>> {
    let n = bins.len();
    let symbols = symbols_from_bins(&bins);
    let clean = ofdm::synthesize(&symbols, n).map_err(py_err)?;
    let cfg = JammerConfig::frequency_shift(vec![target], offset, amplitude, phase);
    let (out, _) = jammer::apply_frequency_shift(&clean, &symbols, &cfg).map_err(py_err)?;
    Ok(out.into_samples())
}

#[pyfunction]
#[pyo3(signature = (samples, snr_db, seed = 0))]
fn add_awgn(samples: Vec<Complex64>, snr_db: f64, seed: u64) -> PyResult<Vec<Complex64>> {
    let x = symbol(samples)?;
    Ok(nrjam::channel::add_awgn(&x, snr_db, seed).map_err(py_err)?.into_samples())
}

/// PBCH accounting of the SSB grid as a dict.
#[pyfunction]
#[pyo3(signature = (dmrs_shift = 0, sss_width = 127))]
fn ssb_summary<'py>(py: Python<'py>, dmrs_shift: usize, sss_width: usize) -> PyResult<Bound<'py, PyDict>> {
    let g = ssb::build_ssb_grid(dmrs_shift, sss_width).map_err(py_err)?;
    let s = g.summary();
    let d = PyDict::new(py);
    d.set_item("pss", s.pss)?;
    d.set_item("sss", s.sss)?;
    d.set_item("pbch_total", s.pbch_total)?;
    d.set_item("pbch_payload", s.pbch_payload)?;
    d.set_item("pbch_dmrs", s.pbch_dmrs)?;
    d.set_item("dmrs_fraction", s.dmrs_fraction)?;
    d.set_item("dmrs_per_symbol", s.dmrs_per_symbol)?;
    d.set_item("violations", ssb::validate_grid(&g).len())?;
    Ok(d)
}

#[pyfunction]
fn select_m_prime_paper(i_tilde: f64, n: usize, candidates: Vec<f64>) -> Option<f64> {
    antijam::select_m_prime_paper(i_tilde, n, &candidates)
}

fn verdict_str(v: Verdict) -> String {
    v.to_string()
}

fn report_dict<'py>(py: Python<'py>, r: &DetectionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("psi", r.psi.values().to_vec())?;
    d.set_item("s", r.statistic.clone())?;
    d.set_item("m_hat", r.m_hat.clone())?;
    d.set_item("verdicts", r.verdicts.iter().copied().map(verdict_str).collect::<Vec<_>>())?;
    d.set_item("cause", r.cause.to_string())?;
    d.set_item("mismatch_ratio", r.mismatch_ratio)?;
    d.set_item("noise_var", r.noise_var)?;
    Ok(d)
}

/// Empirical loss-of-orthogonality test against a known spectrum.
#[pyclass(module = "nrjam")]
struct Detector {
    cfg: DetectorConfig,
    antijam: AntijamConfig,
}

#[pymethods]
impl Detector {
    #[new]
    #[pyo3(signature = (epsilon = 1e-6, offset_step = 0.01, oversample = 4, gate = None, noise_var = None, max_targets = 8, policy = "negation"))]
    fn new(
        epsilon: f64,
        offset_step: f64,
        oversample: usize,
        gate: Option<f64>,
        noise_var: Option<f64>,
        max_targets: usize,
        policy: &str,
    ) -> PyResult<Self> {
        let cfg = DetectorConfig {
            epsilon,
            offset_step,
            oversample,
            gate,
            noise_var,
            max_targets,
            ..DetectorConfig::default()
        };
        cfg.validate().map_err(py_err)?;
        let policy = match policy {
            "negation" => Policy::OffsetNegation,
            "paper" => Policy::PaperAvoidanceRule,
            other => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
        };
        Ok(Self {
            cfg,
            antijam: AntijamConfig {
                policy,
                ..AntijamConfig::default()
            },
        })
    }

    /// Dict with `psi`, `s`, `m_hat`, `verdicts`, `cause` and `mismatch_ratio`.
    fn detect<'py>(&self, py: Python<'py>, samples: Vec<Complex64>, reference: Vec<Complex64>) -> PyResult<Bound<'py, PyDict>> {
        let x = symbol(samples)?;
        let report = detector::detect(&x, &symbols_from_bins(&reference), &self.cfg).map_err(py_err)?;
        report_dict(py, &report)
    }

    fn estimate_offset(&self, samples: Vec<Complex64>, reference: Vec<Complex64>, i: usize) -> PyResult<(f64, bool)> {
        let x = symbol(samples)?;
        let est = detector::estimate_offset(&x, &symbols_from_bins(&reference), i, &self.cfg).map_err(py_err)?;
        Ok((est.m_hat, est.found))
    }

    /// Corrected samples plus `(psi_before, psi_after)`.
    fn correct(&self, samples: Vec<Complex64>, reference: Vec<Complex64>) -> PyResult<(Vec<Complex64>, usize, usize)> {
        let x = symbol(samples)?;
        let reference = symbols_from_bins(&reference);
        let report = detector::detect(&x, &reference, &self.cfg).map_err(py_err)?;
        let (fixed, _) = antijam::correct_report(&x, &reference, &report, &self.antijam).map_err(py_err)?;
        let out = antijam::verify_restoration(&x, &fixed, &reference, &self.cfg).map_err(py_err)?;
        Ok((fixed.into_samples(), out.psi_before, out.psi_after))
    }
}

/// Symbol-level ROC of an AWGN experiment; returns a dict with `tau`,
/// `p_f`, `p_d` and `auc` (`None` where undefined).
#[pyfunction]
#[pyo3(signature = (n, trials, snr_db = Some(5.0), jsr_db = 0.0, base_seed = 1, tau_grid = None))]
fn roc<'py>(
    py: Python<'py>,
    n: usize,
    trials: u64,
    snr_db: Option<f64>,
    jsr_db: f64,
    base_seed: u64,
    tau_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = TrialConfig {
        n,
        trials,
        snr_db,
        base_seed,
        jammer: Some(JammerSpec {
            jsr_db,
            ..JammerSpec::default()
        }),
        tau_grid: tau_grid.unwrap_or_else(sim::default_tau_grid),
        ..TrialConfig::default()
    };
    let curve = py.detach(|| sim::roc_for(&cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tau", curve.points.iter().map(|p| p.tau).collect::<Vec<_>>())?;
    d.set_item("p_f", curve.points.iter().map(|p| p.p_f).collect::<Vec<_>>())?;
    d.set_item("p_d", curve.points.iter().map(|p| p.p_d).collect::<Vec<_>>())?;
    d.set_item("auc", curve.auc)?;
    Ok(d)
}

#[pymodule(name = "nrjam")]
fn nrjam_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(geometric_sum, m)?)?;
    m.add_function(wrap_pyfunction!(trace_a, m)?)?;
    m.add_function(wrap_pyfunction!(psi_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_shift, m)?)?;
    m.add_function(wrap_pyfunction!(add_awgn, m)?)?;
    m.add_function(wrap_pyfunction!(ssb_summary, m)?)?;
    m.add_function(wrap_pyfunction!(select_m_prime_paper, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_class::<Detector>()?;
    Ok(())
}
