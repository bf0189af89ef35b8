//! Python bindings. Matrices cross the boundary as lists of rows; configs,
//! models and reports as dicts mirroring their JSON form.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use specocc_core::classify::{
    evaluate, Dataset, DtModel, LrModel, NbcKernel, NbcModel, SvmModel, Timings,
};
use specocc_core::data::{
    generate_synthetic, ActivityPattern, BandConfig, GeneratorConfig, Group, PowerMatrix,
};
use specocc_core::experiment::{
    emit_reports, run_experiment_on, ComparisonReport, ExperimentConfig,
};
use specocc_core::firefly::{
    ffa_optimize as core_ffa_optimize, svm_ffa_fit as core_svm_ffa_fit, SwarmConfig,
};
use specocc_core::hmm::{self, HmmModel, ObservationSequence, StateSequence};
use specocc_core::labeling::{self, LabelingCriteria, PuLabelVector};
use specocc_core::occupancy::{self, OccupancyVector, StatusMatrix};
use specocc_core::outage::{self, OutageOptions};
use specocc_core::{persist, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(m) => PyValueError::new_err(m),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn band_for(band: Option<&Bound<'_, PyAny>>, n_bins: usize) -> PyResult<BandConfig> {
    match band {
        Some(b) => from_py(b),
        None => BandConfig::new("array", 0.0, n_bins as f64, n_bins).map_err(py_err),
    }
}

fn power_matrix(rows: &[Vec<f64>], band: Option<&Bound<'_, PyAny>>) -> PyResult<PowerMatrix> {
    let n_bins = rows.first().map_or(0, Vec::len);
    PowerMatrix::from_rows(band_for(band, n_bins)?, rows).map_err(py_err)
}

fn status_matrix(rows: &[Vec<u8>]) -> PyResult<StatusMatrix> {
    StatusMatrix::from_rows(rows, f64::NAN).map_err(py_err)
}

fn status_rows(s: &StatusMatrix) -> Vec<Vec<u8>> {
    s.rows().map(<[u8]>::to_vec).collect()
}

fn dataset(features: &[Vec<u8>], labels: &[u8]) -> PyResult<Dataset> {
    Dataset::from_rows(features, labels).map_err(py_err)
}

/// Preset band: `gsm_880_915` or `gsm_925_960`.
#[pyfunction]
fn band<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    let b = match name {
        "gsm_880_915" => BandConfig::gsm_880_915(),
        "gsm_925_960" => BandConfig::gsm_925_960(),
        other => return Err(PyValueError::new_err(format!("unknown band '{other}'"))),
    };
    to_py(py, &b)
}

/// Band whose `num_bins` bins evenly tile `[f_start, f_stop]` MHz.
#[pyfunction]
fn make_band<'py>(
    py: Python<'py>,
    name: &str,
    f_start: f64,
    f_stop: f64,
    num_bins: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &BandConfig::new(name, f_start, f_stop, num_bins).map_err(py_err)?,
    )
}

/// Generator preset for group `"a"` or `"b"`; `pattern` is an activity dict
/// such as `{"periodic": {"period_slots": 60, "duty_cycle": 0.5}}`.
#[pyfunction]
#[pyo3(signature = (group, pattern, seed=0))]
fn generator<'py>(
    py: Python<'py>,
    group: &str,
    pattern: &Bound<'py, PyAny>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let group = match group.to_ascii_lowercase().as_str() {
        "a" => Group::A,
        "b" => Group::B,
        other => return Err(PyValueError::new_err(format!("unknown group '{other}'"))),
    };
    let pattern: ActivityPattern = from_py(pattern)?;
    to_py(py, &GeneratorConfig::preset(group, pattern, seed))
}

/// Returns `(power_rows, truth_rows)` for `n_slots` synthetic sweeps.
#[pyfunction]
fn generate(
    py: Python<'_>,
    generator: &Bound<'_, PyAny>,
    band: &Bound<'_, PyAny>,
    n_slots: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<u8>>)> {
    let g: GeneratorConfig = from_py(generator)?;
    let b: BandConfig = from_py(band)?;
    let (m, truth) = py
        .detach(|| generate_synthetic(&g, n_slots, &b))
        .map_err(py_err)?;
    let power = m.rows().map(<[f64]>::to_vec).collect();
    let truth = (0..truth.n_slots())
        .map(|i| (0..truth.n_bins()).map(|j| truth.get(i, j)).collect())
        .collect();
    Ok((power, truth))
}

/// Binary status: 1 where power exceeds `gamma` dBm.
#[pyfunction]
fn threshold_status(power: Vec<Vec<f64>>, gamma: f64) -> PyResult<Vec<Vec<u8>>> {
    Ok(status_rows(&occupancy::threshold_status(
        &power_matrix(&power, None)?,
        gamma,
    )))
}

/// Fraction of busy bins per slot.
#[pyfunction]
fn slot_occupancy(status: Vec<Vec<u8>>) -> PyResult<Vec<f64>> {
    Ok(occupancy::slot_occupancy(&status_matrix(&status)?).0)
}

/// Fraction of busy slots per bin.
#[pyfunction]
fn bin_occupancy(status: Vec<Vec<u8>>) -> PyResult<Vec<f64>> {
    Ok(occupancy::bin_occupancy(&status_matrix(&status)?).0)
}

/// Returns `(criteria, report)` chosen from `power`.
#[pyfunction]
#[pyo3(signature = (power, gammas=None, ms_grid=None, target_protection=labeling::DEFAULT_TARGET_PROTECTION))]
fn calibrate<'py>(
    py: Python<'py>,
    power: Vec<Vec<f64>>,
    gammas: Option<Vec<f64>>,
    ms_grid: Option<Vec<f64>>,
    target_protection: f64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let m = power_matrix(&power, None)?;
    let gammas = gammas.unwrap_or_else(|| vec![-102.0, -104.0, -106.0, -108.0]);
    let grid = ms_grid.unwrap_or_else(labeling::default_ms_grid);
    let (criteria, report) = py
        .detach(|| labeling::calibrate_with(&m, &gammas, &grid, target_protection))
        .map_err(py_err)?;
    Ok((to_py(py, &criteria)?, to_py(py, &report)?))
}

/// Primary-user label per slot under `criteria`.
#[pyfunction]
fn label_pu(status: Vec<Vec<u8>>, criteria: &Bound<'_, PyAny>) -> PyResult<Vec<u8>> {
    let s = status_matrix(&status)?;
    let c: LabelingCriteria = from_py(criteria)?;
    let occ = occupancy::slot_occupancy(&s);
    Ok(labeling::label_pu(&s, &occ, &c).map_err(py_err)?.0)
}

/// Labels 1 where occupancy exceeds `split`.
#[pyfunction]
fn split_labels(occupancy: Vec<f64>, split: f64) -> Vec<u8> {
    labeling::split_labels(&OccupancyVector(occupancy), split).0
}

/// Accuracy with misdetection and false-alarm counts.
#[pyfunction]
fn metrics<'py>(
    py: Python<'py>,
    predicted: Vec<u8>,
    reference: Vec<u8>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &evaluate(&predicted, &reference, Timings::default()).map_err(py_err)?,
    )
}

#[derive(Clone)]
enum Inner {
    Nbc(NbcModel),
    Dt(DtModel),
    Svm(SvmModel),
    Lr(LrModel),
}

/// Fitted supervised classifier.
#[pyclass(name = "Model", module = "specocc", frozen)]
struct PyModel {
    inner: Inner,
}

impl PyModel {
    fn n_features(&self) -> usize {
        match &self.inner {
            Inner::Nbc(m) => m.n_features(),
            Inner::Dt(m) => m.n_features,
            Inner::Svm(m) => m.weights.len(),
            Inner::Lr(m) => m.coefficients.len(),
        }
    }
}

#[pymethods]
impl PyModel {
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner {
            Inner::Nbc(_) => "nbc",
            Inner::Dt(_) => "dt",
            Inner::Svm(_) => "svm",
            Inner::Lr(_) => "lr",
        }
    }

    #[getter(n_features)]
    fn py_n_features(&self) -> usize {
        self.n_features()
    }

    /// Predicted labels for each row of binary features.
    fn predict(&self, rows: Vec<Vec<u8>>) -> PyResult<Vec<u8>> {
        let k = self.n_features();
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(PyValueError::new_err(format!(
                "row has {} features, model expects {k}",
                bad.len()
            )));
        }
        let flat: Vec<u8> = rows.concat();
        Ok(match &self.inner {
            Inner::Nbc(m) => m.predict(&flat),
            Inner::Dt(m) => m.predict(&flat),
            Inner::Svm(m) => m.predict(&flat),
            Inner::Lr(m) => m.predict(&flat),
        })
    }

    /// Versioned JSON document.
    fn to_json(&self) -> PyResult<String> {
        match &self.inner {
            Inner::Nbc(m) => persist::to_json(m),
            Inner::Dt(m) => persist::to_json(m),
            Inner::Svm(m) => persist::to_json(m),
            Inner::Lr(m) => persist::to_json(m),
        }
        .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(kind: &str, text: &str) -> PyResult<PyModel> {
        let inner = match kind {
            "nbc" => Inner::Nbc(persist::from_json(text).map_err(py_err)?),
            "dt" => Inner::Dt(persist::from_json(text).map_err(py_err)?),
            "svm" => Inner::Svm(persist::from_json(text).map_err(py_err)?),
            "lr" => Inner::Lr(persist::from_json(text).map_err(py_err)?),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown model kind '{other}'"
                )))
            }
        };
        Ok(PyModel { inner })
    }

    /// Parameters as a dict.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        match &self.inner {
            Inner::Nbc(m) => to_py(py, m),
            Inner::Dt(m) => to_py(py, m),
            Inner::Svm(m) => to_py(py, m),
            Inner::Lr(m) => to_py(py, m),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, n_features={})",
            self.kind(),
            self.n_features()
        )
    }
}

/// Fits `kind` (`nbc`, `dt`, `svm` or `lr`) on binary feature rows.
#[pyfunction]
#[pyo3(signature = (
    kind,
    features,
    labels,
    kernel="bernoulli",
    min_obs_per_node=specocc_core::classify::tree::DEFAULT_MIN_OBS_PER_NODE,
    box_constraint=specocc_core::classify::svm::DEFAULT_BOX_CONSTRAINT,
    max_predictors=specocc_core::classify::stepwise::DEFAULT_MAX_PREDICTORS,
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    kind: &str,
    features: Vec<Vec<u8>>,
    labels: Vec<u8>,
    kernel: &str,
    min_obs_per_node: usize,
    box_constraint: f64,
    max_predictors: usize,
) -> PyResult<PyModel> {
    let train = dataset(&features, &labels)?;
    let kernel = match kernel {
        "bernoulli" => NbcKernel::Bernoulli,
        "gaussian" => NbcKernel::Gaussian,
        other => return Err(PyValueError::new_err(format!("unknown kernel '{other}'"))),
    };
    let inner = py.detach(|| -> Result<Inner, Error> {
        Ok(match kind {
            "nbc" => Inner::Nbc(NbcModel::fit(&train, kernel)),
            "dt" => Inner::Dt(DtModel::fit(&train, min_obs_per_node)),
            "svm" => Inner::Svm(SvmModel::fit(&train, box_constraint)?),
            "lr" => Inner::Lr(LrModel::fit(&train, max_predictors)?),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown classifier '{other}'"
                )))
            }
        })
    });
    Ok(PyModel {
        inner: inner.map_err(py_err)?,
    })
}

/// Firefly-tuned SVM. Returns a dict with `model`, `best_box_constraint`,
/// `best_validation_ca` and `history`.
#[pyfunction]
#[pyo3(signature = (train_features, train_labels, validation_features, validation_labels, swarm=None))]
fn svm_ffa_fit<'py>(
    py: Python<'py>,
    train_features: Vec<Vec<u8>>,
    train_labels: Vec<u8>,
    validation_features: Vec<Vec<u8>>,
    validation_labels: Vec<u8>,
    swarm: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let train = dataset(&train_features, &train_labels)?;
    let validation = dataset(&validation_features, &validation_labels)?;
    let cfg: SwarmConfig = swarm.map(from_py).transpose()?.unwrap_or_default();
    let fit = py
        .detach(|| core_svm_ffa_fit(&train, &validation, &cfg))
        .map_err(py_err)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item(
        "model",
        PyModel {
            inner: Inner::Svm(fit.model),
        },
    )?;
    out.set_item("best_box_constraint", fit.best_box_constraint)?;
    out.set_item("best_validation_ca", fit.best_validation_ca)?;
    out.set_item("history", to_py(py, &fit.history)?)?;
    Ok(out.into_any())
}

/// Default swarm settings as a dict.
#[pyfunction]
fn swarm_config(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &SwarmConfig::default())
}

/// Maximises a Python callable `objective(x) -> float` over `swarm["bounds"]`.
#[pyfunction]
#[pyo3(signature = (objective, swarm=None))]
fn ffa_optimize<'py>(
    py: Python<'py>,
    objective: Py<PyAny>,
    swarm: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: SwarmConfig = swarm.map(from_py).transpose()?.unwrap_or_default();
    let result = py.detach(|| {
        core_ffa_optimize(
            |x| {
                Python::attach(|py| objective.call1(py, (x,)).and_then(|v| v.extract::<f64>(py)))
                    .map_err(|e| Error::InvalidConfig(format!("objective failed: {e}")))
            },
            &cfg,
        )
    });
    to_py(py, &result.map_err(py_err)?)
}

/// Fixed untrained two-state model.
#[pyfunction]
fn default_hmm(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &HmmModel::default_untrained())
}

fn hmm_model(obj: &Bound<'_, PyAny>) -> PyResult<HmmModel> {
    let m: HmmModel = from_py(obj)?;
    m.validate().map_err(py_err)?;
    Ok(m)
}

/// Counting estimate with additive smoothing `alpha`.
#[pyfunction]
#[pyo3(signature = (states, observations, n_symbols, alpha=hmm::DEFAULT_SMOOTHING))]
fn estimate_hmm<'py>(
    py: Python<'py>,
    states: Vec<usize>,
    observations: Vec<usize>,
    n_symbols: usize,
    alpha: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let m = hmm::estimate_hmm_with(
        &StateSequence(states),
        &ObservationSequence(observations),
        n_symbols,
        alpha,
    )
    .map_err(py_err)?;
    to_py(py, &m)
}

/// Log-likelihood of the sequence.
#[pyfunction]
fn hmm_forward(model: &Bound<'_, PyAny>, observations: Vec<usize>) -> PyResult<f64> {
    hmm::forward(&hmm_model(model)?, &ObservationSequence(observations)).map_err(py_err)
}

/// Returns `(states, log_probability)` of the most likely path.
#[pyfunction]
fn hmm_viterbi(model: &Bound<'_, PyAny>, observations: Vec<usize>) -> PyResult<(Vec<usize>, f64)> {
    let p = hmm::viterbi(&hmm_model(model)?, &ObservationSequence(observations)).map_err(py_err)?;
    Ok((p.states.0, p.log_probability))
}

/// Symbol 1 where occupancy exceeds `split`.
#[pyfunction]
fn discretize_observations(occupancy: Vec<f64>, split: f64) -> PyResult<Vec<usize>> {
    Ok(
        hmm::discretize_observations(&OccupancyVector(occupancy), split)
            .map_err(py_err)?
            .0,
    )
}

/// Idle runs that fit an `out_su`-slot transmission.
#[pyfunction]
fn free_blocks<'py>(
    py: Python<'py>,
    labels: Vec<u8>,
    out_su: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &outage::find_free_blocks(&PuLabelVector(labels), out_su).map_err(py_err)?,
    )
}

/// Secondary-user outage report.
#[pyfunction]
#[pyo3(signature = (labels, occupancy, out_su=5, options=None))]
fn outage_probability<'py>(
    py: Python<'py>,
    labels: Vec<u8>,
    occupancy: Vec<f64>,
    out_su: usize,
    options: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts: OutageOptions = options.map(from_py).transpose()?.unwrap_or_default();
    let r = outage::su_outage_probability(
        &PuLabelVector(labels),
        &OccupancyVector(occupancy),
        out_su,
        opts,
    )
    .map_err(py_err)?;
    to_py(py, &r)
}

fn report_dict<'py>(py: Python<'py>, r: &ComparisonReport) -> PyResult<Bound<'py, PyAny>> {
    let out = pyo3::types::PyDict::new(py);
    out.set_item("rows", to_py(py, &r.rows)?)?;
    out.set_item("summaries", to_py(py, &r.summaries)?)?;
    out.set_item("outage", to_py(py, &r.outage)?)?;
    out.set_item("calibrations", to_py(py, &r.calibrations)?)?;
    out.set_item("tuning", to_py(py, &r.tuning)?)?;
    out.set_item("bin_occupancy", to_py(py, &r.bin_occupancy)?)?;
    out.set_item(
        "occupancy_vs_threshold",
        to_py(py, &r.occupancy_vs_threshold)?,
    )?;
    out.set_item("skipped_days", to_py(py, &r.skipped_days)?)?;
    Ok(out.into_any())
}

/// Runs the full comparison. Report files are written when `output_dir` is given.
#[pyfunction]
#[pyo3(signature = (config, output_dir=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: &Bound<'py, PyAny>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig = from_py(config)?;
    cfg.validate().map_err(py_err)?;
    let report = py
        .detach(|| -> Result<ComparisonReport, Error> {
            let data = cfg.load_data()?;
            let report = run_experiment_on(&cfg, &data)?;
            if let Some(dir) = &output_dir {
                emit_reports(&report, dir)?;
            }
            Ok(report)
        })
        .map_err(py_err)?;
    report_dict(py, &report)
}

/// Reads and validates a JSON experiment config into a dict.
#[pyfunction]
fn load_config(py: Python<'_>, path: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    let cfg = ExperimentConfig::load(&path).map_err(py_err)?;
    cfg.validate().map_err(py_err)?;
    to_py(py, &cfg)
}

#[pymodule]
fn specocc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(band, m)?)?;
    m.add_function(wrap_pyfunction!(make_band, m)?)?;
    m.add_function(wrap_pyfunction!(generator, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_status, m)?)?;
    m.add_function(wrap_pyfunction!(slot_occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(bin_occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(label_pu, m)?)?;
    m.add_function(wrap_pyfunction!(split_labels, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(svm_ffa_fit, m)?)?;
    m.add_function(wrap_pyfunction!(swarm_config, m)?)?;
    m.add_function(wrap_pyfunction!(ffa_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(default_hmm, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_hmm, m)?)?;
    m.add_function(wrap_pyfunction!(hmm_forward, m)?)?;
    m.add_function(wrap_pyfunction!(hmm_viterbi, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_observations, m)?)?;
    m.add_function(wrap_pyfunction!(free_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(outage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    Ok(())
}
