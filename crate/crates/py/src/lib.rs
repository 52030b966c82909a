//! Python bindings for `rfbias_core`.
//!
//! Vectors cross the boundary as Python lists of floats. Errors from the core
//! library surface as `rfbias.RfbiasError`, a `ValueError` subclass.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rfbias_core::evaluation::{pearson, RunsMethod};
use rfbias_core::model_io::{forest_from_json, forest_to_json, load_correction, load_forest, save_correction, save_forest};
use rfbias_core::{
    CorrectionFamily, CorrectionModel, Dataset, EvaluationReport, ForestModel, ForestParams, PureForestParams,
    RunsTestResult, Sign, SplitSpec, SyntheticSpec,
};

create_exception!(rfbias, RfbiasError, PyValueError);

fn err(e: rfbias_core::Error) -> PyErr {
    RfbiasError::new_err(e.to_string())
}

#[pyclass(name = "Dataset", module = "rfbias", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, target, feature_names=None, target_name="target"))]
    fn new(
        features: Vec<Vec<f64>>,
        target: Vec<f64>,
        feature_names: Option<Vec<String>>,
        target_name: &str,
    ) -> PyResult<Self> {
        let p = features.first().map_or(0, Vec::len);
        let names = feature_names.unwrap_or_else(|| (0..p).map(rfbias_core::data::feature_label).collect());
        let inner = Dataset::from_rows(features, target, names, target_name).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn target_name(&self) -> String {
        self.inner.target_name().to_string()
    }

    #[getter]
    fn target(&self) -> Vec<f64> {
        self.inner.target().to_vec()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n_rows={}, n_features={})", self.inner.n_rows(), self.inner.n_features())
    }
}

#[pyclass(name = "ForestModel", module = "rfbias", frozen)]
struct PyForest {
    inner: ForestModel,
}

#[pymethods]
impl PyForest {
    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees.len()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.params.family_name()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn predict(&self, py: Python<'_>, data: PyRef<'_, PyDataset>) -> PyResult<Vec<f64>> {
        let data = &data.inner;
        py.detach(|| self.inner.predict_batch(data)).map_err(err)
    }

    fn predict_row(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&row).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        forest_to_json(&self.inner).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        forest_from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_forest(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_forest(&path).map(|inner| Self { inner }).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ForestModel(family='{}', n_trees={})", self.family(), self.n_trees())
    }
}

#[pyclass(name = "CorrectionModel", module = "rfbias", frozen)]
struct PyCorrection {
    inner: CorrectionModel,
}

#[pymethods]
impl PyCorrection {
    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.as_str()
    }

    /// `(a, b, c, d)` of `y = d * g((x - b) / a) + c`.
    #[getter]
    fn params(&self) -> (f64, f64, f64, f64) {
        (self.inner.a, self.inner.b, self.inner.c, self.inner.d)
    }

    #[getter]
    fn fit_sse(&self) -> f64 {
        self.inner.fit_sse
    }

    #[getter]
    fn warning(&self) -> bool {
        self.inner.warning
    }

    fn apply(&self, predictions: Vec<f64>) -> Vec<f64> {
        self.inner.apply(&predictions)
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_correction(&self.inner, &path).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_correction(&path).map(|inner| Self { inner }).map_err(err)
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!(
            "CorrectionModel(family='{}', a={}, b={}, c={}, d={}, fit_sse={})",
            m.family, m.a, m.b, m.c, m.d, m.fit_sse
        )
    }
}

#[pyfunction]
#[pyo3(signature = (coefficients, noise_terms=0, n_points=50_000, seed=0))]
fn generate_synthetic(coefficients: Vec<f64>, noise_terms: usize, n_points: usize, seed: u64) -> PyResult<PyDataset> {
    let spec = SyntheticSpec::new(coefficients, noise_terms, n_points);
    rfbias_core::generate_synthetic(&spec, seed)
        .map(|inner| PyDataset { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (path, target, categorical=Vec::new()))]
fn load_csv(path: PathBuf, target: &str, categorical: Vec<String>) -> PyResult<PyDataset> {
    rfbias_core::load_csv(&path, target, &categorical)
        .map(|load| PyDataset { inner: load.dataset })
        .map_err(err)
}

/// Returns `(train, validation, test)`.
#[pyfunction]
#[pyo3(signature = (data, train=0.8, validation=0.0, test=0.2, seed=0))]
fn split_dataset(
    data: PyRef<'_, PyDataset>,
    train: f64,
    validation: f64,
    test: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyDataset, PyDataset)> {
    let spec = SplitSpec {
        train_fraction: train,
        validation_fraction: validation,
        test_fraction: test,
        seed,
    };
    let parts = rfbias_core::split_dataset(&data.inner, &spec).map_err(err)?;
    Ok((
        PyDataset { inner: parts.train },
        PyDataset { inner: parts.validation },
        PyDataset { inner: parts.test },
    ))
}

#[pyfunction]
#[pyo3(signature = (data, ntree=500, mtry=None, nodesize=5, max_terminal_nodes=None, bootstrap=true, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train_forest(
    py: Python<'_>,
    data: PyRef<'_, PyDataset>,
    ntree: usize,
    mtry: Option<usize>,
    nodesize: usize,
    max_terminal_nodes: Option<usize>,
    bootstrap: bool,
    seed: u64,
) -> PyResult<PyForest> {
    let data = &data.inner;
    let defaults = ForestParams::for_features(data.n_features());
    let params = ForestParams {
        ntree,
        mtry: mtry.unwrap_or(defaults.mtry),
        nodesize,
        max_terminal_nodes,
        bootstrap,
        seed,
    };
    py.detach(|| rfbias_core::train_forest(data, &params))
        .map(|inner| PyForest { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (data, ntree=500, leaf_min=5, seed=0))]
fn train_pure_forest(
    py: Python<'_>,
    data: PyRef<'_, PyDataset>,
    ntree: usize,
    leaf_min: usize,
    seed: u64,
) -> PyResult<PyForest> {
    let data = &data.inner;
    let params = PureForestParams { ntree, leaf_min, seed };
    py.detach(|| rfbias_core::train_pure_forest(data, &params))
        .map(|inner| PyForest { inner })
        .map_err(err)
}

/// Ordinary least squares on all features; returns `(intercept, coefficients)`.
#[pyfunction]
fn fit_ols(data: PyRef<'_, PyDataset>) -> PyResult<(f64, Vec<f64>)> {
    let m = rfbias_core::fit_ols(&data.inner).map_err(err)?;
    Ok((m.intercept, m.coefficients))
}

fn parse_family(name: &str) -> PyResult<CorrectionFamily> {
    name.parse().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (predictions, truths, family="logit"))]
fn fit_correction(predictions: Vec<f64>, truths: Vec<f64>, family: &str) -> PyResult<PyCorrection> {
    let family = parse_family(family)?;
    rfbias_core::fit_correction(&predictions, &truths, family)
        .map(|inner| PyCorrection { inner })
        .map_err(err)
}

/// Fits every family and returns `(family_name, model)` for the lowest SSE.
#[pyfunction]
fn select_family(predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<(&'static str, PyCorrection)> {
    let (family, inner) = rfbias_core::select_family(&predictions, &truths).map_err(err)?;
    Ok((family.as_str(), PyCorrection { inner }))
}

#[pyfunction]
fn mse(predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<f64> {
    rfbias_core::mse(&predictions, &truths).map_err(err)
}

/// Least-squares line of truth on prediction; returns `(slope, intercept)`.
#[pyfunction]
fn fit_line(predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<(f64, f64)> {
    rfbias_core::fit_line(&predictions, &truths).map_err(err)
}

#[pyfunction]
fn pearson_r(predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<f64> {
    pearson(&predictions, &truths).map_err(err)
}

#[pyfunction]
fn linearized_residuals(predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<Vec<f64>> {
    rfbias_core::linearized_residuals(&predictions, &truths).map_err(err)
}

fn runs_dict<'py>(py: Python<'py>, t: &RunsTestResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n_pos", t.n_pos)?;
    d.set_item("n_neg", t.n_neg)?;
    d.set_item("runs", t.runs)?;
    d.set_item("mean", t.mean)?;
    d.set_item("variance", t.variance)?;
    d.set_item("z", t.z)?;
    d.set_item("p_one_tailed", t.p_one_tailed)?;
    let method = match t.method {
        RunsMethod::Exact => "exact",
        RunsMethod::NormalApprox => "normal",
    };
    d.set_item("method", method)?;
    Ok(d)
}

/// One-tailed runs test on a sequence of signs. Positive numbers (or `True`)
/// count as `+`, everything else as `-`.
#[pyfunction]
fn runs_test<'py>(py: Python<'py>, signs: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let signs: Vec<Sign> = signs.iter().map(|&s| if s > 0.0 { Sign::Pos } else { Sign::Neg }).collect();
    let t = rfbias_core::runs_test(&signs).map_err(err)?;
    runs_dict(py, &t)
}

fn report_dict<'py>(py: Python<'py>, r: &EvaluationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("mse", r.mse)?;
    d.set_item("slope", r.slope)?;
    d.set_item("intercept", r.intercept)?;
    match &r.runs_test {
        Some(t) => d.set_item("runs_test", runs_dict(py, t)?)?,
        None => d.set_item("runs_test", py.None())?,
    }
    d.set_item("truth_range", r.truth_range)?;
    d.set_item("prediction_range", r.prediction_range)?;
    d.set_item("range_coverage", r.range_coverage())?;
    Ok(d)
}

#[pyfunction]
fn evaluate<'py>(py: Python<'py>, predictions: Vec<f64>, truths: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = rfbias_core::evaluate(&predictions, &truths).map_err(err)?;
    report_dict(py, &r)
}

#[pymodule]
fn rfbias(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RfbiasError", m.py().get_type::<RfbiasError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyCorrection>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(split_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train_forest, m)?)?;
    m.add_function(wrap_pyfunction!(train_pure_forest, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ols, m)?)?;
    m.add_function(wrap_pyfunction!(fit_correction, m)?)?;
    m.add_function(wrap_pyfunction!(select_family, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(fit_line, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_r, m)?)?;
    m.add_function(wrap_pyfunction!(linearized_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(runs_test, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
