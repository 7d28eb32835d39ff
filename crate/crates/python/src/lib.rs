//! Python bindings. Structured results (reports, flows, summaries) come back
//! as plain dicts and lists built from their JSON form.

use std::path::PathBuf;

use anflo_core::corpus::{load_bundle, load_corpus, parse_bundle};
use anflo_core::learn::parse_topic_labels;
use anflo_core::textproc::{self, LemmaDictionary, StopwordSet};
use anflo_core::topics::TopicModelParams;
use anflo_core::{
    classify_batch, compute_threshold as threshold, learn as learn_models, parse_program,
    propagate_taint, ApiCatalog, AppBundle, CorpusFilterPolicy, FlowModelSet, GroupingStrategy,
    LearnConfig, ProgramIR, Provenance, QuantileMethod,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

/// Classification output: reports plus (app id, message) errors.
type Classified<'py> = (Bound<'py, PyAny>, Vec<(String, String)>);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Preprocessor", module = "anflo", frozen)]
struct PyPreprocessor {
    inner: anflo_core::Preprocessor,
}

#[pymethods]
impl PyPreprocessor {
    #[new]
    #[pyo3(signature = (stopwords=None, lemmas=None, english_threshold=None))]
    fn new(
        stopwords: Option<PathBuf>,
        lemmas: Option<PathBuf>,
        english_threshold: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = anflo_core::Preprocessor::default();
        if let Some(p) = stopwords {
            inner.stopwords =
                StopwordSet::load(&p).map_err(|e| PyIOError::new_err(e.to_string()))?;
        }
        if let Some(p) = lemmas {
            inner.lemmas = LemmaDictionary::load(&p).map_err(value_err)?;
        }
        if let Some(t) = english_threshold {
            inner.english_threshold = t;
        }
        Ok(PyPreprocessor { inner })
    }

    fn preprocess(&self, text: &str) -> Vec<String> {
        self.inner.preprocess(text).0
    }

    fn is_english(&self, text: &str) -> bool {
        self.inner.is_english(text)
    }
}

#[pyclass(name = "Catalog", module = "anflo", frozen)]
struct PyCatalog {
    inner: ApiCatalog,
}

#[pymethods]
impl PyCatalog {
    /// The built-in catalog when called without arguments.
    #[new]
    #[pyo3(signature = (text=None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => ApiCatalog::parse(t).map_err(value_err)?,
            None => ApiCatalog::builtin(),
        };
        Ok(PyCatalog { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCatalog {
            inner: ApiCatalog::load(&path).map_err(value_err)?,
        })
    }

    fn group(&self, api: &str) -> Option<String> {
        self.inner.get(api).map(|e| e.permission_group.clone())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn catalog_or_builtin(catalog: Option<&PyCatalog>) -> ApiCatalog {
    catalog.map_or_else(ApiCatalog::builtin, |c| c.inner.clone())
}

#[pyclass(name = "Program", module = "anflo", frozen)]
struct PyProgram {
    inner: ProgramIR,
}

#[pymethods]
impl PyProgram {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyProgram {
            inner: parse_program(text).map_err(value_err)?,
        })
    }

    #[getter]
    fn components(&self) -> Vec<String> {
        self.inner
            .components
            .iter()
            .map(|c| c.name.clone())
            .collect()
    }

    fn statement_count(&self) -> usize {
        self.inner.statement_count()
    }

    /// Flow facts as dicts with `source_group`, `sink_group` and `witness`.
    #[pyo3(signature = (catalog=None))]
    fn flows<'py>(
        &self,
        py: Python<'py>,
        catalog: Option<&PyCatalog>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let analysis =
            propagate_taint(&self.inner, &catalog_or_builtin(catalog)).map_err(value_err)?;
        to_py(py, &analysis.facts)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(name = "Bundle", module = "anflo", frozen)]
struct PyBundle {
    inner: AppBundle,
}

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyBundle {
            inner: load_bundle(&path, Provenance::UnderAnalysis).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyBundle {
            inner: parse_bundle(text, "<string>", Provenance::UnderAnalysis).map_err(value_err)?,
        })
    }

    #[getter]
    fn app_id(&self) -> &str {
        &self.inner.app_id
    }

    #[getter]
    fn description(&self) -> &str {
        &self.inner.description
    }

    #[getter]
    fn category(&self) -> Option<&str> {
        self.inner.category.as_deref()
    }

    #[getter]
    fn program(&self) -> PyProgram {
        PyProgram {
            inner: self.inner.program.clone(),
        }
    }

    fn __str__(&self) -> String {
        self.inner.to_bundle_text()
    }
}

#[pyclass(name = "ModelSet", module = "anflo", frozen)]
struct PyModelSet {
    inner: FlowModelSet,
}

#[pymethods]
impl PyModelSet {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Self::from_json(&text)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModelSet {
            inner: FlowModelSet::from_json(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.inner.to_json()).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn strategy(&self) -> String {
        self.inner.strategy.to_string()
    }

    /// Group keys, in order.
    #[getter]
    fn groups(&self) -> Vec<String> {
        self.inner.matrices.keys().cloned().collect()
    }

    /// One matrix as a dict (`group_key`, `label`, `apps`, `counts`, `tau`).
    fn matrix<'py>(&self, py: Python<'py>, key_or_label: &str) -> PyResult<Bound<'py, PyAny>> {
        let m = self
            .inner
            .matrix(key_or_label)
            .or_else(|| self.inner.matrix_by_label(key_or_label))
            .ok_or_else(|| PyValueError::new_err(format!("no matrix `{key_or_label}`")))?;
        to_py(py, m)
    }

    /// Classify bundles; returns (reports, errors) where errors pairs each
    /// failing app id with its message.
    #[pyo3(signature = (bundles, catalog=None, preprocessor=None, jobs=1))]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        bundles: Vec<PyRef<'py, PyBundle>>,
        catalog: Option<&PyCatalog>,
        preprocessor: Option<&PyPreprocessor>,
        jobs: usize,
    ) -> PyResult<Classified<'py>> {
        let owned: Vec<AppBundle> = bundles.iter().map(|b| b.inner.clone()).collect();
        let catalog = catalog_or_builtin(catalog);
        let text = preprocessor.map(|p| p.inner.clone()).unwrap_or_default();
        let (results, summary) = classify_batch(&self.inner, &owned, &catalog, &text, jobs);
        let reports: Vec<_> = results
            .into_iter()
            .filter_map(Result::ok)
            .map(|mut r| {
                r.timing_ms = None;
                r
            })
            .collect();
        Ok((to_py(py, &reports)?, summary.errors))
    }
}

/// Learn a model set from a directory of trusted bundles. Returns the model
/// set and the learn summary (as a dict).
#[pyfunction]
#[pyo3(signature = (
    corpus,
    strategy="topic",
    k=30,
    seed=0,
    train_iters=None,
    topic_labels=None,
    quantile="interpolated",
    min_words=None,
    catalog=None,
    preprocessor=None,
))]
#[allow(clippy::too_many_arguments)]
fn learn<'py>(
    py: Python<'py>,
    corpus: PathBuf,
    strategy: &str,
    k: usize,
    seed: u64,
    train_iters: Option<usize>,
    topic_labels: Option<&str>,
    quantile: &str,
    min_words: Option<usize>,
    catalog: Option<&PyCatalog>,
    preprocessor: Option<&PyPreprocessor>,
) -> PyResult<(PyModelSet, Bound<'py, PyAny>)> {
    let text = preprocessor.map(|p| p.inner.clone()).unwrap_or_default();
    let strategy: GroupingStrategy = strategy.parse().map_err(PyValueError::new_err)?;
    let quantile: QuantileMethod = quantile.parse().map_err(PyValueError::new_err)?;
    let mut topic_params = TopicModelParams {
        seed,
        ..TopicModelParams::with_topics(k)
    };
    if let Some(n) = train_iters {
        topic_params.train_iters = n;
    }
    let mut filter_policy = CorpusFilterPolicy::default();
    if let Some(n) = min_words {
        filter_policy.min_description_words = n;
    }
    let config = LearnConfig {
        strategy,
        topic_params,
        filter_policy,
        quantile_method: quantile,
        topic_labels: topic_labels.map_or_else(Vec::new, |t| parse_topic_labels(t, &text)),
    };
    let bundles = load_corpus(&corpus, Provenance::Trusted).map_err(value_err)?;
    let (set, summary) = py
        .detach(|| learn_models(bundles, &catalog_or_builtin(catalog), &text, &config))
        .map_err(value_err)?;
    Ok((PyModelSet { inner: set }, to_py(py, &summary)?))
}

/// Porter stem of one lowercase word.
#[pyfunction]
fn stem(word: &str) -> String {
    textproc::stem(word)
}

/// Boxplot lower fence Q1 − 1.5·IQR of the given counts.
#[pyfunction]
#[pyo3(signature = (counts, method="interpolated"))]
fn compute_threshold(counts: Vec<u32>, method: &str) -> PyResult<f64> {
    let method: QuantileMethod = method.parse().map_err(PyValueError::new_err)?;
    threshold(&counts, method).map_err(value_err)
}

#[pymodule]
fn anflo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPreprocessor>()?;
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyModelSet>()?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(compute_threshold, m)?)?;
    Ok(())
}
