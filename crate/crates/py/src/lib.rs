//! Python bindings for sample-size extraction.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use trialsize::candidates::extract_candidates;
use trialsize::corpus::{self, Category};
use trialsize::embeddings::ClusterModel;
use trialsize::features::{FeatureGroup, Lexicons};
use trialsize::pipeline::{self, TrainConfig};
use trialsize::svm::{self, GridSpec};
use trialsize::synth::{generate_split, SynthOptions};

fn py_err(e: trialsize::Error) -> PyErr {
    match e {
        trialsize::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A parsed abstract.
#[pyclass(name = "Abstract", module = "pytrialsize", frozen, from_py_object)]
#[derive(Clone)]
struct PyAbstract {
    inner: corpus::Abstract,
}

#[pymethods]
impl PyAbstract {
    /// Builds an abstract from `(heading, text)` sections.
    #[new]
    #[pyo3(signature = (id, sections, gold_size=None))]
    fn new(id: &str, sections: Vec<(String, String)>, gold_size: Option<u64>) -> PyResult<Self> {
        let parts: Vec<(Option<Category>, Option<&str>, &str)> = sections
            .iter()
            .map(|(h, t)| (Some(Category::from_heading(h)), Some(h.as_str()), t.as_str()))
            .collect();
        let inner = corpus::Abstract::build(id, gold_size, &parts).map_err(py_err)?;
        Ok(PyAbstract { inner })
    }

    /// Parses one corpus line.
    #[staticmethod]
    fn from_json(line: &str) -> PyResult<Self> {
        let report = corpus::parse_corpus(line.as_bytes(), Default::default()).map_err(py_err)?;
        match <[_; 1]>::try_from(report.abstracts) {
            Ok([inner]) => Ok(PyAbstract { inner }),
            Err(_) => Err(PyValueError::new_err("expected exactly one abstract")),
        }
    }

    /// Parses `HEADING: text` plain text.
    #[staticmethod]
    fn from_plain(id: &str, text: &str) -> PyResult<Self> {
        Ok(PyAbstract {
            inner: corpus::parse_plain(id, text).map_err(py_err)?,
        })
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn gold_size(&self) -> Option<u64> {
        self.inner.gold_size
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_record()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Integer candidates as `(value, sentence_index, surface)` tuples.
    fn candidates(&self) -> Vec<(u64, usize, String)> {
        extract_candidates(&self.inner)
            .into_iter()
            .map(|c| (c.value, c.sentence_index, c.surface))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Abstract(id={:?}, gold_size={:?})", self.inner.id, self.inner.gold_size)
    }
}

/// Outcome of `Model.predict`.
#[pyclass(name = "Prediction", module = "pytrialsize", frozen, get_all)]
struct PyPrediction {
    abstract_id: String,
    size: Option<u64>,
    probability: Option<f64>,
    /// `(value, probability)` for every candidate in document order.
    candidates: Vec<(u64, f64)>,
}

#[pymethods]
impl PyPrediction {
    fn __repr__(&self) -> String {
        format!("Prediction(id={:?}, size={:?}, probability={:?})", self.abstract_id, self.size, self.probability)
    }
}

/// A trained, calibrated classifier.
#[pyclass(name = "Model", module = "pytrialsize", frozen)]
struct PyModel {
    inner: svm::SvmModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: svm::SvmModel::load(path).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.params.cost
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.params.gamma
    }

    fn predict(&self, abstract_: &PyAbstract) -> PyPrediction {
        let p = pipeline::predict_size(&self.inner, &abstract_.inner);
        PyPrediction {
            abstract_id: p.abstract_id,
            size: p.predicted_value,
            probability: p.probability,
            candidates: p.candidate_probabilities.iter().map(|(c, q)| (c.value, *q)).collect(),
        }
    }

    /// `(n_correct, n_abstracts, accuracy, ci_low, ci_high)`.
    fn evaluate(&self, py: Python<'_>, abstracts: Vec<PyAbstract>) -> PyResult<(usize, usize, f64, f64, f64)> {
        let corpus: Vec<_> = abstracts.into_iter().map(|a| a.inner).collect();
        let r = py
            .detach(|| pipeline::evaluate(&self.inner, &corpus))
            .map_err(py_err)?;
        Ok((r.n_correct, r.n_abstracts, r.accuracy, r.ci_low, r.ci_high))
    }
}

/// Trains a model. Without `cost` and `gamma` the default grid is searched.
#[pyfunction]
#[pyo3(signature = (abstracts, cost=None, gamma=None, groups=None, seed=0))]
fn train(
    py: Python<'_>,
    abstracts: Vec<PyAbstract>,
    cost: Option<f64>,
    gamma: Option<f64>,
    groups: Option<Vec<String>>,
    seed: u64,
) -> PyResult<PyModel> {
    let mut config = TrainConfig::default();
    config.grid_options.seed = seed;
    match (cost, gamma) {
        (Some(c), Some(g)) => config.grid = GridSpec::single(c, g),
        (None, None) => {}
        _ => return Err(PyValueError::new_err("give both cost and gamma, or neither")),
    }
    if let Some(groups) = groups {
        let parsed: Vec<FeatureGroup> = groups
            .iter()
            .map(|g| FeatureGroup::parse(g).ok_or_else(|| PyValueError::new_err(format!("unknown feature group {g:?}"))))
            .collect::<PyResult<_>>()?;
        config.groups = trialsize::features::feature_groups(&parsed).map_err(py_err)?;
    }
    let corpus: Vec<_> = abstracts.into_iter().map(|a| a.inner).collect();
    let out = py
        .detach(|| pipeline::train(&corpus, &ClusterModel::empty(), &Lexicons::default(), &config))
        .map_err(py_err)?;
    Ok(PyModel { inner: out.model })
}

#[pyfunction]
fn load_corpus(path: &str) -> PyResult<Vec<PyAbstract>> {
    Ok(corpus::load_corpus(path)
        .map_err(py_err)?
        .into_iter()
        .map(|inner| PyAbstract { inner })
        .collect())
}

/// Synthetic `(train, test)` corpora with planted sizes.
#[pyfunction]
#[pyo3(signature = (n_train, n_test, seed=7))]
fn synthetic_corpus(n_train: usize, n_test: usize, seed: u64) -> PyResult<(Vec<PyAbstract>, Vec<PyAbstract>)> {
    let opts = SynthOptions {
        seed,
        ..SynthOptions::default()
    };
    let (a, b) = generate_split(n_train, n_test, opts).map_err(py_err)?;
    let wrap = |v: Vec<corpus::Abstract>| v.into_iter().map(|inner| PyAbstract { inner }).collect();
    Ok((wrap(a), wrap(b)))
}

/// Exact binomial interval `(low, high)`.
#[pyfunction]
#[pyo3(signature = (successes, n, confidence=0.95))]
fn clopper_pearson(successes: u64, n: u64, confidence: f64) -> PyResult<(f64, f64)> {
    pipeline::clopper_pearson(successes, n, confidence).map_err(py_err)
}

/// Porter stem of a lowercase word.
#[pyfunction]
fn stem(word: &str) -> String {
    corpus::stem(word)
}

#[pymodule]
fn pytrialsize(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAbstract>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPrediction>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(clopper_pearson, m)?)?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    Ok(())
}
