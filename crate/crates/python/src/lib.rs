//! Python bindings: cleaning, scanning, windows, features, the linear model,
//! the end-to-end detector and evaluation metrics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use breachscan::classify::{self, ClassWeight, TrainParams, FEATURE_NAMES, SCHEMA_VERSION};
use breachscan::metrics::{self, AgreementMatrix};
use breachscan::preprocess::{self, RuleSet};
use breachscan::text::Span;
use breachscan::{patterns, window};

fn err(e: breachscan::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pymodule(name = "breachscan")]
mod breachscan_py {
    use super::*;

    /// A pattern match in a cleaned body; `start`/`end` are code points.
    #[pyclass(name = "Candidate", frozen, get_all, skip_from_py_object)]
    #[derive(Clone)]
    struct PyCandidate {
        report_id: String,
        text: String,
        start: usize,
        end: usize,
        pattern: String,
    }

    #[pymethods]
    impl PyCandidate {
        fn __repr__(&self) -> String {
            format!(
                "Candidate({:?}, {:?}, {}..{})",
                self.pattern, self.text, self.start, self.end
            )
        }
    }

    impl From<patterns::CandidateSecret> for PyCandidate {
        fn from(c: patterns::CandidateSecret) -> Self {
            Self {
                report_id: c.report_id,
                text: c.text,
                start: c.span.start,
                end: c.span.end,
                pattern: c.pattern_name,
            }
        }
    }

    #[pyclass(name = "Window", frozen, skip_from_py_object)]
    #[derive(Clone)]
    struct PyWindow(window::ContextWindow);

    #[pymethods]
    impl PyWindow {
        #[getter]
        fn text(&self) -> &str {
            &self.0.text
        }

        #[getter]
        fn candidate(&self) -> &str {
            self.0.candidate()
        }

        #[getter]
        fn left(&self) -> &str {
            self.0.left()
        }

        #[getter]
        fn right(&self) -> &str {
            self.0.right()
        }

        #[getter]
        fn radius(&self) -> usize {
            self.0.radius
        }

        fn __repr__(&self) -> String {
            format!("Window({:?})", self.0.text)
        }
    }

    #[pyclass(name = "Verdict", frozen, get_all)]
    struct PyVerdict {
        candidate: PyCandidate,
        score: f64,
        is_breach: bool,
    }

    #[pymethods]
    impl PyVerdict {
        fn __repr__(&self) -> String {
            format!(
                "Verdict({:?}, score={:.4}, is_breach={})",
                self.candidate.text,
                self.score,
                if self.is_breach { "True" } else { "False" }
            )
        }
    }

    impl From<classify::Verdict> for PyVerdict {
        fn from(v: classify::Verdict) -> Self {
            Self {
                candidate: v.candidate.into(),
                score: v.score,
                is_breach: v.is_breach,
            }
        }
    }

    /// Remove noise with the built-in cleaning rules.
    #[pyfunction]
    fn clean(body: &str) -> String {
        preprocess::clean_text(body, &RuleSet::builtin())
    }

    /// Names of the built-in cleaning rules, in application order.
    #[pyfunction]
    fn rule_names() -> Vec<String> {
        RuleSet::builtin()
            .rules()
            .iter()
            .map(|r| r.name.clone())
            .collect()
    }

    /// Match the built-in secret patterns against an already cleaned body.
    #[pyfunction]
    #[pyo3(signature = (cleaned_body, report_id = ""))]
    fn scan(cleaned_body: &str, report_id: &str) -> Vec<PyCandidate> {
        patterns::scan(
            report_id,
            cleaned_body,
            &patterns::PatternRegistry::builtin(),
        )
        .into_iter()
        .map(Into::into)
        .collect()
    }

    #[pyfunction]
    fn extract_window(
        cleaned_body: &str,
        start: usize,
        end: usize,
        radius: usize,
    ) -> PyResult<PyWindow> {
        window::extract_window(cleaned_body, Span::new(start, end), radius)
            .map(PyWindow)
            .map_err(err)
    }

    /// Shannon entropy in bits per code point.
    #[pyfunction]
    fn entropy(s: &str) -> f64 {
        classify::entropy(s)
    }

    #[pyfunction]
    fn featurize(window: &PyWindow) -> Vec<f64> {
        classify::featurize(&window.0).values
    }

    #[pyfunction]
    fn feature_names() -> Vec<&'static str> {
        FEATURE_NAMES.to_vec()
    }

    #[pyclass(name = "Model", frozen, from_py_object)]
    #[derive(Clone)]
    struct PyModel(classify::ClassifierModel);

    #[pymethods]
    impl PyModel {
        #[staticmethod]
        fn builtin() -> Self {
            Self(classify::ClassifierModel::builtin())
        }

        #[staticmethod]
        fn load(path: std::path::PathBuf) -> PyResult<Self> {
            classify::ClassifierModel::load(&path)
                .map(Self)
                .map_err(err)
        }

        #[staticmethod]
        fn from_json(s: &str) -> PyResult<Self> {
            classify::ClassifierModel::from_json(s)
                .map(Self)
                .map_err(err)
        }

        /// Fit on feature rows from `featurize` and boolean labels.
        #[staticmethod]
        #[pyo3(signature = (features, labels, learning_rate = 0.5, epochs = 2000, seed = 0, class_weight = "balanced"))]
        fn train(
            features: Vec<Vec<f64>>,
            labels: Vec<bool>,
            learning_rate: f64,
            epochs: usize,
            seed: u64,
            class_weight: &str,
        ) -> PyResult<Self> {
            if features.len() != labels.len() {
                return Err(PyValueError::new_err(format!(
                    "{} feature rows but {} labels",
                    features.len(),
                    labels.len()
                )));
            }
            let class_weight: ClassWeight = class_weight.parse().map_err(PyValueError::new_err)?;
            let data: Vec<_> = features
                .into_iter()
                .map(|values| classify::FeatureVector {
                    values,
                    schema_version: SCHEMA_VERSION,
                })
                .zip(labels)
                .collect();
            let hp = TrainParams {
                learning_rate,
                epochs,
                seed,
                class_weight,
            };
            classify::train(&data, &hp).map(Self).map_err(err)
        }

        fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
            self.0.save(&path).map_err(err)
        }

        /// Breach probability of one feature row.
        fn score(&self, features: Vec<f64>) -> PyResult<f64> {
            self.0
                .score_features(&classify::FeatureVector {
                    values: features,
                    schema_version: SCHEMA_VERSION,
                })
                .map_err(err)
        }

        fn predict(&self, features: Vec<f64>) -> PyResult<bool> {
            Ok(self.score(features)? >= self.0.threshold)
        }

        fn with_threshold(&self, threshold: f64) -> PyResult<Self> {
            self.0
                .clone()
                .with_threshold(threshold)
                .map(Self)
                .map_err(err)
        }

        #[getter]
        fn weights(&self) -> Vec<f64> {
            self.0.weights.clone()
        }

        #[getter]
        fn bias(&self) -> f64 {
            self.0.bias
        }

        #[getter]
        fn threshold(&self) -> f64 {
            self.0.threshold
        }
    }

    /// Clean, scan, window and classify in one call.
    #[pyclass(name = "Detector", frozen)]
    struct PyDetector(breachscan::Pipeline);

    #[pymethods]
    impl PyDetector {
        #[new]
        #[pyo3(signature = (model = None, radius = None))]
        fn new(model: Option<PyModel>, radius: Option<usize>) -> Self {
            let mut p = breachscan::Pipeline::builtin();
            if let Some(m) = model {
                p = p.with_classifier(classify::Classifier::Local(m.0));
            }
            if let Some(r) = radius {
                p = p.with_radius(r);
            }
            Self(p)
        }

        /// Verdicts for every candidate; spans index `clean(text)`.
        #[pyo3(signature = (text, report_id = ""))]
        fn detect(&self, text: &str, report_id: &str) -> PyResult<Vec<PyVerdict>> {
            let (_, verdicts) = self.0.detect(report_id, text).map_err(err)?;
            Ok(verdicts.into_iter().map(Into::into).collect())
        }

        fn is_breach(&self, text: &str) -> PyResult<bool> {
            Ok(self.detect(text, "")?.iter().any(|v| v.is_breach))
        }
    }

    #[pyfunction]
    fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
        metrics::f_beta_from(precision, recall, beta)
    }

    /// Precision, recall and F-scores of boolean verdicts against labels.
    #[pyfunction]
    #[pyo3(signature = (predicted, labels, beta = 1.0))]
    fn compute_metrics(
        py: Python<'_>,
        predicted: Vec<bool>,
        labels: Vec<bool>,
        beta: f64,
    ) -> PyResult<Py<pyo3::types::PyDict>> {
        let cm = metrics::confusion_from(&predicted, &labels).map_err(err)?;
        let m = metrics::compute_metrics(&cm, beta).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("tp", cm.tp)?;
        d.set_item("fp", cm.fp)?;
        d.set_item("fn", cm.fn_)?;
        d.set_item("tn", cm.tn)?;
        d.set_item("precision", m.precision)?;
        d.set_item("recall", m.recall)?;
        d.set_item("f1", m.f1)?;
        d.set_item("f1_negative", m.f1_negative)?;
        d.set_item("f_beta", m.f_beta)?;
        d.set_item("beta", m.beta)?;
        Ok(d.unbind())
    }

    /// Cohen's kappa from a 2x2 agreement table.
    #[pyfunction]
    fn cohen_kappa(
        both_positive: u64,
        first_only: u64,
        second_only: u64,
        both_negative: u64,
    ) -> PyResult<f64> {
        metrics::cohen_kappa(&AgreementMatrix::new(
            both_positive,
            first_only,
            second_only,
            both_negative,
        ))
        .map_err(err)
    }
}
