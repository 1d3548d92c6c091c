//! Class-weighted logistic regression trained by full-batch gradient descent.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector, FEATURE_COUNT, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::patterns::CandidateSecret;
use crate::window::ContextWindow;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// How the two classes are weighted in the loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    /// `n / (2 * n_class)` for each class.
    #[default]
    Balanced,
    /// Every instance weighs 1.
    Uniform,
    Manual {
        positive: f64,
        negative: f64,
    },
}

impl std::str::FromStr for ClassWeight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced" => Ok(ClassWeight::Balanced),
            "uniform" | "none" => Ok(ClassWeight::Uniform),
            other => {
                let (p, n) = other.split_once(',').ok_or_else(|| {
                    format!("expected balanced, uniform or POS,NEG; got `{other}`")
                })?;
                let positive = p.trim().parse::<f64>().map_err(|e| e.to_string())?;
                let negative = n.trim().parse::<f64>().map_err(|e| e.to_string())?;
                Ok(ClassWeight::Manual { positive, negative })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub class_weight: ClassWeight,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 2000,
            seed: 0,
            class_weight: ClassWeight::Balanced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub schema_version: u32,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub training_meta: TrainParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub candidate: CandidateSecret,
    pub score: f64,
    pub is_breach: bool,
}

impl Verdict {
    pub fn new(candidate: CandidateSecret, score: f64, threshold: f64) -> Self {
        Self {
            candidate,
            score,
            is_breach: score >= threshold,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Per-class instance weights `(positive, negative)`.
pub fn class_weights(labels: &[bool], scheme: ClassWeight) -> (f64, f64) {
    match scheme {
        ClassWeight::Uniform => (1.0, 1.0),
        ClassWeight::Manual { positive, negative } => (positive, negative),
        ClassWeight::Balanced => {
            let n = labels.len() as f64;
            let pos = labels.iter().filter(|&&l| l).count() as f64;
            let neg = n - pos;
            (n / (2.0 * pos), n / (2.0 * neg))
        }
    }
}

fn logit(weights: &[f64], bias: f64, x: &[f64]) -> f64 {
    weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + bias
}

/// Mean class-weighted cross-entropy.
pub fn weighted_log_loss(
    weights: &[f64],
    bias: f64,
    xs: &[Vec<f64>],
    ys: &[bool],
    cw: (f64, f64),
) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = logit(weights, bias, x);
            let c = if y { cw.0 } else { cw.1 };
            // -[y ln σ(z) + (1-y) ln(1-σ(z))] = softplus(z) - y z
            c * (softplus(z) - if y { z } else { 0.0 })
        })
        .sum();
    total / xs.len() as f64
}

/// Analytic gradient of [`weighted_log_loss`] with respect to the weights
/// and the bias.
pub fn loss_gradient(
    weights: &[f64],
    bias: f64,
    xs: &[Vec<f64>],
    ys: &[bool],
    cw: (f64, f64),
) -> (Vec<f64>, f64) {
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let c = if y { cw.0 } else { cw.1 };
        let r = c * (sigmoid(logit(weights, bias, x)) - if y { 1.0 } else { 0.0 });
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    let n = xs.len() as f64;
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(xs: &[&[f64]], dim: usize) -> Self {
        let n = xs.len() as f64;
        let mut mean = vec![0.0; dim];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(*x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for x in xs {
            for ((s, v), m) in var.iter_mut().zip(*x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Map weights learned on standardized inputs back to raw inputs.
    fn unfold(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = weights
            .iter()
            .zip(&self.scale)
            .map(|(w, s)| w / s)
            .collect();
        let shift: f64 = raw.iter().zip(&self.mean).map(|(w, m)| w * m).sum();
        (raw, bias - shift)
    }
}

/// Train and return the model together with the loss before each update.
pub fn train_with_history(
    data: &[(FeatureVector, bool)],
    hp: &TrainParams,
) -> Result<(ClassifierModel, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    if !(hp.learning_rate.is_finite() && hp.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            hp.learning_rate
        )));
    }
    let schema = data[0].0.schema_version;
    let dim = data[0].0.values.len();
    if let Some((fv, _)) = data
        .iter()
        .find(|(fv, _)| fv.schema_version != schema || fv.values.len() != dim)
    {
        return Err(Error::SchemaMismatch {
            expected: schema,
            actual: fv.schema_version,
        });
    }
    if data
        .iter()
        .any(|(fv, _)| fv.values.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidParameter("non-finite feature value".into()));
    }
    let ys: Vec<bool> = data.iter().map(|(_, y)| *y).collect();
    if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
        return Err(Error::SingleClass);
    }

    let raw: Vec<&[f64]> = data.iter().map(|(fv, _)| fv.values.as_slice()).collect();
    let std = Standardizer::fit(&raw, dim);
    let xs: Vec<Vec<f64>> = raw.iter().map(|x| std.apply(x)).collect();
    let cw = class_weights(&ys, hp.class_weight);

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut bias = 0.0;
    let mut history = Vec::with_capacity(hp.epochs);
    for epoch in 0..hp.epochs {
        let loss = weighted_log_loss(&weights, bias, &xs, &ys, cw);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(loss);
        let (gw, gb) = loss_gradient(&weights, bias, &xs, &ys, cw);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= hp.learning_rate * g;
        }
        bias -= hp.learning_rate * gb;
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Diverged { epoch });
        }
    }

    let (weights, bias) = std.unfold(&weights, bias);
    let model = ClassifierModel {
        schema_version: schema,
        weights,
        bias,
        threshold: DEFAULT_THRESHOLD,
        training_meta: hp.clone(),
    };
    Ok((model, history))
}

pub fn train(data: &[(FeatureVector, bool)], hp: &TrainParams) -> Result<ClassifierModel> {
    train_with_history(data, hp).map(|(m, _)| m)
}

const BUILTIN_MODEL: &str = include_str!("../../data/default_model.json");

impl ClassifierModel {
    /// Model trained on the bundled synthetic corpus.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_MODEL).expect("bundled model is valid")
    }

    /// A model with all-zero weights, useful as a baseline.
    pub fn zeros(threshold: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            weights: vec![0.0; FEATURE_COUNT],
            bias: 0.0,
            threshold,
            training_meta: TrainParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch {
                expected: SCHEMA_VERSION,
                actual: self.schema_version,
            });
        }
        if self.weights.len() != FEATURE_COUNT {
            return Err(Error::InvalidModel(format!(
                "expected {FEATURE_COUNT} weights, found {}",
                self.weights.len()
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidModel(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n").map_err(|source| Error::Write {
            path: path.to_owned(),
            source,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn score_features(&self, fv: &FeatureVector) -> Result<f64> {
        if fv.schema_version != self.schema_version || fv.values.len() != self.weights.len() {
            return Err(Error::SchemaMismatch {
                expected: self.schema_version,
                actual: fv.schema_version,
            });
        }
        Ok(sigmoid(logit(&self.weights, self.bias, &fv.values)))
    }

    pub fn score(&self, w: &ContextWindow) -> Result<f64> {
        self.score_features(&featurize(w))
    }

    pub fn predict(&self, candidate: &CandidateSecret, w: &ContextWindow) -> Result<Verdict> {
        let score = self.score(w)?;
        Ok(Verdict::new(candidate.clone(), score, self.threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            values,
            schema_version: SCHEMA_VERSION,
        }
    }

    /// 20 points separated by the line x0 + x1 = 1.
    fn separable() -> Vec<(FeatureVector, bool)> {
        (0..20)
            .map(|i| {
                let a = (i % 5) as f64 * 0.1;
                let b = (i / 5) as f64 * 0.1;
                if i % 2 == 0 {
                    (fv(vec![a, b]), false)
                } else {
                    (fv(vec![1.0 + a, 1.0 + b]), true)
                }
            })
            .collect()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = separable();
        let model = train(
            &data,
            &TrainParams {
                learning_rate: 0.5,
                epochs: 500,
                seed: 1,
                class_weight: ClassWeight::Balanced,
            },
        )
        .unwrap();
        for (x, y) in &data {
            let s = model.score_features(x).unwrap();
            assert_eq!(s >= 0.5, *y, "x={:?} s={s}", x.values);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data: Vec<_> = separable().into_iter().map(|(x, _)| (x, true)).collect();
        assert!(matches!(
            train(&data, &TrainParams::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            train(&[], &TrainParams::default()),
            Err(Error::EmptyTrainingData)
        ));
    }

    #[test]
    fn bad_learning_rate() {
        let hp = TrainParams {
            learning_rate: 0.0,
            ..TrainParams::default()
        };
        assert!(matches!(
            train(&separable(), &hp),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let hp = TrainParams {
            learning_rate: f64::MAX,
            epochs: 50,
            seed: 0,
            class_weight: ClassWeight::Uniform,
        };
        // Overlapping classes keep the gradient away from zero, so every
        // step overshoots further until the parameters overflow.
        let data: Vec<_> = (0..20)
            .map(|i| (fv(vec![(i % 4) as f64, (i % 3) as f64]), i % 2 == 0))
            .collect();
        match train(&data, &hp) {
            Err(Error::Diverged { epoch }) => assert!(epoch < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let hp = TrainParams {
            learning_rate: 0.3,
            epochs: 100,
            seed: 42,
            class_weight: ClassWeight::Balanced,
        };
        let a = train(&separable(), &hp).unwrap();
        let b = train(&separable(), &hp).unwrap();
        assert_eq!(
            a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
            b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn sigmoid_edges() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(20.0) > 0.999);
        assert!(sigmoid(-20.0) < 0.001);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn zero_model_ties_to_breach() {
        let m = ClassifierModel::zeros(0.5);
        let x = fv(vec![1.0; FEATURE_COUNT]);
        assert_eq!(m.score_features(&x).unwrap(), 0.5);
        let v = Verdict::new(
            CandidateSecret {
                report_id: "r".into(),
                text: "t".into(),
                span: crate::text::Span::new(0, 1),
                pattern_name: "p".into(),
            },
            0.5,
            m.threshold,
        );
        assert!(v.is_breach);
    }

    #[test]
    fn schema_mismatch() {
        let m = ClassifierModel::zeros(0.5);
        let x = FeatureVector {
            values: vec![0.0; FEATURE_COUNT],
            schema_version: 99,
        };
        assert!(matches!(
            m.score_features(&x),
            Err(Error::SchemaMismatch { .. })
        ));
        let short = fv(vec![0.0; 3]);
        assert!(m.score_features(&short).is_err());
    }

    #[test]
    fn model_file_validation() {
        let m = ClassifierModel::zeros(0.5);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(ClassifierModel::from_json(&json).unwrap(), m);
        assert!(ClassifierModel::zeros(1.0).validate().is_err());
        assert!(ClassifierModel::zeros(0.0).validate().is_err());
        let builtin = ClassifierModel::builtin();
        assert!(builtin.validate().is_ok());
    }

    #[test]
    fn class_weight_parsing() {
        assert_eq!(
            "balanced".parse::<ClassWeight>().unwrap(),
            ClassWeight::Balanced
        );
        assert_eq!("none".parse::<ClassWeight>().unwrap(), ClassWeight::Uniform);
        assert_eq!(
            "3, 1".parse::<ClassWeight>().unwrap(),
            ClassWeight::Manual {
                positive: 3.0,
                negative: 1.0
            }
        );
        assert!("lots".parse::<ClassWeight>().is_err());
    }

    #[test]
    fn balanced_weights_equalize_class_mass() {
        let labels = [true, false, false, false];
        let (p, n) = class_weights(&labels, ClassWeight::Balanced);
        assert!((p * 1.0 - n * 3.0).abs() < 1e-12);
    }
}
