//! Candidate classification: features, the built-in linear model, and a
//! remote scorer behind the same interface.

pub mod features;
pub mod model;
pub mod remote;

pub use features::{
    entropy, featurize, FeatureVector, FEATURE_COUNT, FEATURE_NAMES, KEYWORDS, SCHEMA_VERSION,
};
pub use model::{
    train, train_with_history, ClassWeight, ClassifierModel, TrainParams, Verdict,
    DEFAULT_THRESHOLD,
};
pub use remote::{predict_remote, RemoteClassifier};

use crate::error::Result;
use crate::patterns::CandidateSecret;
use crate::window::ContextWindow;

/// Either scorer, as configured for a pipeline.
#[derive(Debug, Clone)]
pub enum Classifier {
    Local(ClassifierModel),
    Remote(RemoteClassifier),
}

impl Classifier {
    pub fn threshold(&self) -> f64 {
        match self {
            Classifier::Local(m) => m.threshold,
            Classifier::Remote(r) => r.threshold,
        }
    }

    pub fn score(&self, w: &ContextWindow) -> Result<f64> {
        match self {
            Classifier::Local(m) => m.score(w),
            Classifier::Remote(r) => r.score(w),
        }
    }

    pub fn predict(&self, candidate: &CandidateSecret, w: &ContextWindow) -> Result<Verdict> {
        let score = self.score(w)?;
        Ok(Verdict::new(candidate.clone(), score, self.threshold()))
    }

    pub fn schema_version(&self) -> Option<u32> {
        match self {
            Classifier::Local(m) => Some(m.schema_version),
            Classifier::Remote(_) => None,
        }
    }
}
