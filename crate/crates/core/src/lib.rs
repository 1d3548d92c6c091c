//! Detect leaked credentials in software issue reports.
//!
//! Report bodies are cleaned of high-entropy noise, scanned with secret
//! patterns, and every candidate is classified from a window of context
//! around it.

pub mod bench;
pub mod classify;
pub mod cli;
pub mod error;
pub mod githubclient;
pub mod ingest;
pub mod metrics;
pub mod patterns;
pub mod pipeline;
pub mod preprocess;
pub mod service;
pub mod synth;
pub mod text;
pub mod window;

pub use classify::{Classifier, ClassifierModel, FeatureVector, Verdict};
pub use error::{CrawlError, Error, Result};
pub use ingest::{IssueReport, LabeledCandidate};
pub use metrics::{AgreementMatrix, ConfusionMatrix, MetricsReport};
pub use patterns::{CandidateSecret, PatternRegistry};
pub use pipeline::Pipeline;
pub use preprocess::RuleSet;
pub use text::Span;
pub use window::ContextWindow;
