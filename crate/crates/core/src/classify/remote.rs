//! Adapter for a classifier hosted behind HTTP.
//!
//! Request: `POST <endpoint>` with `{"window_text": ..., "candidate_offset":
//! {"start": .., "end": ..}}`. Response: `{"score": <0..1>}`. The verdict is
//! thresholded locally.

use std::time::Duration;

use serde::Serialize;

use super::model::Verdict;
use crate::error::{Error, Result};
use crate::patterns::CandidateSecret;
use crate::text::Span;
use crate::window::ContextWindow;

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    window_text: &'a str,
    candidate_offset: Span,
}

/// Blocking client for a remote scorer. Cheap to clone; each call carries
/// its own timeout.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    pub endpoint: String,
    pub timeout: Duration,
    pub threshold: f64,
}

impl RemoteClassifier {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, threshold: f64) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout,
            threshold,
        }
    }

    pub fn score(&self, w: &ContextWindow) -> Result<f64> {
        remote_score(&self.endpoint, w, self.timeout)
    }

    pub fn predict(&self, candidate: &CandidateSecret, w: &ContextWindow) -> Result<Verdict> {
        let score = self.score(w)?;
        Ok(Verdict::new(candidate.clone(), score, self.threshold))
    }
}

pub fn remote_score(endpoint: &str, w: &ContextWindow, timeout: Duration) -> Result<f64> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let body = RemoteRequest {
        window_text: &w.text,
        candidate_offset: w.candidate_offset,
    };
    let mut resp = agent
        .post(endpoint)
        .send_json(&body)
        .map_err(|e| Error::Remote(format!("request failed: {e}")))?;
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(Error::Remote(format!("HTTP {status}")));
    }
    let value: serde_json::Value = resp
        .body_mut()
        .read_json()
        .map_err(|e| Error::Remote(format!("invalid JSON: {e}")))?;
    let score = value
        .get("score")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Remote("response lacks a numeric `score`".into()))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Remote(format!("score {score} outside [0, 1]")));
    }
    Ok(score)
}

/// Score `w` remotely and threshold the result.
pub fn predict_remote(
    endpoint: &str,
    candidate: &CandidateSecret,
    w: &ContextWindow,
    timeout: Duration,
    threshold: f64,
) -> Result<Verdict> {
    RemoteClassifier::new(endpoint, timeout, threshold).predict(candidate, w)
}
