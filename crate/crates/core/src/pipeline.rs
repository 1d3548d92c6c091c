//! The end-to-end detector: clean, scan, cut windows, classify.

use serde::{Deserialize, Serialize};

use crate::classify::{Classifier, ClassifierModel, Verdict};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::{IssueReport, LabeledCandidate};
use crate::patterns::{scan, CandidateSecret, PatternRegistry};
use crate::preprocess::{clean, RuleSet};
use crate::text::slice_chars;
use crate::window::{extract_window, ContextWindow, DEFAULT_RADIUS};

/// Shared, read-only detector configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub rules: RuleSet,
    pub registry: PatternRegistry,
    pub radius: usize,
    pub classifier: Classifier,
}

/// Candidates of one body, with their windows, before classification.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub cleaned: String,
    pub candidates: Vec<(CandidateSecret, ContextWindow)>,
}

/// A scored candidate as reported by `scan` and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub report_id: String,
    pub start: usize,
    pub end: usize,
    pub matched: String,
    pub pattern: String,
    pub score: f64,
    pub is_breach: bool,
}

impl From<Verdict> for ScoredCandidate {
    fn from(v: Verdict) -> Self {
        Self {
            report_id: v.candidate.report_id,
            start: v.candidate.span.start,
            end: v.candidate.span.end,
            matched: v.candidate.text,
            pattern: v.candidate.pattern_name,
            score: v.score,
            is_breach: v.is_breach,
        }
    }
}

impl Pipeline {
    /// Built-in rules, patterns and model at the default radius.
    pub fn builtin() -> Self {
        Self {
            rules: RuleSet::builtin(),
            registry: PatternRegistry::builtin(),
            radius: DEFAULT_RADIUS,
            classifier: Classifier::Local(ClassifierModel::builtin()),
        }
    }

    pub fn with_classifier(mut self, classifier: Classifier) -> Self {
        self.classifier = classifier;
        self
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.radius = radius;
        self
    }

    pub fn analyze(&self, report_id: &str, body: &str) -> Result<Analysis> {
        let cleaned = clean(body, &self.rules).cleaned;
        let candidates = scan(report_id, &cleaned, &self.registry)
            .into_iter()
            .map(|c| {
                let w = extract_window(&cleaned, c.span, self.radius)?;
                Ok((c, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Analysis {
            cleaned,
            candidates,
        })
    }

    /// Classify every candidate in `body`. Also returns the cleaned text.
    pub fn detect(&self, report_id: &str, body: &str) -> Result<(String, Vec<Verdict>)> {
        let analysis = self.analyze(report_id, body)?;
        let verdicts = analysis
            .candidates
            .iter()
            .map(|(c, w)| self.classifier.predict(c, w))
            .collect::<Result<Vec<_>>>()?;
        Ok((analysis.cleaned, verdicts))
    }

    pub fn scan_report(&self, report: &IssueReport) -> Result<Vec<Verdict>> {
        self.detect(&report.id, &report.body).map(|(_, v)| v)
    }

    /// Rebuild the windows of labelled candidates from their reports.
    ///
    /// Candidate spans index cleaned bodies, so each report is cleaned once
    /// with this pipeline's rules; a candidate whose text no longer matches
    /// its span is an error.
    pub fn labeled_windows(
        &self,
        reports: &[IssueReport],
        labeled: &[LabeledCandidate],
    ) -> Result<Vec<(CandidateSecret, ContextWindow, bool)>> {
        let bodies: HashMap<&str, &str> = reports
            .iter()
            .map(|r| (r.id.as_str(), r.body.as_str()))
            .collect();
        let mut cleaned: HashMap<&str, String> = HashMap::new();
        labeled
            .iter()
            .map(|l| {
                let body = bodies
                    .get(l.report_id.as_str())
                    .ok_or_else(|| Error::UnknownReport(l.report_id.clone()))?;
                let text = cleaned
                    .entry(l.report_id.as_str())
                    .or_insert_with(|| clean(body, &self.rules).cleaned);
                let candidate = CandidateSecret {
                    report_id: l.report_id.clone(),
                    text: l.candidate_text.clone(),
                    span: l.span(),
                    pattern_name: l.pattern_name.clone(),
                };
                if slice_chars(text, l.span()) != Some(l.candidate_text.as_str()) {
                    return Err(Error::CandidateMismatch {
                        key: format!("{}@{}:{}", l.report_id, l.span(), l.pattern_name),
                    });
                }
                let w = extract_window(text, l.span(), self.radius)?;
                Ok((candidate, w, l.label))
            })
            .collect()
    }
}
