use std::path::PathBuf;
use std::time::SystemTime;

use thiserror::Error;

use crate::ingest::IssueReport;
use crate::text::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("malformed record at row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },

    #[error("rule `{name}` does not compile: {reason}")]
    BadRule { name: String, reason: String },

    #[error("pattern `{name}` does not compile: {reason}")]
    BadPattern { name: String, reason: String },

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("pattern `{name}` has no capture group {group}")]
    MissingCaptureGroup { name: String, group: usize },

    #[error("span {span} out of bounds for text of length {len}")]
    SpanOutOfBounds { span: Span, len: usize },

    #[error("feature schema mismatch: model expects v{expected}, got v{actual}")]
    SchemaMismatch { expected: u32, actual: u32 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("training data is empty")]
    EmptyTrainingData,

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Diverged { epoch: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("remote classifier: {0}")]
    Remote(String),

    #[error("length mismatch: {verdicts} verdicts vs {labels} labels")]
    LengthMismatch { verdicts: usize, labels: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("{} unresolved disagreement(s): {}", .0.len(), .0.join(", "))]
    UnresolvedDisagreements(Vec<String>),

    #[error("resolution refers to unknown candidate {0}")]
    UnknownResolution(String),

    #[error("label files share no candidates")]
    NoOverlap,

    #[error("candidate {key} does not match the cleaned report text")]
    CandidateMismatch { key: String },

    #[error("unknown report `{0}`")]
    UnknownReport(String),

    #[error(transparent)]
    Crawl(#[from] CrawlError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures of the issue crawler.
#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("repository {0} not found")]
    NotFound(String),

    /// The API refused further requests until `reset`. `resume_url` is the
    /// page to request next; `partial` holds what was collected before.
    #[error("rate limited until {reset:?} after {} issue(s); resume at {resume_url}", partial.len())]
    RateLimited {
        reset: Option<SystemTime>,
        resume_url: String,
        partial: Vec<IssueReport>,
    },

    #[error("HTTP {status} from {url}")]
    Status { status: u16, url: String },

    #[error("request to {url} failed: {reason}")]
    Transport { url: String, reason: String },

    #[error("malformed payload from {url}: {reason}")]
    Payload { url: String, reason: String },

    #[error("invalid repository reference `{0}`")]
    BadRepo(String),
}
