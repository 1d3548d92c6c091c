//! Secret-detection patterns and the candidate scanner.
//!
//! Every match of every pattern is a candidate; deciding which candidates
//! are real secrets is the classifier's job. Patterns may point at a capture
//! group so that only the value part of `key = value` becomes the candidate.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{CharCursor, Span};

/// On-disk form of a pattern: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub name: String,
    pub pattern: String,
    #[serde(default)]
    pub capture_group: usize,
}

#[derive(Debug, Clone)]
pub struct SecretPattern {
    pub name: String,
    pub capture_group: usize,
    regex: Regex,
}

impl SecretPattern {
    pub fn new(name: impl Into<String>, pattern: &str, capture_group: usize) -> Result<Self> {
        let name = name.into();
        let regex = Regex::new(pattern).map_err(|e| Error::BadPattern {
            name: name.clone(),
            reason: e.to_string(),
        })?;
        // captures_len counts the implicit whole-match group 0.
        if capture_group >= regex.captures_len() {
            return Err(Error::MissingCaptureGroup {
                name,
                group: capture_group,
            });
        }
        Ok(Self {
            name,
            capture_group,
            regex,
        })
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }
}

/// A pattern hit inside a cleaned report body.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSecret {
    pub report_id: String,
    pub text: String,
    pub span: Span,
    pub pattern_name: String,
}

const BUILTIN_PATTERNS: &[(&str, &str, usize)] = &[
    (
        "aws_access_key_id",
        r"\b(?:AKIA|ASIA|AGPA|AIDA|AROA|ANPA)[0-9A-Z]{16}\b",
        0,
    ),
    (
        "aws_secret_access_key",
        r"(?i)aws_?secret_?(?:access_?)?key\s*[:=]\s*([A-Za-z0-9+/]{40})\b",
        1,
    ),
    ("github_token", r"\bgh[pousr]_[A-Za-z0-9]{36}\b", 0),
    (
        "github_fine_grained_pat",
        r"\bgithub_pat_[A-Za-z0-9_]{82}\b",
        0,
    ),
    ("gitlab_pat", r"\bglpat-[A-Za-z0-9_\-]{20}", 0),
    ("slack_token", r"\bxox[baprs]-[0-9A-Za-z\-]{10,72}", 0),
    (
        "slack_webhook",
        r"https://hooks\.slack\.com/services/T[A-Za-z0-9_]{8,}/B[A-Za-z0-9_]{8,}/[A-Za-z0-9_]{24}",
        0,
    ),
    (
        "stripe_secret_key",
        r"\b[sr]k_(?:live|test)_[0-9a-zA-Z]{24,99}\b",
        0,
    ),
    ("google_api_key", r"\bAIza[0-9A-Za-z_\-]{35}", 0),
    (
        "google_oauth_access_token",
        r"\bya29\.[0-9A-Za-z_\-]{20,}",
        0,
    ),
    (
        "json_web_token",
        r"\beyJ[A-Za-z0-9_\-]{10,}\.eyJ[A-Za-z0-9_\-]{10,}\.[A-Za-z0-9_\-]{10,}",
        0,
    ),
    (
        "private_key_header",
        r"-----BEGIN (?:RSA |EC |DSA |OPENSSH |PGP |ENCRYPTED )?PRIVATE KEY(?: BLOCK)?-----",
        0,
    ),
    ("twilio_api_key", r"\bSK[0-9a-fA-F]{32}\b", 0),
    (
        "sendgrid_api_key",
        r"\bSG\.[A-Za-z0-9_\-]{22}\.[A-Za-z0-9_\-]{43}",
        0,
    ),
    ("mailgun_api_key", r"\bkey-[0-9a-zA-Z]{32}\b", 0),
    ("npm_token", r"\bnpm_[A-Za-z0-9]{36}\b", 0),
    (
        "pypi_token",
        r"\bpypi-AgEIcHlwaS5vcmc[A-Za-z0-9_\-]{50,}",
        0,
    ),
    (
        "discord_bot_token",
        r"\b[MN][A-Za-z\d]{23}\.[\w\-]{6}\.[\w\-]{27}",
        0,
    ),
    ("telegram_bot_token", r"\b\d{8,10}:AA[A-Za-z0-9_\-]{33}", 0),
    (
        "shopify_token",
        r"\bshp(?:at|ca|pa|ss)_[a-fA-F0-9]{32}\b",
        0,
    ),
    ("square_token", r"\bsq0(?:atp|csp)-[0-9A-Za-z_\-]{22,43}", 0),
    ("digitalocean_token", r"\bdo[opr]_v1_[a-f0-9]{64}\b", 0),
    (
        "azure_storage_account_key",
        r"(?i)AccountKey\s*=\s*([A-Za-z0-9+/=]{86,88})",
        1,
    ),
    (
        "heroku_api_key",
        r"(?i)heroku[\w\s:=\-]{0,20}\b([0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12})\b",
        1,
    ),
    (
        "basic_auth_url",
        r"[a-zA-Z][a-zA-Z0-9+.\-]*://[^\s:@/]{3,20}:([^\s:@/]{3,40})@",
        1,
    ),
    (
        "bearer_token",
        r"(?i)\bbearer\s+([A-Za-z0-9_\-=~+]{20,})",
        1,
    ),
    (
        "password_assignment",
        r"(?i)\b(?:\w*_)?(?:password|passwd|pwd|pass)\s*[:=]\s*(\S{6,})",
        1,
    ),
    (
        "generic_secret_assignment",
        r"(?i)\b[\w\-]*(?:secret|token|api[_\-]?key|access[_\-]?key|auth|session|credential)[\w\-]*\s*[:=]\s*([A-Za-z0-9_\-+=~%*]{16,})",
        1,
    ),
    (
        "cli_secret_flag",
        r"(?i)--(?:certificate-key|token|api-key|secret|password)[=\s]+([A-Za-z0-9_\-+=]{16,})",
        1,
    ),
    ("generic_hex_secret", r"\b[a-fA-F0-9]{32,64}\b", 0),
    ("high_entropy_base64", r"[A-Za-z0-9+/]{40,}={0,2}", 0),
];

/// Ordered, immutable set of secret patterns.
#[derive(Debug, Clone, Default)]
pub struct PatternRegistry {
    patterns: Vec<SecretPattern>,
}

impl PatternRegistry {
    pub fn builtin() -> Self {
        let patterns = BUILTIN_PATTERNS
            .iter()
            .map(|&(name, pattern, group)| {
                SecretPattern::new(name, pattern, group).expect("built-in pattern compiles")
            })
            .collect();
        Self { patterns }
    }

    pub fn from_specs(specs: impl IntoIterator<Item = PatternSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut patterns = Vec::new();
        for spec in specs {
            if !seen.insert(spec.name.clone()) {
                return Err(Error::DuplicateName(spec.name));
            }
            patterns.push(SecretPattern::new(
                spec.name,
                &spec.pattern,
                spec.capture_group,
            )?);
        }
        Ok(Self { patterns })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut specs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let row = i as u64 + 1;
            let line = line.map_err(|e| Error::MalformedRow {
                row,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            specs.push(serde_json::from_str::<PatternSpec>(&line).map_err(|e| {
                Error::MalformedRow {
                    row,
                    reason: e.to_string(),
                }
            })?);
        }
        Self::from_specs(specs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn patterns(&self) -> &[SecretPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Append a pattern; fails on a duplicate name.
    pub fn push(&mut self, pattern: SecretPattern) -> Result<()> {
        if self.patterns.iter().any(|p| p.name == pattern.name) {
            return Err(Error::DuplicateName(pattern.name));
        }
        self.patterns.push(pattern);
        Ok(())
    }
}

/// Find every candidate secret in `cleaned_body`.
///
/// Matches of a single pattern never overlap; matches of different patterns
/// may, and identical spans from different patterns are all kept. Output is
/// sorted by `(start, pattern_name)`.
pub fn scan(
    report_id: &str,
    cleaned_body: &str,
    registry: &PatternRegistry,
) -> Vec<CandidateSecret> {
    let mut out = Vec::new();
    for pattern in &registry.patterns {
        let mut cursor = CharCursor::new(cleaned_body);
        for caps in pattern.regex.captures_iter(cleaned_body) {
            let Some(m) = caps.get(pattern.capture_group) else {
                continue;
            };
            if m.is_empty() {
                continue;
            }
            let start = cursor.char_index(m.start());
            let end = cursor.char_index(m.end());
            out.push(CandidateSecret {
                report_id: report_id.to_owned(),
                text: m.as_str().to_owned(),
                span: Span::new(start, end),
                pattern_name: pattern.name.clone(),
            });
        }
    }
    out.sort_by(|a, b| {
        (a.span.start, &a.pattern_name, a.span.end).cmp(&(
            b.span.start,
            &b.pattern_name,
            b.span.end,
        ))
    });
    out.dedup_by(|a, b| a.span == b.span && a.pattern_name == b.pattern_name);
    out
}
