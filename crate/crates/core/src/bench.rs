//! Benchmark curation: sample candidates for manual labeling, merge two
//! raters' label files, measure their agreement and apply resolutions.
//!
//! Label files are CSV with columns `report_id,start,end,pattern_name,label`.
//! Templates written by [`write_label_template`] add `candidate` and
//! `context` columns for the rater's benefit; readers ignore them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledCandidate;
use crate::metrics::{cohen_kappa, AgreementMatrix};
use crate::patterns::CandidateSecret;
use crate::text::{slice_chars, Span};

/// Identity of a candidate across files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateKey {
    pub report_id: String,
    pub span: Span,
    pub pattern_name: String,
}

impl CandidateKey {
    pub fn of(c: &CandidateSecret) -> Self {
        Self {
            report_id: c.report_id.clone(),
            span: c.span,
            pattern_name: c.pattern_name.clone(),
        }
    }
}

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}:{}", self.report_id, self.span, self.pattern_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelFile {
    pub rater_id: String,
    pub entries: Vec<(CandidateKey, bool)>,
}

impl LabelFile {
    pub fn new(rater_id: impl Into<String>, entries: Vec<(CandidateKey, bool)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (k, _) in &entries {
            if !seen.insert(k) {
                return Err(Error::DuplicateName(k.to_string()));
            }
        }
        Ok(Self {
            rater_id: rater_id.into(),
            entries,
        })
    }

    pub fn keys(&self) -> HashSet<CandidateKey> {
        self.entries.iter().map(|(k, _)| k.clone()).collect()
    }

    fn as_map(&self) -> HashMap<&CandidateKey, bool> {
        self.entries.iter().map(|(k, l)| (k, *l)).collect()
    }

    pub fn read<R: std::io::Read>(rater_id: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::MissingColumn {
                    column: name.into(),
                })
        };
        let (rid, start, end, pat, label) = (
            col("report_id")?,
            col("start")?,
            col("end")?,
            col("pattern_name")?,
            col("label")?,
        );
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let row = record.position().map_or(0, |p| p.line());
            let get = |c: usize| record.get(c).unwrap_or("").trim();
            let num = |c: usize| {
                get(c).parse::<usize>().map_err(|e| Error::MalformedRow {
                    row,
                    reason: format!("bad offset `{}`: {e}", get(c)),
                })
            };
            let span = Span::new(num(start)?, num(end)?);
            if span.is_empty() {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("empty span {span}"),
                });
            }
            let label = parse_label(get(label)).ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("label `{}` is not a boolean", get(label)),
            })?;
            entries.push((
                CandidateKey {
                    report_id: get(rid).to_owned(),
                    span,
                    pattern_name: get(pat).to_owned(),
                },
                label,
            ));
        }
        Self::new(rater_id, entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Read {
            path: path.to_owned(),
            source,
        })?;
        let rater = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("rater")
            .to_owned();
        Self::read(rater, file)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.into());
        wtr.write_record(["report_id", "start", "end", "pattern_name", "label"])
            .map_err(io)?;
        for (k, l) in &self.entries {
            wtr.write_record([
                k.report_id.as_str(),
                &k.span.start.to_string(),
                &k.span.end.to_string(),
                &k.pattern_name,
                if *l { "true" } else { "false" },
            ])
            .map_err(io)?;
        }
        Ok(wtr.flush()?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Write {
            path: path.to_owned(),
            source,
        })?;
        self.write(file)
    }
}

fn parse_label(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" | "tp" | "secret" => Some(true),
        "false" | "0" | "no" | "n" | "fp" | "not_secret" => Some(false),
        _ => None,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::MalformedRow {
        row: e.position().map_or(0, |p| p.line()),
        reason: e.to_string(),
    }
}

/// Draw `max(1, floor(fraction * n))` candidates without replacement from
/// the candidates whose keys are not in `exclude`.
pub fn sample_candidates(
    candidates: &[CandidateSecret],
    fraction: f64,
    seed: u64,
    exclude: &HashSet<CandidateKey>,
) -> Result<Vec<CandidateSecret>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut seen = HashSet::new();
    let pool: Vec<&CandidateSecret> = candidates
        .iter()
        .filter(|c| {
            let k = CandidateKey::of(c);
            !exclude.contains(&k) && seen.insert(k)
        })
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyInput);
    }
    // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
    let k = ((fraction * pool.len() as f64 + 1e-9).floor() as usize).clamp(1, pool.len());
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    Ok(idx[..k].iter().map(|&i| pool[i].clone()).collect())
}

/// Write a label template for raters: key columns, an empty `label`
/// column, the candidate text and its surrounding context.
pub fn write_label_template<W: Write>(
    sample: &[(CandidateSecret, String)],
    writer: W,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "report_id",
        "start",
        "end",
        "pattern_name",
        "label",
        "candidate",
        "context",
    ])?;
    for (c, context) in sample {
        wtr.write_record([
            c.report_id.as_str(),
            &c.span.start.to_string(),
            &c.span.end.to_string(),
            &c.pattern_name,
            "",
            &c.text,
            context,
        ])?;
    }
    wtr.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub matrix: AgreementMatrix,
    pub kappa: f64,
    pub overlap: u64,
    pub disagreements: Vec<CandidateKey>,
}

/// Final labels plus, when a second rater was involved, their agreement.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub entries: Vec<(CandidateKey, bool)>,
    pub agreement: Option<AgreementSummary>,
}

impl Benchmark {
    /// Attach candidate text from the cleaned report bodies.
    pub fn labeled(
        &self,
        cleaned_bodies: &HashMap<String, String>,
    ) -> Result<Vec<LabeledCandidate>> {
        self.entries
            .iter()
            .map(|(k, label)| {
                let body = cleaned_bodies
                    .get(&k.report_id)
                    .ok_or_else(|| Error::UnknownReport(k.report_id.clone()))?;
                let text = slice_chars(body, k.span)
                    .ok_or_else(|| Error::CandidateMismatch { key: k.to_string() })?;
                Ok(LabeledCandidate {
                    report_id: k.report_id.clone(),
                    candidate_text: text.to_owned(),
                    start: k.span.start,
                    end: k.span.end,
                    pattern_name: k.pattern_name.clone(),
                    label: *label,
                })
            })
            .collect()
    }
}

/// Agreement between two label files over the keys they share.
pub fn agreement(rater1: &LabelFile, rater2: &LabelFile) -> Result<AgreementSummary> {
    let second = rater2.as_map();
    let mut matrix = AgreementMatrix::default();
    let mut disagreements = Vec::new();
    for (k, l1) in &rater1.entries {
        if let Some(&l2) = second.get(k) {
            matrix.record(*l1, l2);
            if *l1 != l2 {
                disagreements.push(k.clone());
            }
        }
    }
    if matrix.total() == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(AgreementSummary {
        kappa: cohen_kappa(&matrix)?,
        overlap: matrix.total(),
        matrix,
        disagreements,
    })
}

pub fn build_benchmark(
    primary: &LabelFile,
    secondary: Option<&LabelFile>,
    resolutions: &[(CandidateKey, bool)],
) -> Result<Benchmark> {
    if primary.entries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let primary_keys = primary.keys();
    let mut resolved: HashMap<&CandidateKey, bool> = HashMap::new();
    for (k, l) in resolutions {
        if !primary_keys.contains(k) {
            return Err(Error::UnknownResolution(k.to_string()));
        }
        resolved.insert(k, *l);
    }

    let agreement = secondary.map(|s| agreement(primary, s)).transpose()?;
    if let Some(a) = &agreement {
        let unresolved: Vec<String> = a
            .disagreements
            .iter()
            .filter(|k| !resolved.contains_key(k))
            .map(ToString::to_string)
            .collect();
        if !unresolved.is_empty() {
            return Err(Error::UnresolvedDisagreements(unresolved));
        }
    }

    let entries = primary
        .entries
        .iter()
        .map(|(k, l)| (k.clone(), resolved.get(k).copied().unwrap_or(*l)))
        .collect();
    Ok(Benchmark { entries, agreement })
}
