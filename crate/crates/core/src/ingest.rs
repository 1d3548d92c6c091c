//! Issue-report corpora and labeled candidate datasets on disk.
//!
//! Reports are stored either as CSV with the columns
//! `label,id,title,body,author_association` (only `id` and `body` are
//! required when reading; unknown columns are ignored) or as JSON Lines with
//! one object per report keyed by field name. Labeled candidates are always
//! JSON Lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_len, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Bug,
    Feature,
    Question,
    Documentation,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Bug => "bug",
            Category::Feature => "feature",
            Category::Question => "question",
            Category::Documentation => "documentation",
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bug" => Ok(Category::Bug),
            "feature" => Ok(Category::Feature),
            "question" => Ok(Category::Question),
            "documentation" => Ok(Category::Documentation),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

/// One tracker issue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueReport {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_association: Option<String>,
}

impl IssueReport {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            category: None,
            author_association: None,
        }
    }
}

/// A candidate string with its ground-truth label. `span` indexes the
/// cleaned body of report `report_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCandidate {
    pub report_id: String,
    pub candidate_text: String,
    pub start: usize,
    pub end: usize,
    pub pattern_name: String,
    pub label: bool,
}

impl LabeledCandidate {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.start >= self.end {
            return Err(format!("empty span {}..{}", self.start, self.end));
        }
        if char_len(&self.candidate_text) != self.end - self.start {
            return Err(format!(
                "candidate_text has {} code points but span {}..{} covers {}",
                char_len(&self.candidate_text),
                self.start,
                self.end,
                self.end - self.start
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guess from the file extension; anything but `.csv` is JSON Lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

const CSV_COLUMNS: [&str; 5] = ["label", "id", "title", "body", "author_association"];

pub fn load_reports(path: &Path, format: Format) -> Result<Vec<IssueReport>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_owned(),
        source,
    })?;
    match format {
        Format::Csv => read_reports_csv(file),
        Format::Jsonl => read_jsonl(BufReader::new(file), |_| Ok(())),
    }
}

pub fn write_reports(reports: &[IssueReport], path: &Path, format: Format) -> Result<()> {
    let write_err = |source| Error::Write {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(write_err)?;
    match format {
        Format::Csv => write_reports_csv(reports, file).map_err(write_err),
        Format::Jsonl => write_jsonl(reports, file).map_err(write_err),
    }
}

pub fn read_reports_csv<R: std::io::Read>(reader: R) -> Result<Vec<IssueReport>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| Error::MissingColumn {
        column: "id".into(),
    })?;
    let body_col = col("body").ok_or_else(|| Error::MissingColumn {
        column: "body".into(),
    })?;
    let title_col = col("title");
    let label_col = col("label");
    let assoc_col = col("author_association");

    let mut reports = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = record.position().map_or(i as u64 + 2, |p| p.line());
        let field = |c: Option<usize>| c.and_then(|c| record.get(c)).unwrap_or("");
        let id = field(Some(id_col));
        if id.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty id".into(),
            });
        }
        let category = match field(label_col) {
            "" => None,
            s => Some(
                s.parse::<Category>()
                    .map_err(|reason| Error::MalformedRow { row, reason })?,
            ),
        };
        let author_association = match field(assoc_col) {
            "" => None,
            s => Some(s.to_owned()),
        };
        reports.push(IssueReport {
            id: id.to_owned(),
            title: field(title_col).to_owned(),
            body: field(Some(body_col)).to_owned(),
            category,
            author_association,
        });
    }
    Ok(reports)
}

pub fn write_reports_csv<W: Write>(reports: &[IssueReport], writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_COLUMNS)?;
    for r in reports {
        wtr.write_record([
            r.category.map_or("", Category::as_str),
            &r.id,
            &r.title,
            &r.body,
            r.author_association.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line());
    Error::MalformedRow {
        row,
        reason: e.to_string(),
    }
}

pub fn load_labeled(path: &Path) -> Result<Vec<LabeledCandidate>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_owned(),
        source,
    })?;
    read_jsonl(BufReader::new(file), LabeledCandidate::validate)
}

pub fn write_labeled(items: &[LabeledCandidate], path: &Path) -> Result<()> {
    let write_err = |source| Error::Write {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(write_err)?;
    write_jsonl(items, file).map_err(write_err)
}

fn read_jsonl<T, R, V>(reader: R, validate: V) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
    V: Fn(&T) -> std::result::Result<(), String>,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i as u64 + 1;
        let line = line.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        validate(&item).map_err(|reason| Error::MalformedRow { row, reason })?;
        out.push(item);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize, W: Write>(items: &[T], writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
