//! Command-line front end. Machine-readable results go to stdout as JSON;
//! logs go to stderr.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::bench::{
    build_benchmark, sample_candidates, write_label_template, CandidateKey, LabelFile,
};
use crate::classify::{
    featurize, train_with_history, ClassWeight, Classifier, ClassifierModel, RemoteClassifier,
    TrainParams,
};
use crate::error::{Error, Result};
use crate::githubclient::{crawl, CrawlConfig, RateLimitPolicy, RepoRef};
use crate::ingest::{
    load_labeled, load_reports, write_labeled, write_reports, Format, IssueReport, LabeledCandidate,
};
use crate::metrics::{compute_metrics, confusion_from, AgreementMatrix};
use crate::patterns::PatternRegistry;
use crate::pipeline::{Pipeline, ScoredCandidate};
use crate::preprocess::{clean, RuleSet};
use crate::service::{serve, ServiceConfig};
use crate::synth::{generate, SynthConfig};
use crate::window::DEFAULT_RADIUS;

#[derive(Debug, Parser)]
#[command(
    name = "breachscan",
    version,
    about = "Detect leaked secrets in issue reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan reports and print every candidate with its verdict.
    Scan(ScanArgs),
    /// Train a classifier on labelled candidates.
    Train(TrainArgs),
    /// Score predictions against labelled candidates.
    Evaluate(EvaluateArgs),
    /// Draw a sample of candidates into a label template.
    Sample(SampleArgs),
    /// Cohen's kappa between two label files.
    Kappa(KappaArgs),
    /// Merge label files into a benchmark of labelled candidates.
    BuildBenchmark(BuildBenchmarkArgs),
    /// Download a repository's issues.
    Crawl(CrawlArgs),
    /// Serve the detection API.
    Serve(ServeArgs),
    /// Write a synthetic corpus with planted secrets and its labels.
    Generate(GenerateArgs),
}

/// Detector configuration shared by several subcommands.
#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// JSON Lines file of secret patterns (default: built-in registry).
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// JSON Lines file of cleaning rules (default: built-in rules).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Context characters on each side of a candidate.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: usize,
    /// Model file (default: bundled model).
    #[arg(long, conflicts_with = "remote")]
    pub model: Option<PathBuf>,
    /// Decision threshold; overrides the model's own.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Score windows with an HTTP classifier instead of a local model.
    #[arg(long)]
    pub remote: Option<String>,
}

impl DetectorArgs {
    pub fn pipeline(&self) -> Result<Pipeline> {
        let rules = match &self.rules {
            Some(p) => RuleSet::load(p)?,
            None => RuleSet::builtin(),
        };
        let registry = match &self.patterns {
            Some(p) => PatternRegistry::load(p)?,
            None => PatternRegistry::builtin(),
        };
        let classifier = match &self.remote {
            Some(url) => Classifier::Remote(RemoteClassifier::new(
                url.clone(),
                Duration::from_secs(10),
                self.threshold.unwrap_or(crate::classify::DEFAULT_THRESHOLD),
            )),
            None => {
                let model = match &self.model {
                    Some(p) => ClassifierModel::load(p)?,
                    None => ClassifierModel::builtin(),
                };
                let model = match self.threshold {
                    Some(t) => model.with_threshold(t)?,
                    None => model,
                };
                Classifier::Local(model)
            }
        };
        Ok(Pipeline {
            rules,
            registry,
            radius: self.radius,
            classifier,
        })
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Reports file (.csv or JSON Lines).
    pub input: PathBuf,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Only print candidates classified as secrets.
    #[arg(long)]
    pub breaches_only: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Reports the labelled candidates were drawn from.
    #[arg(long)]
    pub reports: PathBuf,
    /// Labelled candidates (JSON Lines).
    #[arg(long)]
    pub labels: PathBuf,
    /// Where to write the model.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// balanced, uniform, or POS,NEG.
    #[arg(long, default_value = "balanced")]
    pub class_weight: ClassWeight,
    #[arg(long, default_value_t = crate::classify::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth labelled candidates (JSON Lines).
    #[arg(long)]
    pub labels: PathBuf,
    /// Weight of recall relative to precision.
    #[arg(long)]
    pub beta: f64,
    /// Predictions in the labelled-candidate format, matched by key.
    #[arg(long, conflicts_with_all = ["reports", "regex_baseline"])]
    pub predictions: Option<PathBuf>,
    /// Reports to classify the labelled candidates from.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Flag every candidate as a secret, as a pattern-only scanner would.
    #[arg(long)]
    pub regex_baseline: bool,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Reports file to draw candidates from.
    pub input: PathBuf,
    /// Fraction of candidates to draw, in (0, 1].
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Label files whose candidates must not be drawn again.
    #[arg(long)]
    pub exclude: Vec<PathBuf>,
    /// Template CSV to write.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: usize,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    pub first: PathBuf,
    pub second: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildBenchmarkArgs {
    /// Primary rater's label file.
    #[arg(long)]
    pub primary: PathBuf,
    /// Second rater's label file.
    #[arg(long)]
    pub secondary: Option<PathBuf>,
    /// Label file settling the disagreements.
    #[arg(long)]
    pub resolutions: Option<PathBuf>,
    /// Reports the candidates come from.
    #[arg(long)]
    pub reports: PathBuf,
    /// Labelled candidates to write (JSON Lines).
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrawlArgs {
    /// Repository as owner/name.
    pub repo: String,
    #[arg(long, default_value_t = 1000)]
    pub max_issues: usize,
    /// Reports file to write (.csv or JSON Lines).
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = crate::githubclient::DEFAULT_API_BASE)]
    pub api_base: String,
    /// Longest rate-limit pause to sit out; longer ones abort.
    #[arg(long, default_value_t = 0)]
    pub max_wait_secs: u64,
    /// Page URL printed by an earlier, interrupted crawl.
    #[arg(long)]
    pub resume_from: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Largest accepted request body in bytes.
    #[arg(long, default_value_t = crate::service::DEFAULT_MAX_BODY)]
    pub max_body: usize,
    /// Origin allowed to call the API cross-site.
    #[arg(long)]
    pub allow_origin: Option<String>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 800)]
    pub count: usize,
    #[arg(long, default_value_t = 0.18)]
    pub secret_rate: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Reports file to write (.csv or JSON Lines).
    #[arg(long)]
    pub reports: PathBuf,
    /// Labelled candidates to write (JSON Lines).
    #[arg(long)]
    pub labels: PathBuf,
}

/// Parse `argv` and run. Returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(out) => {
            if let Some(v) = out {
                println!("{v}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<Option<serde_json::Value>> {
    match command {
        Command::Scan(a) => scan_cmd(&a).map(Some),
        Command::Train(a) => train_cmd(&a).map(Some),
        Command::Evaluate(a) => evaluate_cmd(&a).map(Some),
        Command::Sample(a) => sample_cmd(&a).map(Some),
        Command::Kappa(a) => kappa_cmd(&a).map(Some),
        Command::BuildBenchmark(a) => build_benchmark_cmd(&a).map(Some),
        Command::Crawl(a) => crawl_cmd(&a).map(Some),
        Command::Serve(a) => serve_cmd(&a).map(|()| None),
        Command::Generate(a) => generate_cmd(&a).map(Some),
    }
}

fn reports_from(path: &Path) -> Result<Vec<IssueReport>> {
    load_reports(path, Format::from_path(path))
}

fn rules_from(path: Option<&Path>) -> Result<RuleSet> {
    path.map_or_else(|| Ok(RuleSet::builtin()), RuleSet::load)
}

fn scan_cmd(a: &ScanArgs) -> Result<serde_json::Value> {
    let pipeline = a.detector.pipeline()?;
    let reports = reports_from(&a.input)?;
    let per_report = reports
        .par_iter()
        .map(|r| pipeline.scan_report(r))
        .collect::<Result<Vec<_>>>()?;
    let found: Vec<ScoredCandidate> = per_report
        .into_iter()
        .flatten()
        .filter(|v| !a.breaches_only || v.is_breach)
        .map(ScoredCandidate::from)
        .collect();
    tracing::info!(
        reports = reports.len(),
        candidates = found.len(),
        "scan finished"
    );
    Ok(serde_json::to_value(found)?)
}

fn train_cmd(a: &TrainArgs) -> Result<serde_json::Value> {
    let pipeline = Pipeline {
        rules: rules_from(a.rules.as_deref())?,
        ..Pipeline::builtin()
    }
    .with_radius(a.radius);
    let reports = reports_from(&a.reports)?;
    let labeled = load_labeled(&a.labels)?;
    let items = pipeline.labeled_windows(&reports, &labeled)?;
    let data: Vec<_> = items.iter().map(|(_, w, y)| (featurize(w), *y)).collect();
    let params = TrainParams {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        seed: a.seed,
        class_weight: a.class_weight,
    };
    let (model, history) = train_with_history(&data, &params)?;
    let model = model.with_threshold(a.threshold)?;
    model.save(&a.output)?;
    Ok(json!({
        "model": a.output,
        "instances": data.len(),
        "positives": data.iter().filter(|(_, y)| *y).count(),
        "initial_loss": history.first(),
        "final_loss": history.last(),
    }))
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<serde_json::Value> {
    let labeled = load_labeled(&a.labels)?;
    let labels: Vec<bool> = labeled.iter().map(|l| l.label).collect();
    let predicted: Vec<bool> = if let Some(p) = &a.predictions {
        let preds: HashMap<CandidateKey, bool> = load_labeled(p)?
            .into_iter()
            .map(|l| (key_of(&l), l.label))
            .collect();
        labeled
            .iter()
            .map(|l| {
                let k = key_of(l);
                preds
                    .get(&k)
                    .copied()
                    .ok_or_else(|| Error::InvalidParameter(format!("no prediction for {k}")))
            })
            .collect::<Result<_>>()?
    } else if a.regex_baseline {
        vec![true; labeled.len()]
    } else {
        let reports = a.reports.as_deref().ok_or_else(|| {
            Error::InvalidParameter("--reports is required to classify candidates".into())
        })?;
        let pipeline = a.detector.pipeline()?;
        let items = pipeline.labeled_windows(&reports_from(reports)?, &labeled)?;
        items
            .iter()
            .map(|(c, w, _)| pipeline.classifier.predict(c, w).map(|v| v.is_breach))
            .collect::<Result<_>>()?
    };
    let cm = confusion_from(&predicted, &labels)?;
    let report = compute_metrics(&cm, a.beta)?;
    Ok(json!({ "confusion": cm, "metrics": report }))
}

fn key_of(l: &LabeledCandidate) -> CandidateKey {
    CandidateKey {
        report_id: l.report_id.clone(),
        span: l.span(),
        pattern_name: l.pattern_name.clone(),
    }
}

fn sample_cmd(a: &SampleArgs) -> Result<serde_json::Value> {
    let rules = rules_from(a.rules.as_deref())?;
    let registry = match &a.patterns {
        Some(p) => PatternRegistry::load(p)?,
        None => PatternRegistry::builtin(),
    };
    let reports = reports_from(&a.input)?;
    let mut cleaned: HashMap<String, String> = HashMap::new();
    let mut candidates = Vec::new();
    for r in &reports {
        let body = clean(&r.body, &rules).cleaned;
        candidates.extend(crate::patterns::scan(&r.id, &body, &registry));
        cleaned.insert(r.id.clone(), body);
    }
    let mut exclude = HashSet::new();
    for p in &a.exclude {
        exclude.extend(LabelFile::load(p)?.keys());
    }
    let sample = sample_candidates(&candidates, a.fraction, a.seed, &exclude)?;
    let with_context = sample
        .into_iter()
        .map(|c| {
            let body = &cleaned[&c.report_id];
            let w = crate::window::extract_window(body, c.span, a.radius)?;
            Ok((c, w.text))
        })
        .collect::<Result<Vec<_>>>()?;
    let file = File::create(&a.output).map_err(|source| Error::Write {
        path: a.output.clone(),
        source,
    })?;
    write_label_template(&with_context, BufWriter::new(file)).map_err(|source| Error::Write {
        path: a.output.clone(),
        source,
    })?;
    Ok(json!({
        "template": a.output,
        "candidates": candidates.len(),
        "sampled": with_context.len(),
    }))
}

fn kappa_cmd(a: &KappaArgs) -> Result<serde_json::Value> {
    let r1 = LabelFile::load(&a.first)?;
    let r2 = LabelFile::load(&a.second)?;
    let summary = crate::bench::agreement(&r1, &r2)?;
    let AgreementMatrix {
        both_pos,
        r1pos_r2neg,
        r1neg_r2pos,
        both_neg,
    } = summary.matrix;
    Ok(json!({
        "kappa": summary.kappa,
        "overlap": summary.overlap,
        "matrix": {
            "both_positive": both_pos,
            "first_positive_second_negative": r1pos_r2neg,
            "first_negative_second_positive": r1neg_r2pos,
            "both_negative": both_neg,
        },
        "disagreements": summary.disagreements.iter().map(ToString::to_string).collect::<Vec<_>>(),
    }))
}

fn build_benchmark_cmd(a: &BuildBenchmarkArgs) -> Result<serde_json::Value> {
    let primary = LabelFile::load(&a.primary)?;
    let secondary = a.secondary.as_deref().map(LabelFile::load).transpose()?;
    let resolutions = match &a.resolutions {
        Some(p) => LabelFile::load(p)?.entries,
        None => Vec::new(),
    };
    let bench = build_benchmark(&primary, secondary.as_ref(), &resolutions)?;
    let rules = rules_from(a.rules.as_deref())?;
    let cleaned: HashMap<String, String> = reports_from(&a.reports)?
        .into_iter()
        .map(|r| {
            let body = clean(&r.body, &rules).cleaned;
            (r.id, body)
        })
        .collect();
    let labeled = bench.labeled(&cleaned)?;
    write_labeled(&labeled, &a.output)?;
    Ok(json!({
        "benchmark": a.output,
        "instances": labeled.len(),
        "positives": labeled.iter().filter(|l| l.label).count(),
        "agreement": bench.agreement,
    }))
}

fn crawl_cmd(a: &CrawlArgs) -> Result<serde_json::Value> {
    let repo: RepoRef = a.repo.parse()?;
    let mut cfg = CrawlConfig::new(a.max_issues).token_from_env();
    cfg.api_base = a.api_base.clone();
    cfg.resume_from = a.resume_from.clone();
    cfg.rate_limit = if a.max_wait_secs > 0 {
        RateLimitPolicy::Wait {
            max_wait: Duration::from_secs(a.max_wait_secs),
        }
    } else {
        RateLimitPolicy::Abort
    };
    let format = Format::from_path(&a.output);
    match crawl(&repo, &cfg) {
        Ok(reports) => {
            write_reports(&reports, &a.output, format)?;
            Ok(json!({ "repo": repo.to_string(), "issues": reports.len(), "output": a.output }))
        }
        Err(crate::error::CrawlError::RateLimited {
            reset,
            resume_url,
            partial,
        }) => {
            // Keep what was fetched, then report the failure with the cursor.
            write_reports(&partial, &a.output, format)?;
            eprintln!(
                "wrote {} issue(s) before hitting the rate limit",
                partial.len()
            );
            Err(crate::error::CrawlError::RateLimited {
                reset,
                resume_url,
                partial: Vec::new(),
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

fn serve_cmd(a: &ServeArgs) -> Result<()> {
    let pipeline = Arc::new(a.detector.pipeline()?);
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Error::InvalidParameter(format!("bad address: {e}")))?;
    let config = ServiceConfig {
        max_body: a.max_body,
        allow_origin: a.allow_origin.clone(),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(serve(addr, pipeline, config))?;
    Ok(())
}

fn generate_cmd(a: &GenerateArgs) -> Result<serde_json::Value> {
    if !(0.0..=1.0).contains(&a.secret_rate) {
        return Err(Error::InvalidParameter(
            "secret rate must be in [0, 1]".into(),
        ));
    }
    let corpus = generate(&SynthConfig {
        reports: a.count,
        secret_rate: a.secret_rate,
        seed: a.seed,
    });
    let labeled = corpus.label(&Pipeline::builtin());
    write_reports(&corpus.reports, &a.reports, Format::from_path(&a.reports))?;
    write_labeled(&labeled, &a.labels)?;
    Ok(json!({
        "reports": corpus.reports.len(),
        "planted_secrets": corpus.planted.len(),
        "candidates": labeled.len(),
        "positives": labeled.iter().filter(|l| l.label).count(),
    }))
}
