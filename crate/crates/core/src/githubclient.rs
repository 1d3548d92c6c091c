//! Read-only crawler for a repository's issues over the GitHub REST API.
//!
//! Issues are requested newest first, 100 per page, following `Link:
//! rel="next"` headers. Pull requests, which the issues endpoint interleaves,
//! are recognised by their `pull_request` member and skipped.

use std::str::FromStr;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Deserialize;

use crate::error::CrawlError;
use crate::ingest::{Category, IssueReport};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";

/// Environment variable holding the API token.
pub const TOKEN_ENV: &str = "SCANNER_API_TOKEN";

pub const PAGE_SIZE: usize = 100;

/// Consecutive rate-limit retries of one page before giving up.
const MAX_RETRIES: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoRef {
    pub owner: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(owner: &str, name: &str) -> Result<Self, CrawlError> {
        let ok = |s: &str| !s.is_empty() && !s.contains('/');
        if !ok(owner) || !ok(name) {
            return Err(CrawlError::BadRepo(format!("{owner}/{name}")));
        }
        Ok(Self {
            owner: owner.to_owned(),
            name: name.to_owned(),
        })
    }
}

impl FromStr for RepoRef {
    type Err = CrawlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (owner, name) = s
            .split_once('/')
            .ok_or_else(|| CrawlError::BadRepo(s.to_owned()))?;
        Self::new(owner, name)
    }
}

impl std::fmt::Display for RepoRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

/// What to do when the API reports an exhausted rate limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateLimitPolicy {
    /// Sleep until the advertised reset, if that is no further away than
    /// `max_wait`, then retry the same page. Otherwise abort.
    Wait { max_wait: Duration },
    /// Stop immediately with a resumable cursor.
    Abort,
}

#[derive(Debug, Clone)]
pub struct CrawlConfig {
    pub api_base: String,
    pub token: Option<String>,
    pub max_issues: usize,
    pub rate_limit: RateLimitPolicy,
    pub timeout: Duration,
    /// Page URL to start from instead of the first page.
    pub resume_from: Option<String>,
}

impl CrawlConfig {
    pub fn new(max_issues: usize) -> Self {
        Self {
            api_base: DEFAULT_API_BASE.to_owned(),
            token: None,
            max_issues,
            rate_limit: RateLimitPolicy::Abort,
            timeout: Duration::from_secs(30),
            resume_from: None,
        }
    }

    /// Take the token from [`TOKEN_ENV`] when set and non-empty.
    pub fn token_from_env(mut self) -> Self {
        self.token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        self
    }
}

#[derive(Debug, Deserialize)]
struct ApiIssue {
    number: u64,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    author_association: Option<String>,
    #[serde(default)]
    labels: Vec<ApiLabel>,
    #[serde(default)]
    pull_request: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
struct ApiLabel {
    #[serde(default)]
    name: String,
}

impl ApiIssue {
    fn into_report(self) -> IssueReport {
        let category = self.labels.iter().find_map(|l| {
            let name = l.name.to_ascii_lowercase();
            match name.as_str() {
                "enhancement" => Some(Category::Feature),
                other => other.parse().ok(),
            }
        });
        IssueReport {
            id: self.number.to_string(),
            title: self.title.unwrap_or_default(),
            body: self.body.unwrap_or_default(),
            category,
            author_association: self.author_association,
        }
    }
}

/// Crawl up to `max_issues` issues with default settings.
pub fn crawl_issues(
    repo: &RepoRef,
    auth_token: Option<&str>,
    max_issues: usize,
) -> Result<Vec<IssueReport>, CrawlError> {
    let mut cfg = CrawlConfig::new(max_issues);
    cfg.token = auth_token.map(str::to_owned);
    crawl(repo, &cfg)
}

pub fn first_page_url(api_base: &str, repo: &RepoRef) -> String {
    format!(
        "{}/repos/{}/{}/issues?state=all&sort=created&direction=desc&per_page={PAGE_SIZE}",
        api_base.trim_end_matches('/'),
        repo.owner,
        repo.name
    )
}

pub fn crawl(repo: &RepoRef, cfg: &CrawlConfig) -> Result<Vec<IssueReport>, CrawlError> {
    if cfg.max_issues == 0 {
        return Err(CrawlError::BadRepo("max_issues must be positive".into()));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .http_status_as_error(false)
        .user_agent(concat!("breachscan/", env!("CARGO_PKG_VERSION")))
        .build()
        .into();

    let mut reports = Vec::new();
    let mut next = Some(
        cfg.resume_from
            .clone()
            .unwrap_or_else(|| first_page_url(&cfg.api_base, repo)),
    );
    let mut retries = 0;
    while let Some(url) = next.take() {
        let mut req = agent
            .get(&url)
            .header("Accept", "application/vnd.github+json");
        if let Some(token) = &cfg.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.call().map_err(|e| CrawlError::Transport {
            url: url.clone(),
            reason: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let header = |name: &str| {
            resp.headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_owned)
        };

        if status == 404 {
            return Err(CrawlError::NotFound(repo.to_string()));
        }
        if status == 403 || status == 429 {
            let exhausted = header("x-ratelimit-remaining").as_deref() == Some("0")
                || header("retry-after").is_some();
            if exhausted {
                let reset = rate_limit_reset(header("x-ratelimit-reset"), header("retry-after"));
                let wait = reset.and_then(|r| r.duration_since(SystemTime::now()).ok());
                retries += 1;
                match (cfg.rate_limit, wait) {
                    (RateLimitPolicy::Wait { max_wait }, Some(w))
                        if w <= max_wait && retries <= MAX_RETRIES =>
                    {
                        tracing::warn!(seconds = w.as_secs_f64(), "rate limited; waiting");
                        thread::sleep(w);
                        next = Some(url);
                        continue;
                    }
                    (RateLimitPolicy::Wait { .. }, None)
                        if reset.is_some() && retries <= MAX_RETRIES =>
                    {
                        // Reset already passed.
                        next = Some(url);
                        continue;
                    }
                    _ => {
                        return Err(CrawlError::RateLimited {
                            reset,
                            resume_url: url,
                            partial: reports,
                        })
                    }
                }
            }
        }
        if !(200..300).contains(&status) {
            return Err(CrawlError::Status { status, url });
        }

        retries = 0;
        let link = header("link");
        let page: Vec<ApiIssue> = resp
            .body_mut()
            .read_json()
            .map_err(|e| CrawlError::Payload {
                url: url.clone(),
                reason: e.to_string(),
            })?;
        for issue in page {
            if issue.pull_request.is_some() {
                continue;
            }
            reports.push(issue.into_report());
            if reports.len() >= cfg.max_issues {
                return Ok(reports);
            }
        }
        next = link.as_deref().and_then(next_link);
    }
    Ok(reports)
}

fn rate_limit_reset(reset: Option<String>, retry_after: Option<String>) -> Option<SystemTime> {
    if let Some(secs) = retry_after.and_then(|s| s.trim().parse::<u64>().ok()) {
        return Some(SystemTime::now() + Duration::from_secs(secs));
    }
    reset
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(|epoch| UNIX_EPOCH + Duration::from_secs(epoch))
}

/// Extract the `rel="next"` target from a `Link` header.
pub fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p == "rel=\"next\"" || p == "rel=next"
        });
        (is_next && target.starts_with('<') && target.ends_with('>'))
            .then(|| target[1..target.len() - 1].to_owned())
    })
}
