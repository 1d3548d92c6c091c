//! Noise removal for issue-report bodies.
//!
//! A [`RuleSet`] is an ordered list of regular expressions. [`clean`] applies
//! each rule once, in rank order, deleting every non-overlapping match from
//! the text as it stands after the previous rules. Nothing is inserted in
//! place of a match and whitespace is left as is.
//!
//! The built-in set targets the artifacts that make issue text look like it
//! is full of secrets: quotes, `ls -l` listings, shell blocks, saved-game
//! dumps, URLs, dotted package names, Java stack frames, commit ids, file
//! paths, SHA digests, build ids, UUID/GUID lists, angle-bracket ids,
//! prefixed UUIDs and hex values, and screenshot file names.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{CharCursor, Span};

/// On-disk form of a rule: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    pub pattern: String,
    pub order: i64,
}

#[derive(Debug, Clone)]
pub struct CleaningRule {
    pub name: String,
    pub order: i64,
    regex: Regex,
}

impl CleaningRule {
    pub fn new(name: impl Into<String>, pattern: &str, order: i64) -> Result<Self> {
        let name = name.into();
        let regex = Regex::new(pattern).map_err(|e| Error::BadRule {
            name: name.clone(),
            reason: e.to_string(),
        })?;
        Ok(Self { name, order, regex })
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    pub fn spec(&self) -> RuleSpec {
        RuleSpec {
            name: self.name.clone(),
            pattern: self.pattern().to_owned(),
            order: self.order,
        }
    }
}

/// Rules sorted by ascending rank. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<CleaningRule>,
}

/// Built-in rules, in application order.
///
/// The two URL rules run before the dotted-name rule, which would otherwise
/// delete host names and leave URL fragments behind.
const BUILTIN_RULES: &[(&str, &str)] = &[
    ("quotation_marks", r#"['"\\|]"#),
    (
        "directory_list",
        r"drwx[-\s]*\d+\s+\w+\s+\w+\s+\d+\s+\w+\s+\d+\s+[0-9a-fA-F-]+.*",
    ),
    ("shell_code", r"```shell([^`]+)```"),
    ("shell_code_quoted", r#"``` shell \s*"([^"]*)" \s*```"#),
    (
        "saved_game",
        r"<details><summary> Saved game </summary>\n \n ```(.*?)```",
    ),
    ("url_fragment", r"https?://[^\s#]+#[A-Za-z0-9\-=\+]+"),
    (
        "url",
        r"http[s]?://(?:[a-zA-Z]|[0-9]|[$-_@.&+]|[!*\\(\\).]|(?:%[0-9a-fA-F][0-9a-fA-F]))+",
    ),
    ("packages", r"(\w+\.)+\w+"),
    ("java_stack_trace", r"at\s[\w.$]+\.([\w]+)\(([^:]+:\d+)\)"),
    (
        "commit_id",
        r"commit[ ]?(?:id)?[ ]?[:]?[ ]?([0-9a-f]{40})\b",
    ),
    ("file_path", r"/[\w/. :-]+"),
    ("file_path_segments", r"(/[^/\s]+)+"),
    ("sha256", r"sha256\s*[:]?[=]?\s*[a-fA-F0-9]{64}"),
    ("git_tree_sha1", r"git-tree-sha1\s*=\s*[a-fA-F0-9]+"),
    ("build_id", r"build-id\s*[:]?[=]?\s*([a-fA-F0-9]+)"),
    (
        "uuid_list",
        r"([0-9a-fA-F-]+\s*,\s*[0-9a-fA-F-]+\s*,\s*[0-9a-fA-F-]+)",
    ),
    (
        "guid_list",
        r"GUIDs:\s+([0-9a-fA-F-]+\s+[0-9a-fA-F-]+\s+[0-9a-fA-F-]+)",
    ),
    ("event_id", r"<([^>]+)>"),
    (
        "prefixed_uuid",
        r#"(?:UUID|GUID|version|id)[\\=:"'\s]*\b[a-fA-F0-9]{8}-[a-fA-F0-9]{4}-[a-fA-F0-9]{4}-[a-fA-F0-9]{4}-[a-fA-F0-9]{12}\b"#,
    ),
    (
        "prefixed_hex",
        r#"(?:data|address|id)[\\=:"'\s]*\b0x[0-9a-fA-F]+\b"#,
    ),
    (
        "screenshot",
        r"Screenshot_(\d{4}[_\-]\d{2}[_\-]\d{2}[_\-]\d{2}[_\-]\d{2})",
    ),
];

impl RuleSet {
    pub fn builtin() -> Self {
        let rules = BUILTIN_RULES
            .iter()
            .zip(1..)
            .map(|(&(name, pattern), order)| {
                CleaningRule::new(name, pattern, order).expect("built-in rule compiles")
            })
            .collect();
        Self { rules }
    }

    /// An empty set; cleaning with it is the identity.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Compile and rank rules. Names must be unique and ranks distinct.
    pub fn from_specs(specs: impl IntoIterator<Item = RuleSpec>) -> Result<Self> {
        let mut rules = Vec::new();
        let mut names = HashSet::new();
        let mut orders = HashSet::new();
        for spec in specs {
            if !names.insert(spec.name.clone()) {
                return Err(Error::DuplicateName(spec.name));
            }
            if !orders.insert(spec.order) {
                return Err(Error::InvalidParameter(format!(
                    "rule `{}` reuses rank {}",
                    spec.name, spec.order
                )));
            }
            rules.push(CleaningRule::new(spec.name, &spec.pattern, spec.order)?);
        }
        rules.sort_by_key(|r| r.order);
        Ok(Self { rules })
    }

    /// Parse a JSON-Lines rule file. Blank lines are skipped.
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
            let spec: RuleSpec = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                row,
                reason: e.to_string(),
            })?;
            specs.push(spec);
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

    pub fn rules(&self) -> &[CleaningRule] {
        &self.rules
    }

    pub fn get(&self, name: &str) -> Option<&CleaningRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// A set holding only the named rule, for testing rules in isolation.
    pub fn only(&self, name: &str) -> Option<Self> {
        self.get(name).map(|r| Self {
            rules: vec![r.clone()],
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// One deleted substring. `span` is in code points of the text as it was
/// when `rule` ran, not of the original body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub rule: String,
    pub removed: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanResult {
    pub cleaned: String,
    pub removals: Vec<Removal>,
}

pub fn clean(body: &str, rules: &RuleSet) -> CleanResult {
    let mut text = body.to_owned();
    let mut removals = Vec::new();
    for rule in &rules.rules {
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        let mut cursor = CharCursor::new(&text);
        for m in rule.regex.find_iter(&text) {
            if m.is_empty() {
                continue;
            }
            out.push_str(&text[last..m.start()]);
            let start = cursor.char_index(m.start());
            let end = cursor.char_index(m.end());
            removals.push(Removal {
                rule: rule.name.clone(),
                removed: m.as_str().to_owned(),
                span: Span::new(start, end),
            });
            last = m.end();
        }
        if last == 0 {
            continue;
        }
        out.push_str(&text[last..]);
        text = out;
    }
    CleanResult {
        cleaned: text,
        removals,
    }
}

/// Convenience wrapper returning only the cleaned text.
pub fn clean_text(body: &str, rules: &RuleSet) -> String {
    clean(body, rules).cleaned
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_every_rule_in_order() {
        let rules = RuleSet::builtin();
        assert_eq!(rules.len(), 21);
        assert_eq!(rules.rules()[0].name, "quotation_marks");
        assert_eq!(rules.rules()[20].name, "screenshot");
        let orders: Vec<_> = rules.rules().iter().map(|r| r.order).collect();
        assert!(orders.windows(2).all(|w| w[0] < w[1]));
        let pos = |n: &str| rules.rules().iter().position(|r| r.name == n).unwrap();
        assert!(pos("url") < pos("packages"));
        assert!(pos("url_fragment") < pos("packages"));
    }

    #[test]
    fn url_is_removed_by_url_rule() {
        let r = clean(
            "fix at https://api.example.com/v1?k=1 please",
            &RuleSet::builtin(),
        );
        assert_eq!(r.cleaned, "fix at  please");
        assert_eq!(r.removals.len(), 1);
        assert_eq!(r.removals[0].rule, "url");
        assert_eq!(r.removals[0].removed, "https://api.example.com/v1?k=1");
        assert_eq!(r.removals[0].span, Span::new(7, 37));
    }

    #[test]
    fn commit_hash_is_removed() {
        let body = "commit id: 0123456789abcdef0123456789abcdef01234567";
        let r = clean(body, &RuleSet::builtin());
        assert_eq!(r.cleaned, "");
        assert_eq!(r.removals[0].rule, "commit_id");
    }

    #[test]
    fn untouched_text_has_no_removals() {
        let r = clean("no noise here", &RuleSet::builtin());
        assert_eq!(r.cleaned, "no noise here");
        assert!(r.removals.is_empty());
        assert_eq!(clean("", &RuleSet::builtin()).cleaned, "");
    }

    #[test]
    fn removal_spans_are_code_points() {
        let r = clean("ünïcode 'x' done", &RuleSet::builtin());
        assert_eq!(r.cleaned, "ünïcode x done");
        assert_eq!(r.removals[0].span, Span::new(8, 9));
        assert_eq!(r.removals[1].span, Span::new(10, 11));
    }

    #[test]
    fn later_rules_see_earlier_output() {
        let rules = RuleSet::from_specs([
            RuleSpec {
                name: "b".into(),
                pattern: "ac".into(),
                order: 2,
            },
            RuleSpec {
                name: "a".into(),
                pattern: "b".into(),
                order: 1,
            },
        ])
        .unwrap();
        assert_eq!(rules.rules()[0].name, "a");
        let r = clean("abc", &rules);
        assert_eq!(r.cleaned, "");
        assert_eq!(r.removals[1].span, Span::new(0, 2));
    }

    #[test]
    fn rule_file_errors() {
        let dup = "{\"name\":\"a\",\"pattern\":\"x\",\"order\":1}\n{\"name\":\"a\",\"pattern\":\"y\",\"order\":2}\n";
        assert!(matches!(
            RuleSet::from_reader(dup.as_bytes()),
            Err(Error::DuplicateName(n)) if n == "a"
        ));
        let bad = "{\"name\":\"broken\",\"pattern\":\"(\",\"order\":1}\n";
        assert!(matches!(
            RuleSet::from_reader(bad.as_bytes()),
            Err(Error::BadRule { name, .. }) if name == "broken"
        ));
        let empty = RuleSet::from_reader("".as_bytes()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(clean("a 'b' c", &empty).cleaned, "a 'b' c");
    }
}
