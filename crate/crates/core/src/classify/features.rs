//! Lexical and entropy features of a context window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::text::char_len;
use crate::window::ContextWindow;

pub const SCHEMA_VERSION: u32 = 1;

/// Keywords whose presence anywhere in the window is a feature.
pub const KEYWORDS: [&str; 7] = [
    "password",
    "token",
    "key",
    "secret",
    "auth",
    "session",
    "credential",
];

/// Feature names for [`SCHEMA_VERSION`], in vector order.
pub const FEATURE_NAMES: [&str; 21] = [
    "entropy",
    "length",
    "digit_ratio",
    "upper_ratio",
    "lower_ratio",
    "symbol_ratio",
    "mask_ratio",
    "kw_password",
    "kw_token",
    "kw_key",
    "kw_secret",
    "kw_auth",
    "kw_session",
    "kw_credential",
    "assignment",
    "context_length",
    "hex_only",
    "distinct_ratio",
    "placeholder",
    "uuid_shape",
    "char_classes",
];

/// Fragments that mark a value as a stand-in rather than a credential.
const PLACEHOLDER_MARKERS: [&str; 8] = [
    "example",
    "your",
    "replace",
    "changeme",
    "dummy",
    "sample",
    "placeholder",
    "insert",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

/// Shortest run of mask characters that counts as masking.
const MASK_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_version: u32,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values.get(i).copied())
    }
}

/// Shannon entropy in bits per code point; 0 for the empty string.
pub fn entropy(s: &str) -> f64 {
    // Ordered map: summation order must not vary between calls.
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut n = 0usize;
    for c in s.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // -0.0 for single-symbol strings reads badly in reports.
    h.max(0.0)
}

fn is_mask(c: char) -> bool {
    matches!(c, 'x' | 'X' | '*')
}

/// Fraction of code points that sit in runs of at least three mask chars.
fn mask_ratio(chars: &[char]) -> f64 {
    if chars.is_empty() {
        return 0.0;
    }
    let mut masked = 0;
    let mut run = 0;
    for &c in chars {
        if is_mask(c) {
            run += 1;
        } else {
            if run >= MASK_RUN {
                masked += run;
            }
            run = 0;
        }
    }
    if run >= MASK_RUN {
        masked += run;
    }
    masked as f64 / chars.len() as f64
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 8-4-4-4-12 hex groups.
fn is_uuid(chars: &[char]) -> bool {
    chars.len() == 36
        && chars.iter().enumerate().all(|(i, c)| match i {
            8 | 13 | 18 | 23 => *c == '-',
            _ => c.is_ascii_hexdigit(),
        })
}

/// How many of lower, upper, digit and other characters occur.
fn char_classes(chars: &[char]) -> f64 {
    let classes = [
        chars.iter().any(|c| c.is_lowercase()),
        chars.iter().any(|c| c.is_uppercase()),
        chars.iter().any(|c| c.is_numeric()),
        chars.iter().any(|c| !c.is_alphanumeric()),
    ];
    classes.iter().filter(|&&b| b).count() as f64
}

pub fn featurize(w: &ContextWindow) -> FeatureVector {
    let candidate: Vec<char> = w.candidate().chars().collect();
    let len = candidate.len() as f64;
    let ratio = |pred: fn(char) -> bool| {
        if candidate.is_empty() {
            0.0
        } else {
            candidate.iter().filter(|&&c| pred(c)).count() as f64 / len
        }
    };

    let lowered = w.text.to_lowercase();
    let keyword = |k: &str| if lowered.contains(k) { 1.0 } else { 0.0 };

    let assignment = w
        .left()
        .trim_end_matches([' ', '\t'])
        .chars()
        .next_back()
        .is_some_and(|c| c == '=' || c == ':');

    let hex_only = !candidate.is_empty() && candidate.iter().all(char::is_ascii_hexdigit);
    let distinct = {
        let mut d = candidate.clone();
        d.sort_unstable();
        d.dedup();
        d.len() as f64
    };

    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.push(entropy(w.candidate()));
    values.push(len);
    values.push(ratio(char::is_numeric));
    values.push(ratio(char::is_uppercase));
    values.push(ratio(char::is_lowercase));
    values.push(ratio(|c| !c.is_alphanumeric()));
    values.push(mask_ratio(&candidate));
    values.extend(KEYWORDS.iter().map(|k| keyword(k)));
    values.push(flag(assignment));
    values.push((char_len(&w.text) - candidate.len()) as f64);
    values.push(flag(hex_only));
    values.push(if candidate.is_empty() {
        0.0
    } else {
        distinct / len
    });
    let lowered_candidate = w.candidate().to_lowercase();
    values.push(flag(
        PLACEHOLDER_MARKERS
            .iter()
            .any(|m| lowered_candidate.contains(m)),
    ));
    values.push(flag(is_uuid(&candidate)));
    values.push(char_classes(&candidate));
    debug_assert_eq!(values.len(), FEATURE_COUNT);

    FeatureVector {
        values,
        schema_version: SCHEMA_VERSION,
    }
}
