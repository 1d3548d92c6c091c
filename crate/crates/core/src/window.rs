//! Fixed-radius context windows around candidates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{byte_offset, char_len, Span};

/// Radius that scored best in the context-window sweep.
pub const DEFAULT_RADIUS: usize = 125;

/// Radius used for the real-world repository scan.
pub const DEPLOYMENT_RADIUS: usize = 200;

/// Text surrounding a candidate: up to `radius` code points on each side of
/// it, clipped at the body edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextWindow {
    pub text: String,
    pub radius: usize,
    /// Candidate location within `text`.
    pub candidate_offset: Span,
    /// Candidate location within the cleaned body.
    pub source_span: Span,
}

impl ContextWindow {
    pub fn candidate(&self) -> &str {
        let start = byte_offset(&self.text, self.candidate_offset.start).unwrap_or(0);
        let end = byte_offset(&self.text, self.candidate_offset.end).unwrap_or(self.text.len());
        &self.text[start..end]
    }

    /// Text left of the candidate.
    pub fn left(&self) -> &str {
        let start = byte_offset(&self.text, self.candidate_offset.start).unwrap_or(0);
        &self.text[..start]
    }

    /// Text right of the candidate.
    pub fn right(&self) -> &str {
        let end = byte_offset(&self.text, self.candidate_offset.end).unwrap_or(self.text.len());
        &self.text[end..]
    }

    /// Window covering the whole of `s`, with the candidate at `candidate`.
    /// Used when a caller already holds the exact text to classify.
    pub fn from_parts(text: impl Into<String>, candidate: Span, radius: usize) -> Result<Self> {
        let text = text.into();
        let len = char_len(&text);
        if candidate.start >= candidate.end || candidate.end > len {
            return Err(Error::SpanOutOfBounds {
                span: candidate,
                len,
            });
        }
        Ok(Self {
            text,
            radius,
            candidate_offset: candidate,
            source_span: candidate,
        })
    }
}

/// Cut the window `[max(0, start - radius), min(len, end + radius))`.
pub fn extract_window(cleaned_body: &str, span: Span, radius: usize) -> Result<ContextWindow> {
    let len = char_len(cleaned_body);
    if span.start >= span.end || span.end > len {
        return Err(Error::SpanOutOfBounds { span, len });
    }
    let lo = span.start.saturating_sub(radius);
    let hi = span.end.saturating_add(radius).min(len);
    let lo_byte = byte_offset(cleaned_body, lo).expect("in bounds");
    let hi_byte = lo_byte + byte_offset(&cleaned_body[lo_byte..], hi - lo).expect("in bounds");
    Ok(ContextWindow {
        text: cleaned_body[lo_byte..hi_byte].to_owned(),
        radius,
        candidate_offset: Span::new(span.start - lo, span.end - lo),
        source_span: span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(n: usize) -> String {
        (0..n).map(|i| char::from(b'a' + (i % 26) as u8)).collect()
    }

    #[test]
    fn interior_window() {
        let b = body(400);
        let w = extract_window(&b, Span::new(200, 210), 125).unwrap();
        assert_eq!(w.text, &b[75..335]);
        assert_eq!(w.candidate_offset, Span::new(125, 135));
        assert_eq!(w.candidate(), &b[200..210]);
    }

    #[test]
    fn left_clip() {
        let b = body(400);
        let w = extract_window(&b, Span::new(0, 5), 125).unwrap();
        assert_eq!(w.text, &b[0..130]);
        assert_eq!(w.candidate_offset, Span::new(0, 5));
    }

    #[test]
    fn zero_radius_is_candidate() {
        let b = "key=s3cr3t!";
        let w = extract_window(b, Span::new(4, 11), 0).unwrap();
        assert_eq!(w.text, "s3cr3t!");
        assert_eq!(w.left(), "");
        assert_eq!(w.right(), "");
    }

    #[test]
    fn out_of_bounds() {
        assert!(matches!(
            extract_window("abc", Span::new(1, 4), 3),
            Err(Error::SpanOutOfBounds { len: 3, .. })
        ));
        assert!(extract_window("abc", Span::new(2, 2), 3).is_err());
    }

    #[test]
    fn multibyte_body() {
        let b = "ééé KEY ééé";
        let w = extract_window(b, Span::new(4, 7), 2).unwrap();
        assert_eq!(w.text, "é KEY é");
        assert_eq!(w.candidate(), "KEY");
    }
}
