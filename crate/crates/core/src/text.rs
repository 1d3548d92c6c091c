//! Code-point spans and the byte/char conversions every module shares.
//!
//! All offsets exposed by this crate count Unicode scalar values, never bytes.

use serde::{Deserialize, Serialize};

/// Half-open `[start, end)` range of code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Number of code points in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the code point at index `char_idx`; `s.len()` when the
/// index equals the char length. `None` past the end.
pub fn byte_offset(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(s.len())
}

/// Slice `s` by a code-point span. `None` when the span is out of bounds.
pub fn slice_chars(s: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let start = byte_offset(s, span.start)?;
    let end = start + byte_offset(&s[start..], span.end - span.start)?;
    Some(&s[start..end])
}

/// Incremental byte-to-char converter for ascending byte offsets, which is
/// what regex match iteration yields.
pub(crate) struct CharCursor<'a> {
    text: &'a str,
    byte: usize,
    chars: usize,
}

impl<'a> CharCursor<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            text,
            byte: 0,
            chars: 0,
        }
    }

    /// Char index of `byte`. Offsets must be non-decreasing between calls
    /// unless the cursor is reset.
    pub(crate) fn char_index(&mut self, byte: usize) -> usize {
        if byte < self.byte {
            self.byte = 0;
            self.chars = 0;
        }
        self.chars += self.text[self.byte..byte].chars().count();
        self.byte = byte;
        self.chars
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_multibyte_text_by_code_points() {
        let s = "héllo wörld";
        assert_eq!(slice_chars(s, Span::new(1, 5)), Some("éllo"));
        assert_eq!(slice_chars(s, Span::new(6, 11)), Some("wörld"));
        assert_eq!(slice_chars(s, Span::new(11, 11)), Some(""));
        assert_eq!(slice_chars(s, Span::new(6, 12)), None);
        assert_eq!(slice_chars(s, Span::new(3, 2)), None);
    }

    #[test]
    fn cursor_tracks_ascending_offsets() {
        let s = "aé€b";
        let mut cur = CharCursor::new(s);
        assert_eq!(cur.char_index(0), 0);
        assert_eq!(cur.char_index(1), 1);
        assert_eq!(cur.char_index(3), 2);
        assert_eq!(cur.char_index(6), 3);
        assert_eq!(cur.char_index(1), 1);
    }
}
