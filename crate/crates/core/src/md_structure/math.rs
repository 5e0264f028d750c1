//! Math segment detection.
//!
//! LaTeX segments do not survive a Markdown-to-HTML conversion, so they are cut
//! out before parsing and replaced by opaque placeholders that the converter
//! treats as plain text. Each placeholder later becomes one `<math></math>` pair.
//!
//! Delimiter kinds are scanned in this fixed order, each pass skipping regions
//! claimed by an earlier one:
//!
//! 1. `$$ … $$` (may span lines)
//! 2. `\[ … \]` (may span lines)
//! 3. `\( … \)` (may span lines)
//! 4. `$ … $` on a single line, matching
//!    `(?<![\\$])\$([^\s$][^$\n]*?)(?<![\s\\])\$(?![$0-9])`
//!    (opening `$` followed by non-space, closing `$` preceded by non-space and
//!    not followed by a digit, so `$5 and $6` is not math).
//!
//! A delimiter preceded by an odd number of backslashes is escaped. Segments
//! never start inside code spans, code blocks, raw HTML or link reference
//! definitions, and are dropped when they would cut through one.

use std::ops::Range;

use pulldown_cmark::{Event, Parser, Tag};
use serde::{Deserialize, Serialize};

use super::parser_options;

pub(crate) const PLACEHOLDER_START: char = '\u{E000}';
pub(crate) const PLACEHOLDER_END: char = '\u{E001}';

/// A model response as Markdown source.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkdownDoc {
    text: String,
}

impl MarkdownDoc {
    /// Line endings are normalized to `\n`; all other bytes are kept.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let text = if text.contains('\r') {
            text.replace("\r\n", "\n").replace('\r', "\n")
        } else {
            text
        };
        Self { text }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

impl From<&str> for MarkdownDoc {
    fn from(s: &str) -> Self {
        MarkdownDoc::new(s)
    }
}

impl From<String> for MarkdownDoc {
    fn from(s: String) -> Self {
        MarkdownDoc::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MathDelimiter {
    /// `$$ … $$`
    DoubleDollar,
    /// `\[ … \]`
    Bracket,
    /// `\( … \)`
    Paren,
    /// `$ … $`
    Dollar,
}

impl MathDelimiter {
    const SCAN_ORDER: [MathDelimiter; 4] = [
        MathDelimiter::DoubleDollar,
        MathDelimiter::Bracket,
        MathDelimiter::Paren,
        MathDelimiter::Dollar,
    ];

    fn pair(self) -> (&'static [u8], &'static [u8]) {
        match self {
            MathDelimiter::DoubleDollar => (b"$$", b"$$"),
            MathDelimiter::Bracket => (b"\\[", b"\\]"),
            MathDelimiter::Paren => (b"\\(", b"\\)"),
            MathDelimiter::Dollar => (b"$", b"$"),
        }
    }
}

/// A math segment located in the original document, delimiters included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MathSegment {
    pub delimiter: MathDelimiter,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MathDiagnostics {
    /// Openers of `$$`, `\[` or `\(` with no closer; left as plain text.
    pub unterminated: usize,
    /// Candidates dropped because they would cut through code, raw HTML or
    /// another segment.
    pub rejected: usize,
}

/// Document text with math segments replaced by placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectedDoc {
    text: String,
    segments: Vec<MathSegment>,
    diagnostics: MathDiagnostics,
}

impl ProtectedDoc {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Segments in document order; placeholder `k` stands for `segments()[k]`.
    pub fn segments(&self) -> &[MathSegment] {
        &self.segments
    }

    pub fn diagnostics(&self) -> MathDiagnostics {
        self.diagnostics
    }
}

pub(crate) fn placeholder(index: usize) -> String {
    format!("{PLACEHOLDER_START}{index}{PLACEHOLDER_END}")
}

/// Number of placeholders contained in `text`.
pub(crate) fn count_placeholders(text: &str) -> usize {
    let mut count = 0;
    let mut rest = text;
    while let Some(start) = rest.find(PLACEHOLDER_START) {
        let after = &rest[start + PLACEHOLDER_START.len_utf8()..];
        match after.find(PLACEHOLDER_END) {
            Some(end) if end > 0 && after[..end].bytes().all(|b| b.is_ascii_digit()) => {
                count += 1;
                rest = &after[end + PLACEHOLDER_END.len_utf8()..];
            }
            _ => rest = after,
        }
    }
    count
}

/// Finds math segments and substitutes placeholders for them.
pub fn protect_math(doc: &MarkdownDoc) -> ProtectedDoc {
    let src = doc.as_str();
    let bytes = src.as_bytes();
    let excluded = opaque_ranges(src);
    let mut diagnostics = MathDiagnostics::default();
    let mut claimed: Vec<MathSegment> = Vec::new();

    for delimiter in MathDelimiter::SCAN_ORDER {
        let found = scan_kind(bytes, delimiter, &excluded, &claimed, &mut diagnostics);
        claimed.extend(found);
    }
    claimed.sort_by_key(|s| s.range.start);

    let mut text = String::with_capacity(src.len());
    let mut cursor = 0;
    for (index, seg) in claimed.iter().enumerate() {
        push_sanitized(&mut text, &src[cursor..seg.range.start]);
        text.push_str(&placeholder(index));
        cursor = seg.range.end;
    }
    push_sanitized(&mut text, &src[cursor..]);

    ProtectedDoc {
        text,
        segments: claimed,
        diagnostics,
    }
}

// Sentinel characters already in the input would be mistaken for placeholders.
fn push_sanitized(out: &mut String, s: &str) {
    if s.contains([PLACEHOLDER_START, PLACEHOLDER_END]) {
        out.extend(s.chars().map(|c| {
            if c == PLACEHOLDER_START || c == PLACEHOLDER_END {
                char::REPLACEMENT_CHARACTER
            } else {
                c
            }
        }));
    } else {
        out.push_str(s);
    }
}

/// Byte ranges whose content the converter never renders as text.
fn opaque_ranges(src: &str) -> Vec<Range<usize>> {
    let parser = Parser::new_ext(src, parser_options()).into_offset_iter();
    let mut ranges = Vec::new();
    let mut iter = parser;
    for (event, range) in iter.by_ref() {
        match event {
            Event::Start(Tag::CodeBlock(_)) | Event::Start(Tag::HtmlBlock) => ranges.push(range),
            Event::Code(_) | Event::Html(_) | Event::InlineHtml(_) => ranges.push(range),
            _ => {}
        }
    }
    ranges.extend(iter.reference_definitions().iter().map(|(_, def)| def.span.clone()));
    ranges.sort_by_key(|r| r.start);
    ranges
}

fn is_escaped(bytes: &[u8], pos: usize) -> bool {
    let run = bytes[..pos].iter().rev().take_while(|&&b| b == b'\\').count();
    run % 2 == 1
}

fn inside(ranges: &[Range<usize>], pos: usize) -> Option<usize> {
    ranges.iter().find(|r| r.contains(&pos)).map(|r| r.end)
}

fn cuts_through(excluded: &[Range<usize>], span: &Range<usize>) -> bool {
    excluded.iter().any(|r| {
        let intersects = r.start < span.end && span.start < r.end;
        let contained = span.start <= r.start && r.end <= span.end;
        intersects && !contained
    })
}

fn intersects_any(segments: &[MathSegment], span: &Range<usize>) -> bool {
    segments
        .iter()
        .any(|s| s.range.start < span.end && span.start < s.range.end)
}

fn scan_kind(
    bytes: &[u8],
    delimiter: MathDelimiter,
    excluded: &[Range<usize>],
    claimed: &[MathSegment],
    diagnostics: &mut MathDiagnostics,
) -> Vec<MathSegment> {
    let (open, close) = delimiter.pair();
    let mut found: Vec<MathSegment> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if let Some(end) = inside(excluded, i) {
            i = end;
            continue;
        }
        if let Some(seg) = claimed.iter().chain(found.iter()).find(|s| s.range.contains(&i)) {
            i = seg.range.end;
            continue;
        }
        if !bytes[i..].starts_with(open) || is_escaped(bytes, i) {
            i += 1;
            continue;
        }
        let closing = match delimiter {
            MathDelimiter::Dollar => match inline_close(bytes, i) {
                Some(j) => j,
                None => {
                    i += 1;
                    continue;
                }
            },
            _ => match find_close(bytes, i + open.len(), close, excluded) {
                Some(j) => j,
                None => {
                    diagnostics.unterminated += 1;
                    i += open.len();
                    continue;
                }
            },
        };
        let span = i..closing + close.len();
        if cuts_through(excluded, &span) || intersects_any(claimed, &span) {
            diagnostics.rejected += 1;
            i += open.len();
            continue;
        }
        i = span.end;
        found.push(MathSegment { delimiter, range: span });
    }
    found
}

fn find_close(bytes: &[u8], from: usize, close: &[u8], excluded: &[Range<usize>]) -> Option<usize> {
    let mut j = from;
    while j + close.len() <= bytes.len() {
        if let Some(end) = inside(excluded, j) {
            if (j..end).any(|k| bytes[k] == b'\n' && blank_line_follows(bytes, k + 1)) {
                return None;
            }
            j = end;
            continue;
        }
        if bytes[j..].starts_with(close) && !is_escaped(bytes, j) {
            return Some(j);
        }
        if bytes[j] == b'\n' && blank_line_follows(bytes, j + 1) {
            return None;
        }
        j += 1;
    }
    None
}

// A segment never crosses a blank line: it would swallow the blocks in between.
fn blank_line_follows(bytes: &[u8], from: usize) -> bool {
    let rest = &bytes[from..];
    let ws = rest.iter().take_while(|&&b| b == b' ' || b == b'\t').count();
    rest.get(ws) == Some(&b'\n')
}

/// Position of the closing `$` for an inline segment opened at `open`.
fn inline_close(bytes: &[u8], open: usize) -> Option<usize> {
    if open > 0 && bytes[open - 1] == b'$' {
        return None;
    }
    let first = *bytes.get(open + 1)?;
    if first == b'$' || is_space(first) {
        return None;
    }
    let rel = bytes[open + 1..]
        .iter()
        .position(|&b| b == b'$' || b == b'\n')?;
    let j = open + 1 + rel;
    if bytes[j] != b'$' {
        return None;
    }
    let before = bytes[j - 1];
    if is_space(before) || before == b'\\' {
        return None;
    }
    match bytes.get(j + 1) {
        Some(b'$') => None,
        Some(b) if b.is_ascii_digit() => None,
        _ => Some(j),
    }
}

fn is_space(b: u8) -> bool {
    b.is_ascii_whitespace()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segments(s: &str) -> Vec<(MathDelimiter, String)> {
        let doc = MarkdownDoc::new(s);
        protect_math(&doc)
            .segments()
            .iter()
            .map(|seg| (seg.delimiter, s[seg.range.clone()].to_owned()))
            .collect()
    }

    #[test]
    fn bracket_display_math() {
        let p = protect_math(&MarkdownDoc::new("area: \\[ \\pi r^2 \\]"));
        assert_eq!(p.segments().len(), 1);
        assert_eq!(p.segments()[0].delimiter, MathDelimiter::Bracket);
        assert_eq!(p.text(), format!("area: {}", placeholder(0)));
    }

    #[test]
    fn empty_input() {
        let p = protect_math(&MarkdownDoc::new(""));
        assert_eq!(p.text(), "");
        assert!(p.segments().is_empty());
    }

    #[test]
    fn currency_is_not_math() {
        assert!(segments("price is $5 and $6").is_empty());
        assert!(segments("costs $5, or $10 in total").is_empty());
    }

    #[test]
    fn inline_dollar() {
        assert_eq!(
            segments("let $x^2$ be"),
            vec![(MathDelimiter::Dollar, "$x^2$".to_owned())]
        );
        assert!(segments("a $ x$ b").is_empty());
        assert!(segments("a $x $ b").is_empty());
        assert!(segments("a $x$5").is_empty());
    }

    #[test]
    fn scan_order_and_no_overlap() {
        let s = "$$a$$ and \\(b\\) and $c$";
        let got = segments(s);
        assert_eq!(got.len(), 3);
        assert_eq!(got[0], (MathDelimiter::DoubleDollar, "$$a$$".to_owned()));
        assert_eq!(got[1], (MathDelimiter::Paren, "\\(b\\)".to_owned()));
        assert_eq!(got[2], (MathDelimiter::Dollar, "$c$".to_owned()));
    }

    #[test]
    fn display_spans_lines() {
        let s = "before\n\n$$\n\\int_0^1 x\\,dx\n$$\n\nafter";
        assert_eq!(segments(s).len(), 1);
    }

    #[test]
    fn unterminated_is_plain_text() {
        let p = protect_math(&MarkdownDoc::new("open $$ never closed"));
        assert!(p.segments().is_empty());
        assert_eq!(p.diagnostics().unterminated, 1);
        let p = protect_math(&MarkdownDoc::new("open \\[ never closed"));
        assert_eq!(p.diagnostics().unterminated, 1);
        assert_eq!(p.text(), "open \\[ never closed");
    }

    #[test]
    fn escaped_delimiters() {
        assert!(segments("\\$x$ is not math").is_empty());
        assert!(segments("a \\\\[ b \\\\] c").is_empty());
    }

    #[test]
    fn code_is_opaque() {
        assert!(segments("`$x$` and\n\n```\n$$y$$\n```\n").is_empty());
        assert!(segments("    $$indented$$\n").is_empty());
    }

    #[test]
    fn preexisting_sentinels_are_neutralized() {
        let p = protect_math(&MarkdownDoc::new("\u{E000}0\u{E001}"));
        assert_eq!(count_placeholders(p.text()), 0);
    }

    #[test]
    fn crlf_normalized() {
        assert_eq!(MarkdownDoc::new("a\r\nb\rc").as_str(), "a\nb\nc");
    }
}
