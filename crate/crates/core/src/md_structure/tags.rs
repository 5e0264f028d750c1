//! Structural tag vocabulary and the token sequences compared by the scorers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of the published vocabulary. Bump together with `vocab/tags-*.txt`.
pub const VOCABULARY_VERSION: &str = "tags-v1";

/// The vocabulary file, one tag name per line, in declaration order.
pub const VOCABULARY_FILE: &str = include_str!("../../vocab/tags-v1.txt");

macro_rules! tag_names {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Lowercase element name of a structural token.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum TagName {
            $($variant),+
        }

        impl TagName {
            /// Every name, in vocabulary-file order.
            pub const ALL: &'static [TagName] = &[$(TagName::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(TagName::$variant => $name),+
                }
            }

            /// Maps an element name to the vocabulary. Names outside it become [`TagName::Other`].
            pub fn from_name(name: &str) -> TagName {
                match name.to_ascii_lowercase().as_str() {
                    $($name => TagName::$variant,)+
                    _ => TagName::Other,
                }
            }
        }
    };
}

tag_names! {
    H1 => "h1",
    H2 => "h2",
    H3 => "h3",
    H4 => "h4",
    H5 => "h5",
    H6 => "h6",
    P => "p",
    Blockquote => "blockquote",
    Ul => "ul",
    Ol => "ol",
    Li => "li",
    Pre => "pre",
    Code => "code",
    Em => "em",
    Strong => "strong",
    Del => "del",
    A => "a",
    Img => "img",
    Hr => "hr",
    Br => "br",
    Table => "table",
    Thead => "thead",
    Tbody => "tbody",
    Tr => "tr",
    Th => "th",
    Td => "td",
    Input => "input",
    Math => "math",
    Other => "other",
}

impl TagName {
    /// Void elements are only ever emitted as [`TagKind::SelfClosing`].
    pub fn is_void(self) -> bool {
        matches!(self, TagName::Hr | TagName::Img | TagName::Br | TagName::Input)
    }

    pub fn heading(level: u8) -> TagName {
        match level {
            1 => TagName::H1,
            2 => TagName::H2,
            3 => TagName::H3,
            4 => TagName::H4,
            5 => TagName::H5,
            _ => TagName::H6,
        }
    }
}

impl fmt::Display for TagName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TagKind {
    Open,
    Close,
    SelfClosing,
}

impl TagKind {
    fn prefix(self) -> char {
        match self {
            TagKind::Open => '+',
            TagKind::Close => '-',
            TagKind::SelfClosing => '=',
        }
    }
}

/// One structural symbol. Two tokens are equal iff kind and name match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagToken {
    pub kind: TagKind,
    pub name: TagName,
}

impl TagToken {
    pub const fn open(name: TagName) -> Self {
        Self { kind: TagKind::Open, name }
    }

    pub const fn close(name: TagName) -> Self {
        Self { kind: TagKind::Close, name }
    }

    pub const fn void(name: TagName) -> Self {
        Self { kind: TagKind::SelfClosing, name }
    }

    /// HTML-like form used by the character-level comparison mode: `<h1>`, `</h1>`, `<hr/>`.
    pub fn to_html(self) -> String {
        match self.kind {
            TagKind::Open => format!("<{}>", self.name),
            TagKind::Close => format!("</{}>", self.name),
            TagKind::SelfClosing => format!("<{}/>", self.name),
        }
    }
}

impl fmt::Display for TagToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagParseError {
    #[error("line {line}: expected a `+`, `-` or `=` prefix, got {text:?}")]
    BadPrefix { line: usize, text: String },
}

impl FromStr for TagToken {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('+') => TagKind::Open,
            Some('-') => TagKind::Close,
            Some('=') => TagKind::SelfClosing,
            _ => {
                return Err(TagParseError::BadPrefix {
                    line: 0,
                    text: s.to_owned(),
                })
            }
        };
        Ok(TagToken {
            kind,
            name: TagName::from_name(chars.as_str()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("token {index} closes `{found}` but `{expected}` is open")]
    Mismatched {
        index: usize,
        expected: TagName,
        found: TagName,
    },
    #[error("token {index} closes `{found}` with nothing open")]
    UnexpectedClose { index: usize, found: TagName },
    #[error("`{0}` is left open at end of sequence")]
    Unclosed(TagName),
    #[error("token {index}: `{name}` has the wrong kind for its element")]
    WrongKind { index: usize, name: TagName },
    #[error("token {index}: math elements may not contain other tokens")]
    NestedInMath { index: usize },
}

/// Ordered structural tokens of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSequence {
    tokens: Vec<TagToken>,
}

impl TagSequence {
    /// Builds a sequence, checking that it is balanced and well nested.
    pub fn new(tokens: Vec<TagToken>) -> Result<Self, BalanceError> {
        check_balance(&tokens)?;
        Ok(Self { tokens })
    }

    /// Wraps tokens without the balance check. Scorers accept any symbol string.
    pub fn from_tokens_unchecked(tokens: Vec<TagToken>) -> Self {
        Self { tokens }
    }

    pub fn tokens(&self) -> &[TagToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_balanced(&self) -> bool {
        check_balance(&self.tokens).is_ok()
    }

    pub fn count_open(&self, name: TagName) -> usize {
        self.tokens
            .iter()
            .filter(|t| t.kind == TagKind::Open && t.name == name)
            .count()
    }

    /// Debug stream: one token per line, `+name` / `-name` / `=name`.
    pub fn to_stream(&self) -> String {
        let mut out = String::with_capacity(self.tokens.len() * 5);
        for tok in &self.tokens {
            out.push_str(&tok.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_stream(stream: &str) -> Result<Self, TagParseError> {
        let mut tokens = Vec::new();
        for (i, line) in stream.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let tok = line.parse::<TagToken>().map_err(|e| match e {
                TagParseError::BadPrefix { text, .. } => TagParseError::BadPrefix { line: i + 1, text },
            })?;
            tokens.push(tok);
        }
        Ok(Self { tokens })
    }

    /// Character string form: concatenated `<name>`, `</name>`, `<name/>`.
    pub fn to_html_string(&self) -> String {
        self.tokens.iter().map(|t| t.to_html()).collect()
    }
}

impl From<TagSequence> for Vec<TagToken> {
    fn from(seq: TagSequence) -> Self {
        seq.tokens
    }
}

fn check_balance(tokens: &[TagToken]) -> Result<(), BalanceError> {
    let mut stack: Vec<TagName> = Vec::new();
    for (index, tok) in tokens.iter().enumerate() {
        if stack.last() == Some(&TagName::Math)
            && !(tok.kind == TagKind::Close && tok.name == TagName::Math)
        {
            return Err(BalanceError::NestedInMath { index });
        }
        match tok.kind {
            TagKind::SelfClosing => {
                if !tok.name.is_void() {
                    return Err(BalanceError::WrongKind { index, name: tok.name });
                }
            }
            TagKind::Open => {
                if tok.name.is_void() {
                    return Err(BalanceError::WrongKind { index, name: tok.name });
                }
                stack.push(tok.name);
            }
            TagKind::Close => match stack.pop() {
                Some(open) if open == tok.name => {}
                Some(open) => {
                    return Err(BalanceError::Mismatched {
                        index,
                        expected: open,
                        found: tok.name,
                    })
                }
                None => return Err(BalanceError::UnexpectedClose { index, found: tok.name }),
            },
        }
    }
    match stack.pop() {
        Some(open) => Err(BalanceError::Unclosed(open)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_file_matches_enum() {
        let names: Vec<&str> = VOCABULARY_FILE.lines().collect();
        let expected: Vec<&str> = TagName::ALL.iter().map(|n| n.as_str()).collect();
        assert_eq!(names, expected);
    }

    #[test]
    fn unknown_names_map_to_other() {
        assert_eq!(TagName::from_name("div"), TagName::Other);
        assert_eq!(TagName::from_name("H2"), TagName::H2);
    }

    #[test]
    fn stream_round_trip() {
        let seq = TagSequence::new(vec![
            TagToken::open(TagName::H1),
            TagToken::close(TagName::H1),
            TagToken::void(TagName::Hr),
        ])
        .unwrap();
        assert_eq!(seq.to_stream(), "+h1\n-h1\n=hr\n");
        assert_eq!(TagSequence::from_stream(&seq.to_stream()).unwrap(), seq);
        assert_eq!(seq.to_html_string(), "<h1></h1><hr/>");
    }

    #[test]
    fn balance_errors() {
        use TagName::*;
        let bad = [
            vec![TagToken::open(P)],
            vec![TagToken::close(P)],
            vec![TagToken::open(P), TagToken::close(Li)],
            vec![TagToken::open(Hr), TagToken::close(Hr)],
            vec![TagToken::void(P)],
            vec![TagToken::open(Math), TagToken::open(P), TagToken::close(P), TagToken::close(Math)],
        ];
        for tokens in bad {
            assert!(TagSequence::new(tokens).is_err());
        }
    }

    #[test]
    fn bad_stream_prefix_reports_line() {
        let err = TagSequence::from_stream("+p\nh1\n").unwrap_err();
        assert_eq!(
            err,
            TagParseError::BadPrefix {
                line: 2,
                text: "h1".into()
            }
        );
    }
}
