//! Markdown to structural tag sequence ("HTMLifying").
//!
//! The document is parsed as CommonMark with the table, strikethrough and
//! task-list extensions. Text, attributes and raw HTML are discarded; only
//! element boundaries survive, in document order. Plain paragraphs still
//! produce a `p` pair.

mod math;
mod tags;

pub use math::{protect_math, MarkdownDoc, MathDelimiter, MathDiagnostics, MathSegment, ProtectedDoc};
pub use tags::{
    BalanceError, TagKind, TagName, TagParseError, TagSequence, TagToken, VOCABULARY_FILE,
    VOCABULARY_VERSION,
};

use pulldown_cmark::{Event, HeadingLevel, Options, Parser, Tag};

use crate::par::Parallelism;

pub(crate) fn parser_options() -> Options {
    Options::ENABLE_TABLES | Options::ENABLE_STRIKETHROUGH | Options::ENABLE_TASKLISTS
}

/// Result of HTMLifying one document, with the math side table kept for audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Htmlified {
    pub tags: TagSequence,
    pub math_segments: Vec<MathSegment>,
    pub math_diagnostics: MathDiagnostics,
}

/// Converts a Markdown document into its structural tag sequence.
pub fn htmlify(doc: &MarkdownDoc) -> TagSequence {
    htmlify_detailed(doc).tags
}

pub fn htmlify_detailed(doc: &MarkdownDoc) -> Htmlified {
    let protected = protect_math(doc);
    let tags = htmlify_protected(&protected);
    Htmlified {
        tags,
        math_segments: protected.segments().to_vec(),
        math_diagnostics: protected.diagnostics(),
    }
}

/// HTMLifies many documents; output order follows input order.
pub fn htmlify_batch(docs: &[MarkdownDoc], mode: Parallelism) -> Vec<TagSequence> {
    mode.map(docs, htmlify)
}

// Closing tokens owed for each open parser container, innermost last.
enum Frame {
    Close(Vec<TagName>),
    Image,
    Table { body_open: bool },
    TableHead,
    Row,
    Nothing,
}

/// HTMLifies text that already went through [`protect_math`].
pub fn htmlify_protected(doc: &ProtectedDoc) -> TagSequence {
    let mut out: Vec<TagToken> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut in_head = false;
    let mut in_image = false;
    // math placeholders found inside an image's alt text, emitted after the img
    let mut alt_math = 0usize;
    let mut text = String::new();

    for event in Parser::new_ext(doc.text(), parser_options()) {
        if !matches!(event, Event::Text(_)) {
            flush_text(&mut text, in_image, &mut alt_math, &mut out);
        }
        match event {
            Event::Text(t) => text.push_str(&t),
            Event::Start(tag) => {
                if in_image {
                    stack.push(Frame::Nothing);
                    continue;
                }
                let frame = match tag {
                    Tag::Paragraph => open(&mut out, &[TagName::P]),
                    Tag::Heading { level, .. } => open(&mut out, &[heading_name(level)]),
                    Tag::BlockQuote(_) => open(&mut out, &[TagName::Blockquote]),
                    Tag::CodeBlock(_) => open(&mut out, &[TagName::Pre, TagName::Code]),
                    Tag::HtmlBlock => Frame::Nothing,
                    Tag::List(Some(_)) => open(&mut out, &[TagName::Ol]),
                    Tag::List(None) => open(&mut out, &[TagName::Ul]),
                    Tag::Item => open(&mut out, &[TagName::Li]),
                    Tag::Table(_) => {
                        out.push(TagToken::open(TagName::Table));
                        Frame::Table { body_open: false }
                    }
                    Tag::TableHead => {
                        in_head = true;
                        out.push(TagToken::open(TagName::Thead));
                        out.push(TagToken::open(TagName::Tr));
                        Frame::TableHead
                    }
                    Tag::TableRow => {
                        if let Some(Frame::Table { body_open }) = stack.last_mut() {
                            if !*body_open {
                                *body_open = true;
                                out.push(TagToken::open(TagName::Tbody));
                            }
                        }
                        out.push(TagToken::open(TagName::Tr));
                        Frame::Row
                    }
                    Tag::TableCell => {
                        let name = if in_head { TagName::Th } else { TagName::Td };
                        open(&mut out, &[name])
                    }
                    Tag::Emphasis => open(&mut out, &[TagName::Em]),
                    Tag::Strong => open(&mut out, &[TagName::Strong]),
                    Tag::Strikethrough => open(&mut out, &[TagName::Del]),
                    Tag::Link { dest_url, title, .. } => {
                        let frame = open(&mut out, &[TagName::A]);
                        push_math(&mut out, math::count_placeholders(&dest_url));
                        push_math(&mut out, math::count_placeholders(&title));
                        frame
                    }
                    Tag::Image { dest_url, title, .. } => {
                        in_image = true;
                        alt_math = math::count_placeholders(&dest_url)
                            + math::count_placeholders(&title);
                        Frame::Image
                    }
                    _ => open(&mut out, &[TagName::Other]),
                };
                stack.push(frame);
            }
            Event::End(_) => match stack.pop() {
                Some(Frame::Close(names)) => {
                    out.extend(names.into_iter().rev().map(TagToken::close));
                }
                Some(Frame::Image) => {
                    in_image = false;
                    out.push(TagToken::void(TagName::Img));
                    push_math(&mut out, std::mem::take(&mut alt_math));
                }
                Some(Frame::Nothing) | None => {}
                Some(Frame::TableHead) => {
                    in_head = false;
                    out.push(TagToken::close(TagName::Tr));
                    out.push(TagToken::close(TagName::Thead));
                }
                Some(Frame::Row) => out.push(TagToken::close(TagName::Tr)),
                Some(Frame::Table { body_open }) => {
                    if body_open {
                        out.push(TagToken::close(TagName::Tbody));
                    }
                    out.push(TagToken::close(TagName::Table));
                }
            },
            // math removal can shift backticks, so a placeholder may land in a code span
            Event::Code(code) => {
                let n = math::count_placeholders(&code);
                if in_image {
                    alt_math += n;
                } else {
                    out.push(TagToken::open(TagName::Code));
                    push_math(&mut out, n);
                    out.push(TagToken::close(TagName::Code));
                }
            }
            Event::HardBreak => {
                if !in_image {
                    out.push(TagToken::void(TagName::Br));
                }
            }
            Event::Rule => out.push(TagToken::void(TagName::Hr)),
            Event::TaskListMarker(_) => out.push(TagToken::void(TagName::Input)),
            Event::SoftBreak => {}
            Event::Html(html) | Event::InlineHtml(html) => {
                let n = math::count_placeholders(&html);
                if in_image {
                    alt_math += n;
                } else {
                    push_math(&mut out, n);
                }
            }
            Event::FootnoteReference(_) | Event::InlineMath(_) | Event::DisplayMath(_) => {
                if !in_image {
                    out.push(TagToken::open(TagName::Other));
                    out.push(TagToken::close(TagName::Other));
                }
            }
        }
    }
    flush_text(&mut text, in_image, &mut alt_math, &mut out);
    TagSequence::from_tokens_unchecked(out)
}

fn open(out: &mut Vec<TagToken>, names: &[TagName]) -> Frame {
    out.extend(names.iter().copied().map(TagToken::open));
    Frame::Close(names.to_vec())
}

fn push_math(out: &mut Vec<TagToken>, n: usize) {
    for _ in 0..n {
        out.push(TagToken::open(TagName::Math));
        out.push(TagToken::close(TagName::Math));
    }
}

fn flush_text(text: &mut String, in_image: bool, alt_math: &mut usize, out: &mut Vec<TagToken>) {
    if text.is_empty() {
        return;
    }
    let n = math::count_placeholders(text);
    if in_image {
        *alt_math += n;
    } else {
        push_math(out, n);
    }
    text.clear();
}

fn heading_name(level: HeadingLevel) -> TagName {
    TagName::heading(level as u8)
}
