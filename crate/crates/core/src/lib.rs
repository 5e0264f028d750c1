//! Structural Markdown evaluation.
//!
//! Responses are reduced to their HTML tag structure ([`md_structure`]) and
//! compared with a rewritten reference by normalized edit distance or a
//! decayed rule-based count ([`scoring`]). Human pairwise votes become Elo
//! ratings ([`ratings`]), and [`alignment`] measures how well a scorer agrees
//! with them. [`corpus`] defines the on-disk records shared by every stage.

pub mod alignment;
pub mod corpus;
pub mod md_structure;
pub mod par;
pub mod ratings;
pub mod scoring;

pub use md_structure::{htmlify, protect_math, MarkdownDoc, TagKind, TagName, TagSequence, TagToken};
pub use par::Parallelism;
pub use scoring::{drule_score, edit_distance, ma_score, CompareMode, DRuleConfig, MaScore};
