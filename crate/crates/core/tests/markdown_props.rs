use mdaware_core::md_structure::{htmlify, htmlify_batch, htmlify_detailed, protect_math, MarkdownDoc, TagName};
use mdaware_core::Parallelism;
use proptest::prelude::*;

// Markdown-ish fragments; random concatenations exercise block and inline interplay.
const PIECES: [&str; 24] = [
    "# ", "## ", "- ", "1. ", "> ", "```\n", "**", "*", "~~", "`", "$", "$$", "\\(", "\\)", "\\[", "\\]",
    "| a | b |\n|---|---|\n", "word", " ", "\n", "\n\n", "x^2", "<b>", "[l](u)",
];

fn doc_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(0..PIECES.len(), 0..40).prop_map(|ix| ix.into_iter().map(|i| PIECES[i]).collect())
}

fn any_text() -> impl Strategy<Value = String> {
    prop_oneof![doc_strategy(), any::<String>()]
}

const TEMPLATES: [&str; 4] = [
    "# {a}\n\n{b} **{c}** end\n\n- {a}\n- {b}\n",
    "## {a}\n\n> {b}\n\n1. {c}\n2. *{a}*\n",
    "| {a} | {b} |\n|---|---|\n| {c} | {a} |\n",
    "{a}\n\n```\n{b}\n```\n\n~~{c}~~\n",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn balanced_and_deterministic(text in any_text()) {
        let doc = MarkdownDoc::new(text);
        let seq = htmlify(&doc);
        prop_assert!(seq.is_balanced(), "{:?}", seq);
        prop_assert_eq!(htmlify(&doc), seq);
    }

    #[test]
    fn math_atomicity(text in any_text()) {
        let doc = MarkdownDoc::new(text);
        let found = protect_math(&doc).segments().len();
        let d = htmlify_detailed(&doc);
        prop_assert_eq!(d.tags.count_open(TagName::Math), found);
    }

    #[test]
    fn text_invisibility(t in 0..TEMPLATES.len(), words in prop::collection::vec("[a-zA-Z]{1,8}|[一-龥]{1,4}", 6)) {
        let fill = |a: &str, b: &str, c: &str| TEMPLATES[t].replace("{a}", a).replace("{b}", b).replace("{c}", c);
        let one = MarkdownDoc::new(fill(&words[0], &words[1], &words[2]));
        let two = MarkdownDoc::new(fill(&words[3], &words[4], &words[5]));
        prop_assert_eq!(htmlify(&one), htmlify(&two));
    }

    #[test]
    fn concatenation_monotone(a in doc_strategy(), b in doc_strategy()) {
        let first = htmlify(&MarkdownDoc::new(a.clone())).len();
        let both = htmlify(&MarkdownDoc::new(format!("{a}\n\n{b}"))).len();
        prop_assert!(both >= first, "{} < {}", both, first);
    }
}

#[test]
fn spec_examples() {
    let stream = |s: &str| htmlify(&MarkdownDoc::from(s)).to_stream();
    assert_eq!(stream("# Title"), "+h1\n-h1\n");
    assert_eq!(stream("hello"), "+p\n-p\n");
    assert_eq!(stream("- a\n- b"), "+ul\n+li\n-li\n+li\n-li\n-ul\n");
    assert_eq!(protect_math(&MarkdownDoc::from("area: \\[ \\pi r^2 \\]")).segments().len(), 1);
    assert_eq!(protect_math(&MarkdownDoc::from("")).segments().len(), 0);
    assert_eq!(protect_math(&MarkdownDoc::from("price is $5 and $6")).segments().len(), 0);
}

#[test]
fn batch_modes_agree() {
    let docs: Vec<MarkdownDoc> = (0..200)
        .map(|i| MarkdownDoc::new(format!("# T{i}\n\n{}\n\n$x_{i}$", "- item\n".repeat(i % 7))))
        .collect();
    assert_eq!(
        htmlify_batch(&docs, Parallelism::Sequential),
        htmlify_batch(&docs, Parallelism::Parallel)
    );
}
