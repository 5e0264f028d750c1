//! Seeded generators for random inputs.
#![allow(dead_code)]

use mdaware_core::md_structure::{TagName, TagSequence, TagToken};
use rand::Rng;

const NAMES: [TagName; 7] = [
    TagName::H1,
    TagName::P,
    TagName::Ul,
    TagName::Li,
    TagName::Strong,
    TagName::Code,
    TagName::Math,
];

/// A balanced, well-nested sequence of at most `max_len` tokens.
pub fn balanced_sequence(rng: &mut impl Rng, max_len: usize) -> TagSequence {
    let target = rng.random_range(0..=max_len);
    let mut out = Vec::new();
    let mut open: Vec<TagName> = Vec::new();
    while out.len() + open.len() < target {
        let room = target - out.len() - open.len();
        let choice = rng.random_range(0..10);
        if choice < 3 && !open.is_empty() {
            out.push(TagToken::close(open.pop().unwrap()));
        } else if choice < 4 || room < 2 {
            out.push(TagToken::void(TagName::Hr));
        } else {
            let name = NAMES[rng.random_range(0..NAMES.len())];
            out.push(TagToken::open(name));
            if name == TagName::Math {
                // math never nests
                out.push(TagToken::close(name));
            } else {
                open.push(name);
            }
        }
    }
    while let Some(name) = open.pop() {
        out.push(TagToken::close(name));
    }
    TagSequence::new(out).expect("generator emits balanced sequences")
}

/// Values drawn from a small integer grid so ties are common.
pub fn tied_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..5) as f64).collect()
}
