mod support;

use mdaware_core::alignment::{
    correlations, kendall_tau_b, pearson, record_accuracy, spearman, AlignmentError, ScoreLookup,
};
use mdaware_core::ratings::{Outcome, VoteRecord};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::gen::tied_vector;
use support::oracles::{naive_kendall_b, naive_pearson, naive_spearman};

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|&x| x != v[0])
}

#[test]
fn match_brute_force_on_tied_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 500 {
        let n = rng.random_range(3..=12);
        let x = tied_vector(&mut rng, n);
        let y = tied_vector(&mut rng, n);
        if !non_constant(&x) || !non_constant(&y) {
            assert!(matches!(correlations(&x, &y), Err(AlignmentError::ZeroVariance(_))));
            continue;
        }
        let c = correlations(&x, &y).unwrap();
        assert!((c.pearson - naive_pearson(&x, &y)).abs() <= 1e-12, "{x:?} {y:?}");
        assert!((c.spearman - naive_spearman(&x, &y)).abs() <= 1e-12, "{x:?} {y:?}");
        assert!((c.kendall - naive_kendall_b(&x, &y)).abs() <= 1e-12, "{x:?} {y:?}");
        checked += 1;
    }
}

#[test]
fn hand_examples() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 3.0, 2.0, 4.0];
    assert!((kendall_tau_b(&x, &y).unwrap() - 4.0 / 6.0).abs() < 1e-12);
    assert!((spearman(&x, &y).unwrap() - 0.8).abs() < 1e-12);
    let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let c = correlations(&x, &lin).unwrap();
    assert_eq!((c.spearman, c.pearson, c.kendall), (1.0, 1.0, 1.0));
    let rev = [4.0, 3.0, 2.0, 1.0];
    assert_eq!(spearman(&x, &rev).unwrap(), -1.0);
    assert_eq!(kendall_tau_b(&x, &rev).unwrap(), -1.0);
    assert!(pearson(&[1.0, 1.0, 1.0], &x[..3]).is_err());
}

proptest! {
    #[test]
    fn invariant_under_monotone_maps(
        raw in prop::collection::vec((0..20u8, 0..20u8), 3..15), a in 0.1..10.0f64, b in -10.0..10.0f64
    ) {
        let x: Vec<f64> = raw.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = raw.iter().map(|p| p.1 as f64).collect();
        prop_assume!(non_constant(&x) && non_constant(&y));
        let base = correlations(&x, &y).unwrap();
        let fx: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let gy: Vec<f64> = y.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let affine = correlations(&fx, &y).unwrap();
        prop_assert!((affine.pearson - base.pearson).abs() < 1e-9);
        let mono = correlations(&fx, &gy).unwrap();
        prop_assert!((mono.spearman - base.spearman).abs() < 1e-12);
        prop_assert!((mono.kendall - base.kendall).abs() < 1e-12);
        let same = correlations(&x, &x).unwrap();
        prop_assert!((same.pearson - 1.0).abs() < 1e-12 && same.spearman == 1.0 && same.kendall == 1.0);
    }

    #[test]
    fn tie_votes_do_not_move_tie_free_accuracy(extra in 0..20usize) {
        let (votes, scores) = scripted_votes();
        let base = record_accuracy(&votes, &scores, false, 0.0).unwrap();
        let mut more = votes.clone();
        for _ in 0..extra {
            more.push(VoteRecord::new("t1", "a", "b", Outcome::T));
        }
        let with = record_accuracy(&more, &scores, false, 0.0).unwrap();
        prop_assert_eq!(base.accuracy, with.accuracy);
        prop_assert_eq!(with.skipped_ties, base.skipped_ties + extra);
    }
}

fn scripted_votes() -> (Vec<VoteRecord>, ScoreLookup) {
    let mut scores = ScoreLookup::new();
    for (t, m, s) in [
        ("t1", "a", 0.9), ("t1", "b", 0.4), ("t1", "c", 0.4),
        ("t2", "a", 0.2), ("t2", "b", 0.7), ("t2", "c", 0.7),
    ] {
        scores.insert((t.into(), m.into()), s);
    }
    use Outcome::*;
    let votes = [
        ("t1", "a", "b", W), // right
        ("t1", "b", "a", L), // right
        ("t1", "a", "c", L), // wrong
        ("t1", "b", "c", T), // tie, equal scores
        ("t2", "a", "b", L), // right
        ("t2", "b", "a", L), // wrong
        ("t2", "b", "c", W), // wrong, equal scores
        ("t2", "c", "a", W), // right
        ("t1", "c", "a", T), // tie, unequal scores
        ("t2", "a", "c", W), // wrong
    ]
    .iter()
    .map(|&(t, i, j, o)| VoteRecord::new(t, i, j, o))
    .collect();
    (votes, scores)
}

#[test]
fn scripted_accuracy_matches_hand_count() {
    let (votes, scores) = scripted_votes();
    let no_ties = record_accuracy(&votes, &scores, false, 0.0).unwrap();
    assert_eq!((no_ties.correct, no_ties.considered, no_ties.skipped_ties), (4, 8, 2));
    assert_eq!(no_ties.accuracy, 0.5);
    let ties = record_accuracy(&votes, &scores, true, 0.0).unwrap();
    assert_eq!((ties.correct, ties.considered, ties.skipped_ties), (5, 10, 0));
    // every gap is at most 0.5, so only the two tie votes are right
    let wide = record_accuracy(&votes, &scores, true, 0.6).unwrap();
    assert_eq!((wide.correct, wide.considered), (2, 10));
}

#[test]
fn missing_score_names_the_pair() {
    let (mut votes, scores) = scripted_votes();
    votes.push(VoteRecord::new("t9", "a", "b", Outcome::W));
    assert_eq!(
        record_accuracy(&votes, &scores, false, 0.0).unwrap_err(),
        AlignmentError::MissingScore { task_id: "t9".into(), model: "a".into() }
    );
}
