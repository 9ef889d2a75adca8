#![allow(dead_code)]

use hyperloop::{build_hypergraph, Hypergraph};
use proptest::prelude::*;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn label(i: usize) -> String {
    format!("v{i}")
}

pub fn from_sets(n: usize, sets: &[Vec<usize>]) -> Hypergraph {
    let labels: Vec<String> = (0..n).map(label).collect();
    let sets: Vec<Vec<String>> = sets
        .iter()
        .map(|s| s.iter().map(|&i| label(i)).collect())
        .collect();
    build_hypergraph(Some(&labels), &sets).unwrap()
}

pub fn triangle() -> Hypergraph {
    from_sets(3, &[vec![0, 1], vec![0, 2], vec![1, 2]])
}

pub fn single_triple() -> Hypergraph {
    from_sets(3, &[vec![0, 1, 2]])
}

/// Up to `max_m` distinct hyperlinks of cardinality `2..=max_card` over
/// `n` nodes, dropping repeats.
pub fn random_sets(rng: &mut impl Rng, n: usize, max_m: usize, max_card: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for _ in 0..rng.random_range(0..=max_m) {
        let k = rng.random_range(2..=max_card.min(n));
        let mut s = index::sample(rng, n, k).into_vec();
        s.sort_unstable();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

pub fn random_hypergraph(seed: u64, max_n: usize, max_m: usize, max_card: usize) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let sets = random_sets(&mut rng, n, max_m, max_card);
    from_sets(n, &sets)
}

/// Small hypergraphs: `n ≤ max_n`, `m ≤ max_m`, cardinalities `2..=4`.
pub fn small_hypergraph(max_n: usize, max_m: usize) -> impl Strategy<Value = Hypergraph> {
    (2..=max_n).prop_flat_map(move |n| {
        let set = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(4));
        proptest::collection::vec(set, 0..=max_m).prop_map(move |mut sets| {
            let mut seen = Vec::new();
            sets.retain(|s| {
                let fresh = !seen.contains(s);
                seen.push(s.clone());
                fresh
            });
            from_sets(n, &sets)
        })
    })
}
