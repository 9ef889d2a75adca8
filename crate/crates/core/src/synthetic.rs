//! Seeded generators of hypergraphs with planted community structure, for
//! benchmarks and end-to-end checks.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hypergraph::{build_hypergraph, Hypergraph, Hyperlink};

/// Nodes are split into `groups` blocks of `group_size`. Most hyperlinks are
/// drawn inside one block, so they close many short loops with their
/// neighbours; `background` hyperlinks are spread uniformly over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub groups: usize,
    pub group_size: usize,
    pub hyperlinks_per_group: usize,
    pub background: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    /// Extra hyperlinks of cardinality `wide_cardinality` spread over all
    /// nodes; they add many node pairs at once without adding overlap
    /// structure between hyperlinks.
    pub wide: usize,
    pub wide_cardinality: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            groups: 8,
            group_size: 8,
            hyperlinks_per_group: 14,
            background: 20,
            min_cardinality: 2,
            max_cardinality: 4,
            wide: 0,
            wide_cardinality: 8,
            seed: 0,
        }
    }
}

pub fn node_label(i: usize) -> String {
    format!("n{i:04}")
}

pub fn planted_hypergraph(cfg: &PlantedConfig) -> Hypergraph {
    assert!(cfg.min_cardinality >= 2 && cfg.max_cardinality >= cfg.min_cardinality);
    assert!(cfg.group_size >= cfg.max_cardinality);
    let n = cfg.groups * cfg.group_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut sets: Vec<Vec<String>> = Vec::new();

    let mut draw = |rng: &mut ChaCha8Rng,
                    pool: &[usize],
                    sizes: (usize, usize),
                    target: &mut Vec<Vec<String>>| {
        for _ in 0..1000 {
            let k = rng.random_range(sizes.0..=sizes.1);
            let mut pick: Vec<usize> = index::sample(rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            pick.sort_unstable();
            if seen.insert(pick.clone()) {
                target.push(pick.into_iter().map(node_label).collect());
                return;
            }
        }
    };

    for g in 0..cfg.groups {
        let members: Vec<usize> = (g * cfg.group_size..(g + 1) * cfg.group_size).collect();
        for _ in 0..cfg.hyperlinks_per_group {
            draw(
                &mut rng,
                &members,
                (cfg.min_cardinality, cfg.max_cardinality),
                &mut sets,
            );
        }
    }
    let everyone: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.background {
        draw(
            &mut rng,
            &everyone,
            (cfg.min_cardinality, cfg.max_cardinality),
            &mut sets,
        );
    }
    for _ in 0..cfg.wide {
        draw(
            &mut rng,
            &everyone,
            (cfg.wide_cardinality, cfg.wide_cardinality),
            &mut sets,
        );
    }
    let labels: Vec<String> = (0..n).map(node_label).collect();
    build_hypergraph(Some(&labels), &sets).expect("generator yields valid hyperlinks")
}

/// Group index of each node of a [`planted_hypergraph`].
pub fn group_of(cfg: &PlantedConfig, e: &Hyperlink) -> Option<usize> {
    let g = e.nodes()[0] / cfg.group_size;
    e.nodes()
        .iter()
        .all(|&i| i / cfg.group_size == g)
        .then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_seeded() {
        let cfg = PlantedConfig::default();
        let a = planted_hypergraph(&cfg);
        assert_eq!(a, planted_hypergraph(&cfg));
        assert_eq!(a.n(), 64);
        assert!(a.m() >= 100);
        let within = a
            .hyperlinks()
            .iter()
            .filter(|e| group_of(&cfg, e).is_some())
            .count();
        assert!(within >= 8 * 14);
        let other = planted_hypergraph(&PlantedConfig { seed: 1, ..cfg });
        assert_ne!(a, other);
    }
}
