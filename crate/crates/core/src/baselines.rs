//! Pairwise baselines lifted to hyperlinks: a candidate's score is the mean
//! of the pairwise score over all node pairs it contains.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Hyperlink};
use crate::metrics::auc;
use crate::model::stratified_folds;
use crate::sparse::{CsrMatrix, DenseMatrix};
use crate::spectrum::Label;

/// How a node pair's common-neighbour score is read off the adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CnVariant {
    /// Number of nodes adjacent to both, on the binarised adjacency.
    #[default]
    Binary,
    /// `(A²)_ij`, i.e. 2-walks counted with multiplicity.
    WalkCount,
}

/// Common-neighbour scorer for a fixed graph.
#[derive(Debug, Clone)]
pub struct CommonNeighbors {
    adjacency: CsrMatrix,
    variant: CnVariant,
}

impl CommonNeighbors {
    pub fn new(g: &Hypergraph, variant: CnVariant) -> Self {
        Self {
            adjacency: g.adjacency().0,
            variant,
        }
    }

    fn pair(&self, i: usize, j: usize) -> f64 {
        // merge the two sorted neighbour rows
        let mut a = self.adjacency.row(i).peekable();
        let mut b = self.adjacency.row(j).peekable();
        let mut total = 0.0;
        while let (Some(&(ka, va)), Some(&(kb, vb))) = (a.peek(), b.peek()) {
            match ka.cmp(&kb) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    total += match self.variant {
                        CnVariant::Binary => 1.0,
                        CnVariant::WalkCount => va * vb,
                    };
                    a.next();
                    b.next();
                }
            }
        }
        total
    }

    pub fn score(&self, e: &Hyperlink) -> Result<f64> {
        check_range(e, self.adjacency.rows())?;
        Ok(mean_over_pairs(e, |i, j| self.pair(i, j)))
    }
}

fn check_range(e: &Hyperlink, n: usize) -> Result<()> {
    match e.nodes().last() {
        Some(&max) if max >= n => Err(Error::NodeOutOfRange { index: max, n }),
        _ => Ok(()),
    }
}

fn mean_over_pairs(e: &Hyperlink, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, j) in e.pairs() {
        sum += f(i, j);
        count += 1;
    }
    sum / count as f64
}

/// Generalised common neighbours on the binarised adjacency.
pub fn cn_score(g: &Hypergraph, e: &Hyperlink) -> Result<f64> {
    CommonNeighbors::new(g, CnVariant::Binary).score(e)
}

/// Largest eigenvalue of the (nonnegative, symmetric) adjacency.
pub fn spectral_radius(g: &Hypergraph) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let a = g.adjacency();
    if a.nnz() == 0 {
        return 0.0;
    }
    let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    SymmetricEigen::new(dense)
        .eigenvalues
        .iter()
        .fold(0.0, |acc: f64, &l| acc.max(l.abs()))
}

/// `(I − βA)^{-1} − I = Σ_{τ≥1} β^τ A^τ`.
#[derive(Debug, Clone)]
pub struct KatzMatrix {
    pub damping: f64,
    matrix: DenseMatrix,
}

impl KatzMatrix {
    pub fn new(g: &Hypergraph, damping: f64) -> Result<Self> {
        Self::with_radius(g, damping, spectral_radius(g))
    }

    /// Like [`KatzMatrix::new`] with a precomputed spectral radius, which
    /// must be at least that of `g`.
    pub fn with_radius(g: &Hypergraph, damping: f64, radius: f64) -> Result<Self> {
        if !(damping > 0.0) || damping * radius >= 1.0 - 1e-12 {
            return Err(Error::DivergentSeries { damping, radius });
        }
        let n = g.n();
        let a = g.adjacency();
        let mut m = DMatrix::<f64>::identity(n, n);
        for (i, j, v) in a.iter() {
            m[(i, j)] -= damping * v;
        }
        let inv = m
            .lu()
            .try_inverse()
            .ok_or(Error::DivergentSeries { damping, radius })?;
        let mut matrix = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = inv[(i, j)] - if i == j { 1.0 } else { 0.0 };
                matrix.set(i, j, v);
            }
        }
        Ok(Self { damping, matrix })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn score(&self, e: &Hyperlink) -> Result<f64> {
        check_range(e, self.n())?;
        Ok(mean_over_pairs(e, |i, j| self.get(i, j)))
    }
}

pub fn katz_matrix(g: &Hypergraph, damping: f64) -> Result<KatzMatrix> {
    KatzMatrix::new(g, damping)
}

pub const DEFAULT_KATZ_FACTORS: [f64; 5] = [0.5, 0.1, 0.05, 0.01, 0.005];

/// Katz damping candidates, expressed as fractions of `1/ρ(A)` so every
/// candidate converges.
#[derive(Debug, Clone, PartialEq)]
pub struct KatzConfig {
    pub factors: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for KatzConfig {
    fn default() -> Self {
        Self {
            factors: DEFAULT_KATZ_FACTORS.to_vec(),
            folds: 5,
            seed: 0,
        }
    }
}

impl KatzConfig {
    /// Absolute damping values for a graph of spectral radius `radius`,
    /// ascending.
    pub fn dampings(&self, radius: f64) -> Vec<f64> {
        let unit = if radius > 0.0 { 1.0 / radius } else { 1.0 };
        let mut d: Vec<f64> = self.factors.iter().map(|f| f * unit).collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }
}

/// Mean hyperlink Katz score for `e` at a fixed damping.
pub fn katz_score(g: &Hypergraph, e: &Hyperlink, damping: f64) -> Result<f64> {
    KatzMatrix::new(g, damping)?.score(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KatzSelection {
    pub damping: f64,
    /// Mean validation AUC per damping, ascending by damping.
    pub scores: Vec<(f64, f64)>,
}

/// Chooses the damping by k-fold cross-validation: each fold's observed
/// hyperlinks are hidden from the graph and ranked against that fold's
/// negatives. Ties go to the smaller damping.
pub fn select_katz_damping(
    train: &Hypergraph,
    negatives: &[Hyperlink],
    config: &KatzConfig,
) -> Result<KatzSelection> {
    let radius = spectral_radius(train);
    let dampings = config.dampings(radius);
    if dampings.is_empty() {
        return Err(Error::Config("empty Katz damping grid".into()));
    }
    if dampings.len() == 1 {
        return Ok(KatzSelection {
            damping: dampings[0],
            scores: Vec::new(),
        });
    }
    let rows: Vec<(&Hyperlink, Label)> = train
        .hyperlinks()
        .iter()
        .map(|e| (e, Label::Positive))
        .chain(negatives.iter().map(|e| (e, Label::Negative)))
        .collect();
    let labels: Vec<Label> = rows.iter().map(|(_, l)| *l).collect();
    let folds = stratified_folds(&labels, config.folds, config.seed)?;

    let mut totals = vec![0.0; dampings.len()];
    for fold in &folds {
        let hidden: HashSet<Hyperlink> = fold
            .iter()
            .filter(|&&i| rows[i].1 == Label::Positive)
            .map(|&i| rows[i].0.clone())
            .collect();
        let reduced = train.without_hyperlinks(&hidden);
        for (d, total) in dampings.iter().zip(totals.iter_mut()) {
            let km = KatzMatrix::with_radius(&reduced, *d, radius)?;
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for &i in fold {
                let s = km.score(rows[i].0)?;
                match rows[i].1 {
                    Label::Positive => pos.push(s),
                    Label::Negative => neg.push(s),
                }
            }
            *total += auc(&pos, &neg)?;
        }
    }
    let scores: Vec<(f64, f64)> = dampings
        .iter()
        .zip(&totals)
        .map(|(&d, &t)| (d, t / folds.len() as f64))
        .collect();
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 {
            best = s;
        }
    }
    Ok(KatzSelection {
        damping: best.0,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::build_hypergraph;

    fn triangle() -> Hypergraph {
        build_hypergraph::<&str>(
            None,
            &[vec!["v1", "v2"], vec!["v1", "v3"], vec!["v2", "v3"]],
        )
        .unwrap()
    }

    #[test]
    fn cn_examples() {
        let t = triangle();
        let e = t.hyperlink_from_labels(&["v1", "v2"]).unwrap();
        assert_eq!(cn_score(&t, &e).unwrap(), 1.0);

        let s = build_hypergraph::<&str>(None, &[vec!["v1", "v2", "v3"]]).unwrap();
        let e = s.hyperlink_from_labels(&["v1", "v2", "v3"]).unwrap();
        assert_eq!(cn_score(&s, &e).unwrap(), 1.0);

        let d = build_hypergraph::<&str>(None, &[vec!["v1", "v2"], vec!["v3", "v4"]]).unwrap();
        let e = d.hyperlink_from_labels(&["v1", "v3"]).unwrap();
        assert_eq!(cn_score(&d, &e).unwrap(), 0.0);
    }

    #[test]
    fn cn_walk_count_variant_counts_multiplicity() {
        // a and b share c through two different hyperlinks
        let g =
            build_hypergraph::<&str>(None, &[vec!["a", "c"], vec!["a", "c", "x"], vec!["b", "c"]])
                .unwrap();
        let e = g.hyperlink_from_labels(&["a", "b"]).unwrap();
        assert_eq!(
            CommonNeighbors::new(&g, CnVariant::Binary)
                .score(&e)
                .unwrap(),
            1.0
        );
        assert_eq!(
            CommonNeighbors::new(&g, CnVariant::WalkCount)
                .score(&e)
                .unwrap(),
            2.0
        );
    }

    #[test]
    fn katz_two_node_closed_form() {
        let g = build_hypergraph::<&str>(None, &[vec!["v1", "v2"]]).unwrap();
        let k = katz_matrix(&g, 0.5).unwrap();
        let expect = [[1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                assert!((k.get(i, j) - want).abs() < 1e-12);
            }
        }
        let e = g.hyperlinks()[0].clone();
        assert!((k.score(&e).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn katz_divergence_and_vanishing_damping() {
        let t = triangle();
        assert!((spectral_radius(&t) - 2.0).abs() < 1e-12);
        assert!(matches!(
            katz_matrix(&t, 0.5),
            Err(Error::DivergentSeries { .. })
        ));
        assert!(matches!(
            katz_matrix(&t, 0.7),
            Err(Error::DivergentSeries { .. })
        ));
        let k = katz_matrix(&t, 1e-9).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(k.get(i, j).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn katz_disconnected_pairs_score_zero() {
        let g = build_hypergraph::<&str>(None, &[vec!["a", "b"], vec!["c", "d"], vec!["e", "f"]])
            .unwrap();
        let e = g.hyperlink_from_labels(&["a", "c", "e"]).unwrap();
        assert_eq!(katz_score(&g, &e, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn katz_prefers_existing_triangle_edge() {
        // triangle with a pendant path v3 - v4 - v5
        let g = build_hypergraph::<&str>(
            None,
            &[
                vec!["v1", "v2"],
                vec!["v1", "v3"],
                vec!["v2", "v3"],
                vec!["v3", "v4"],
                vec!["v4", "v5"],
            ],
        )
        .unwrap();
        let d = 0.5 / spectral_radius(&g);
        let k = KatzMatrix::new(&g, d).unwrap();
        let existing = g.hyperlink_from_labels(&["v1", "v2"]).unwrap();
        let pendant = g.hyperlink_from_labels(&["v1", "v5"]).unwrap();
        assert!(k.score(&existing).unwrap() > k.score(&pendant).unwrap());
    }

    #[test]
    fn damping_selection_is_deterministic() {
        let g = build_hypergraph::<&str>(
            None,
            &[
                vec!["a", "b"],
                vec!["b", "c"],
                vec!["a", "c"],
                vec!["c", "d"],
                vec!["d", "e"],
                vec!["e", "f"],
                vec!["d", "f"],
                vec!["a", "f"],
            ],
        )
        .unwrap();
        let neg: Vec<Hyperlink> = [["a", "e"], ["b", "d"], ["b", "e"], ["b", "f"]]
            .iter()
            .map(|p| g.hyperlink_from_labels(p).unwrap())
            .collect();
        let cfg = KatzConfig {
            folds: 2,
            ..KatzConfig::default()
        };
        let a = select_katz_damping(&g, &neg, &cfg).unwrap();
        let b = select_katz_damping(&g, &neg, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scores.len(), 5);
        let radius = spectral_radius(&g);
        assert!(a.damping * radius < 1.0);
    }
}
