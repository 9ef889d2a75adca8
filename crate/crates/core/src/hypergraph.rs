//! Hypergraph representation and the count matrices derived from its
//! incidence structure.
//!
//! Nodes are indexed by the lexicographic order of their labels. Hyperlinks
//! keep their insertion order; a hyperlink added with [`Hypergraph::with_hyperlink`]
//! is appended last.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// A hyperlink as a sorted set of node indices with at least two members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperlink(Vec<usize>);

impl Hyperlink {
    /// Sorts and deduplicates `nodes`. Fails if fewer than two distinct
    /// nodes remain.
    pub fn new(mut nodes: Vec<usize>) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() < 2 {
            return Err(Error::SingletonHyperlink(format!("{nodes:?}")));
        }
        Ok(Self(nodes))
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn cardinality(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    /// Size of the intersection with `other`, by merging the sorted lists.
    pub fn intersection_size(&self, other: &Hyperlink) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Unordered node pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(move |(k, &i)| self.0[k + 1..].iter().map(move |&j| (i, j)))
    }
}

impl fmt::Display for Hyperlink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// An immutable hypergraph over labelled nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    labels: Vec<String>,
    hyperlinks: Vec<Hyperlink>,
    members: HashSet<Hyperlink>,
}

/// Ingestion policy for hyperlinks that violate the cardinality or
/// uniqueness rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub drop_singletons: bool,
    pub drop_duplicates: bool,
}

/// Result of a lenient build: the hypergraph plus a message for every
/// hyperlink that was dropped, keyed by its input position.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub graph: Hypergraph,
    /// Input positions of the hyperlinks that were kept, in output order.
    pub kept: Vec<usize>,
    pub dropped: Vec<(usize, Error)>,
}

/// Builds a hypergraph from label sets. When `node_labels` is `None` the node
/// set is the union of the hyperlinks.
pub fn build_hypergraph<S: AsRef<str>>(
    node_labels: Option<&[S]>,
    hyperlinks: &[Vec<S>],
) -> Result<Hypergraph> {
    build_hypergraph_with(node_labels, hyperlinks, BuildOptions::default()).map(|o| o.graph)
}

pub fn build_hypergraph_with<S: AsRef<str>>(
    node_labels: Option<&[S]>,
    hyperlinks: &[Vec<S>],
    options: BuildOptions,
) -> Result<BuildOutcome> {
    let mut labels: Vec<String> = match node_labels {
        Some(ls) => ls.iter().map(|s| s.as_ref().to_owned()).collect(),
        None => hyperlinks
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_owned())
            .collect(),
    };
    labels.sort_unstable();
    labels.dedup();

    let mut graph = Hypergraph {
        labels,
        hyperlinks: Vec::with_capacity(hyperlinks.len()),
        members: HashSet::with_capacity(hyperlinks.len()),
    };
    let mut kept = Vec::with_capacity(hyperlinks.len());
    let mut dropped = Vec::new();
    for (pos, set) in hyperlinks.iter().enumerate() {
        let link = match graph.hyperlink_from_labels(set) {
            Ok(link) => link,
            Err(e @ Error::SingletonHyperlink(_)) if options.drop_singletons => {
                dropped.push((pos, e));
                continue;
            }
            Err(e) => return Err(e),
        };
        if graph.members.contains(&link) {
            let e = Error::DuplicateHyperlink(graph.hyperlink_id(&link));
            if options.drop_duplicates {
                dropped.push((pos, e));
                continue;
            }
            return Err(e);
        }
        graph.members.insert(link.clone());
        graph.hyperlinks.push(link);
        kept.push(pos);
    }
    Ok(BuildOutcome {
        graph,
        kept,
        dropped,
    })
}

impl Hypergraph {
    /// A hypergraph with the given nodes and no hyperlinks.
    pub fn empty<S: AsRef<str>>(node_labels: &[S]) -> Self {
        build_hypergraph::<S>(Some(node_labels), &[]).expect("no hyperlinks to validate")
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.hyperlinks.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn hyperlinks(&self) -> &[Hyperlink] {
        &self.hyperlinks
    }

    pub fn contains(&self, e: &Hyperlink) -> bool {
        self.members.contains(e)
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn hyperlink_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Hyperlink> {
        let nodes = labels
            .iter()
            .map(|l| {
                self.node_index(l.as_ref())
                    .ok_or_else(|| Error::UnknownLabel(l.as_ref().to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Hyperlink::new(nodes).map_err(|_| {
            let names: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
            Error::SingletonHyperlink(names.join("+"))
        })
    }

    /// Textual identity of a hyperlink: its labels in lexicographic order,
    /// joined by `+`.
    pub fn hyperlink_id(&self, e: &Hyperlink) -> String {
        let names: Vec<&str> = e.nodes().iter().map(|&i| self.labels[i].as_str()).collect();
        names.join("+")
    }

    /// Number of hyperlinks incident to each node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n()];
        for e in &self.hyperlinks {
            for &i in e.nodes() {
                deg[i] += 1;
            }
        }
        deg
    }

    fn check_in_range(&self, e: &Hyperlink) -> Result<()> {
        match e.nodes().last() {
            Some(&max) if max >= self.n() => Err(Error::NodeOutOfRange {
                index: max,
                n: self.n(),
            }),
            _ => Ok(()),
        }
    }

    /// The hypergraph with `e` forced present. Returns an equal copy when `e`
    /// is already a hyperlink.
    pub fn with_hyperlink(&self, e: &Hyperlink) -> Result<Hypergraph> {
        self.check_in_range(e)?;
        let mut g = self.clone();
        if g.members.insert(e.clone()) {
            g.hyperlinks.push(e.clone());
        }
        Ok(g)
    }

    /// The hypergraph with `e` forced absent. Returns an equal copy when `e`
    /// is not a hyperlink.
    pub fn without_hyperlink(&self, e: &Hyperlink) -> Result<Hypergraph> {
        self.check_in_range(e)?;
        let mut g = self.clone();
        if g.members.remove(e) {
            g.hyperlinks.retain(|x| x != e);
        }
        Ok(g)
    }

    /// Removes every hyperlink in `removed`, keeping the node set.
    pub fn without_hyperlinks(&self, removed: &HashSet<Hyperlink>) -> Hypergraph {
        let hyperlinks: Vec<Hyperlink> = self
            .hyperlinks
            .iter()
            .filter(|e| !removed.contains(*e))
            .cloned()
            .collect();
        Hypergraph {
            labels: self.labels.clone(),
            members: hyperlinks.iter().cloned().collect(),
            hyperlinks,
        }
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let triplets = self
            .hyperlinks
            .iter()
            .enumerate()
            .flat_map(|(a, e)| e.nodes().iter().map(move |&i| (i, a, 1.0)))
            .collect();
        IncidenceMatrix(CsrMatrix::from_triplets(self.n(), self.m(), triplets))
    }

    /// Node adjacency `S Sᵀ − D`: entry `(i, j)` counts the hyperlinks that
    /// contain both `i` and `j`.
    pub fn adjacency(&self) -> NodeAdjacency {
        let mut triplets = Vec::new();
        for e in &self.hyperlinks {
            for (i, j) in e.pairs() {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
        NodeAdjacency(CsrMatrix::from_triplets(self.n(), self.n(), triplets))
    }

    /// Intersection profile `Sᵀ S − Z`: entry `(a, b)` is `|e_a ∩ e_b|`.
    pub fn intersection_profile(&self) -> IntersectionProfile {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.n()];
        for (a, e) in self.hyperlinks.iter().enumerate() {
            for &i in e.nodes() {
                incident[i].push(a);
            }
        }
        let mut triplets = Vec::new();
        for links in &incident {
            for (k, &a) in links.iter().enumerate() {
                for &b in &links[k + 1..] {
                    triplets.push((a, b, 1.0));
                    triplets.push((b, a, 1.0));
                }
            }
        }
        IntersectionProfile(CsrMatrix::from_triplets(self.m(), self.m(), triplets))
    }
}

/// `n × m` binary incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(pub CsrMatrix);

/// `n × n` node adjacency; zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAdjacency(pub CsrMatrix);

/// `m × m` hyperlink intersection profile; zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionProfile(pub CsrMatrix);

macro_rules! matrix_newtype {
    ($t:ty) => {
        impl std::ops::Deref for $t {
            type Target = CsrMatrix;
            fn deref(&self) -> &CsrMatrix {
                &self.0
            }
        }
    };
}
matrix_newtype!(IncidenceMatrix);
matrix_newtype!(NodeAdjacency);
matrix_newtype!(IntersectionProfile);
