//! Explicit enumeration of closed walks, used to check the trace formulas.
//!
//! A node-based walk alternates nodes and hyperlinks, moving from a node to a
//! different node of a hyperlink containing it. A hyperlink-based walk moves
//! from a hyperlink through one of its nodes to a different hyperlink
//! containing that node.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub const MAX_ENUM_NODES: usize = 10;
pub const MAX_ENUM_HYPERLINKS: usize = 10;
pub const MAX_ENUM_LENGTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopKind {
    NodeBased,
    HyperlinkBased,
}

impl fmt::Display for LoopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopKind::NodeBased => "node-based",
            LoopKind::HyperlinkBased => "hyperlink-based",
        })
    }
}

impl FromStr for LoopKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node-based" | "node" => Ok(LoopKind::NodeBased),
            "hyperlink-based" | "hyperlink" => Ok(LoopKind::HyperlinkBased),
            other => Err(Error::Config(format!("unknown loop kind `{other}`"))),
        }
    }
}

/// Counts closed walks of length `tau` by enumerating every alternating
/// node/hyperlink sequence.
pub fn count_loops_bruteforce(g: &Hypergraph, tau: usize, kind: LoopKind) -> Result<u64> {
    if g.n() > MAX_ENUM_NODES || g.m() > MAX_ENUM_HYPERLINKS || tau > MAX_ENUM_LENGTH {
        return Err(Error::EnumerationTooLarge(format!(
            "n={}, m={}, tau={} (limits n<={MAX_ENUM_NODES}, m<={MAX_ENUM_HYPERLINKS}, tau<={MAX_ENUM_LENGTH})",
            g.n(),
            g.m(),
            tau
        )));
    }
    let incident: Vec<Vec<usize>> = {
        let mut inc = vec![Vec::new(); g.n()];
        for (a, e) in g.hyperlinks().iter().enumerate() {
            for &i in e.nodes() {
                inc[i].push(a);
            }
        }
        inc
    };
    let members: Vec<&[usize]> = g.hyperlinks().iter().map(|e| e.nodes()).collect();

    let total = match kind {
        LoopKind::NodeBased => (0..g.n())
            .map(|start| node_walks(start, start, tau, &incident, &members))
            .sum(),
        LoopKind::HyperlinkBased => (0..g.m())
            .map(|start| link_walks(start, start, tau, &incident, &members))
            .sum(),
    };
    Ok(total)
}

fn node_walks(
    start: usize,
    at: usize,
    remaining: usize,
    incident: &[Vec<usize>],
    members: &[&[usize]],
) -> u64 {
    if remaining == 0 {
        return u64::from(at == start);
    }
    let mut count = 0;
    for &a in &incident[at] {
        for &next in members[a] {
            if next != at {
                count += node_walks(start, next, remaining - 1, incident, members);
            }
        }
    }
    count
}

fn link_walks(
    start: usize,
    at: usize,
    remaining: usize,
    incident: &[Vec<usize>],
    members: &[&[usize]],
) -> u64 {
    if remaining == 0 {
        return u64::from(at == start);
    }
    let mut count = 0;
    for &v in members[at] {
        for &next in &incident[v] {
            if next != at {
                count += link_walks(start, next, remaining - 1, incident, members);
            }
        }
    }
    count
}
