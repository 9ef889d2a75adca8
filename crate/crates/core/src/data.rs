//! Hyperlink file ingestion, random train/test splits, and generation of
//! fake candidate hyperlinks.
//!
//! File format: one hyperlink per line, node labels separated by whitespace.
//! Blank lines and lines whose first non-blank character is `#` are skipped.
//! LF and CRLF line endings are both accepted.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypergraph::{build_hypergraph, BuildOptions, Hypergraph, Hyperlink};

/// One non-comment line of a hyperlink file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelLine {
    /// 1-based line number in the source.
    pub line: usize,
    pub labels: Vec<String>,
}

/// Reads label sets without interpreting them as hyperlinks yet. Fails on
/// invalid UTF-8 or on a label repeated within one line.
pub fn read_label_lines<R: BufRead>(mut reader: R) -> Result<Vec<LabelLine>> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        let text = std::str::from_utf8(&buf).map_err(|_| Error::MalformedLine {
            line,
            reason: "invalid UTF-8".into(),
        })?;
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let labels: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
        let mut seen = HashSet::with_capacity(labels.len());
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::MalformedLine {
                line,
                reason: format!("node label `{dup}` repeated"),
            });
        }
        out.push(LabelLine { line, labels });
    }
    Ok(out)
}

/// A parsed hypergraph with provenance for each kept hyperlink.
#[derive(Debug, Clone)]
pub struct ParsedHypergraph {
    pub graph: Hypergraph,
    /// Source line of each hyperlink, in hyperlink order.
    pub lines: Vec<usize>,
    /// Hyperlinks skipped under a lenient [`BuildOptions`], with the reason.
    pub dropped: Vec<(usize, Error)>,
}

/// Builds a hypergraph from label lines, checking cardinality and uniqueness
/// with line numbers in the errors. `extra_nodes` are added to the node set.
pub fn hypergraph_from_lines(
    lines: &[LabelLine],
    extra_nodes: &[String],
    options: BuildOptions,
) -> Result<ParsedHypergraph> {
    let mut first_seen: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut kept: Vec<&LabelLine> = Vec::new();
    let mut dropped = Vec::new();
    for l in lines {
        if l.labels.len() < 2 {
            let e =
                Error::SingletonHyperlink(format!("`{}` at line {}", l.labels.join(" "), l.line));
            if options.drop_singletons {
                dropped.push((l.line, e));
                continue;
            }
            return Err(e);
        }
        let mut key: Vec<&str> = l.labels.iter().map(String::as_str).collect();
        key.sort_unstable();
        if let Some(&first) = first_seen.get(&key) {
            let e = Error::DuplicateHyperlink(format!(
                "`{}` at line {} (first at line {first})",
                key.join("+"),
                l.line
            ));
            if options.drop_duplicates {
                dropped.push((l.line, e));
                continue;
            }
            return Err(e);
        }
        first_seen.insert(key, l.line);
        kept.push(l);
    }
    let mut nodes: Vec<&str> = lines
        .iter()
        .flat_map(|l| l.labels.iter().map(String::as_str))
        .chain(extra_nodes.iter().map(String::as_str))
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    let sets: Vec<Vec<&str>> = kept
        .iter()
        .map(|l| l.labels.iter().map(String::as_str).collect())
        .collect();
    let graph = build_hypergraph(Some(&nodes), &sets)?;
    Ok(ParsedHypergraph {
        graph,
        lines: kept.iter().map(|l| l.line).collect(),
        dropped,
    })
}

pub fn parse_hyperlinks<R: BufRead>(reader: R, options: BuildOptions) -> Result<ParsedHypergraph> {
    hypergraph_from_lines(&read_label_lines(reader)?, &[], options)
}

pub fn parse_hyperlink_str(text: &str) -> Result<Hypergraph> {
    parse_hyperlinks(text.as_bytes(), BuildOptions::default()).map(|p| p.graph)
}

pub fn parse_hyperlink_file(path: &Path, options: BuildOptions) -> Result<ParsedHypergraph> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_hyperlinks(std::io::BufReader::new(file), options)
}

/// Maps label lines onto hyperlinks of `g`. Repeated candidates are an error.
pub fn candidates_from_lines(g: &Hypergraph, lines: &[LabelLine]) -> Result<Vec<Hyperlink>> {
    let mut seen: HashMap<Hyperlink, usize> = HashMap::new();
    let mut out = Vec::with_capacity(lines.len());
    for l in lines {
        let e = g
            .hyperlink_from_labels(&l.labels)
            .map_err(|err| match err {
                Error::SingletonHyperlink(_) => Error::SingletonHyperlink(format!(
                    "`{}` at line {}",
                    l.labels.join(" "),
                    l.line
                )),
                other => other,
            })?;
        if let Some(first) = seen.insert(e.clone(), l.line) {
            return Err(Error::DuplicateHyperlink(format!(
                "`{}` at line {} (first at line {first})",
                g.hyperlink_id(&e),
                l.line
            )));
        }
        out.push(e);
    }
    Ok(out)
}

/// SplitMix64 step, used to derive independent seeds from one base seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub test_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Hypergraph,
    pub test: Vec<Hyperlink>,
    /// Positions of the deleted hyperlinks in the original graph, ascending.
    pub deleted: Vec<usize>,
    pub spec: SplitSpec,
}

/// Deletes `test_count` hyperlinks chosen uniformly without replacement. The
/// node set and indexing are unchanged.
pub fn split_train_test(g: &Hypergraph, spec: SplitSpec) -> Result<Split> {
    if spec.test_count >= g.m() && !(spec.test_count == 0 && g.m() == 0) {
        return Err(Error::TestCountTooLarge {
            requested: spec.test_count,
            available: g.m(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut deleted = index::sample(&mut rng, g.m(), spec.test_count).into_vec();
    deleted.sort_unstable();
    Ok(split_at(g, deleted, spec))
}

fn split_at(g: &Hypergraph, deleted: Vec<usize>, spec: SplitSpec) -> Split {
    let test: Vec<Hyperlink> = deleted.iter().map(|&a| g.hyperlinks()[a].clone()).collect();
    let removed: HashSet<Hyperlink> = test.iter().cloned().collect();
    Split {
        train: g.without_hyperlinks(&removed),
        test,
        deleted,
        spec,
    }
}

impl Split {
    /// Text record of the split. `lines` gives the source line of each
    /// hyperlink of the original graph when it came from a file.
    pub fn manifest(&self, lines: Option<&[usize]>) -> String {
        let join = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "# hyperloop split manifest");
        let _ = writeln!(s, "version = {}", crate::VERSION);
        let _ = writeln!(s, "seed = {}", self.spec.seed);
        let _ = writeln!(s, "test_count = {}", self.spec.test_count);
        let _ = writeln!(s, "train_hyperlinks = {}", self.train.m());
        let _ = writeln!(
            s,
            "deleted_index = {}",
            join(&mut self.deleted.iter().copied())
        );
        if let Some(lines) = lines {
            let _ = writeln!(
                s,
                "deleted_line = {}",
                join(&mut self.deleted.iter().map(|&a| lines[a]))
            );
        }
        s
    }
}

/// Reproduces a split from its manifest.
pub fn apply_manifest(g: &Hypergraph, manifest: &str) -> Result<Split> {
    let mut seed = None;
    let mut deleted = None;
    for line in manifest.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        match k.trim() {
            "seed" => seed = v.trim().parse::<u64>().ok(),
            "deleted_index" => {
                deleted = Some(
                    v.split_whitespace()
                        .map(|x| x.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::Config("bad deleted_index in manifest".into()))?,
                )
            }
            _ => {}
        }
    }
    let (Some(seed), Some(mut deleted)) = (seed, deleted) else {
        return Err(Error::Config("manifest lacks seed or deleted_index".into()));
    };
    deleted.sort_unstable();
    deleted.dedup();
    if deleted.iter().any(|&a| a >= g.m()) || (deleted.len() >= g.m() && g.m() > 0) {
        return Err(Error::Config(
            "manifest does not fit this hypergraph".into(),
        ));
    }
    let spec = SplitSpec {
        test_count: deleted.len(),
        seed,
    };
    Ok(split_at(g, deleted, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeSamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// Defaults to `1000 · count`.
    pub max_rejections: Option<usize>,
}

impl NegativeSamplerConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            max_rejections: None,
        }
    }
}

/// Fake hyperlinks drawn like the observed ones: cardinality from the
/// empirical cardinality distribution of `g`, then nodes picked one at a time
/// with probability proportional to degree among those not yet picked.
/// Node sets equal to a hyperlink of `g` or an earlier draw are rejected and
/// redrawn at the same cardinality.
pub fn sample_negative_hyperlinks(
    g: &Hypergraph,
    config: &NegativeSamplerConfig,
) -> Result<Vec<Hyperlink>> {
    sample_negative_hyperlinks_excluding(g, config, &HashSet::new())
}

/// As [`sample_negative_hyperlinks`], also rejecting any member of `exclude`.
pub fn sample_negative_hyperlinks_excluding(
    g: &Hypergraph,
    config: &NegativeSamplerConfig,
    exclude: &HashSet<Hyperlink>,
) -> Result<Vec<Hyperlink>> {
    if config.count == 0 {
        return Err(Error::Config("negative count must be at least 1".into()));
    }
    if g.m() == 0 {
        return Err(Error::InsufficientData(
            "cardinality distribution needs at least one hyperlink".into(),
        ));
    }
    let cards: Vec<usize> = g.hyperlinks().iter().map(Hyperlink::cardinality).collect();
    let degrees: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let max_rejections = config.max_rejections.unwrap_or(1000 * config.count);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.count);
    let mut seen: HashSet<Hyperlink> = HashSet::with_capacity(config.count);
    let mut rejections = 0;
    let mut weights = degrees.clone();
    let mut k = cards[rng.random_range(0..cards.len())];
    while out.len() < config.count {
        weights.copy_from_slice(&degrees);
        let mut picked = Vec::with_capacity(k);
        for _ in 0..k {
            match weighted_pick(&weights, &mut rng) {
                Some(i) => {
                    picked.push(i);
                    weights[i] = 0.0;
                }
                None => break,
            }
        }
        let accepted = picked.len() == k
            && match Hyperlink::new(picked) {
                Ok(e) if !g.contains(&e) && !exclude.contains(&e) && !seen.contains(&e) => {
                    seen.insert(e.clone());
                    out.push(e);
                    k = cards[rng.random_range(0..cards.len())];
                    true
                }
                _ => false,
            };
        if !accepted {
            rejections += 1;
            if rejections > max_rejections {
                return Err(Error::SamplerExhausted {
                    rejections,
                    accepted: out.len(),
                    requested: config.count,
                });
            }
        }
    }
    Ok(out)
}

fn weighted_pick<R: Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}
