//! Loop spectra: traces of powers of the node adjacency and intersection
//! profile, and the change in those spectra caused by a single hyperlink.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Hyperlink};
use crate::sparse::CsrMatrix;

/// Floor applied to a trace before taking its logarithm.
pub const TRACE_FLOOR: f64 = 1e-12;

/// `tr(M^τ)` for `τ = 2..=tau_max`, computed by repeated sparse-dense
/// products. Entry `k` holds `tr(M^(k+2))`.
///
/// Only half the powers are formed: `tr(M^2k) = ‖M^k‖²` and
/// `tr(M^(2k+1)) = ⟨M^k, M^(k+1)⟩` for symmetric `M`.
pub fn trace_powers(m: &CsrMatrix, tau_max: usize) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NonSquareMatrix {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if tau_max < 2 {
        return Err(Error::InvalidTauMax(tau_max));
    }
    debug_assert!(m.is_symmetric(), "trace_powers expects a symmetric matrix");
    let mut traces = vec![0.0; tau_max - 1];
    if m.nnz() == 0 {
        return Ok(traces);
    }
    let slot = |tau: usize| tau - 2;

    traces[slot(2)] = m.iter().map(|(_, _, v)| v * v).sum();
    let mut prev = m.to_dense();
    let mut k = 1;
    while 2 * k < tau_max {
        let cur = m.mul_dense(&prev);
        traces[slot(2 * k + 1)] = prev.frobenius_dot(&cur);
        if 2 * k + 2 <= tau_max {
            traces[slot(2 * k + 2)] = cur.frobenius_dot(&cur);
        }
        prev = cur;
        k += 1;
    }
    debug_assert!(traces.iter().all(|&t| t >= -1e-9));
    Ok(traces)
}

fn clamped_log(trace: f64) -> f64 {
    trace.max(TRACE_FLOOR).ln()
}

/// Log-traces of node-based and hyperlink-based loops for `τ = 2..=tau_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSpectrum {
    pub tau_max: usize,
    pub node_log_traces: Vec<f64>,
    pub link_log_traces: Vec<f64>,
}

pub fn spectrum(g: &Hypergraph, tau_max: usize) -> Result<LoopSpectrum> {
    let node = trace_powers(&g.adjacency(), tau_max)?;
    let link = trace_powers(&g.intersection_profile(), tau_max)?;
    Ok(LoopSpectrum {
        tau_max,
        node_log_traces: node.into_iter().map(clamped_log).collect(),
        link_log_traces: link.into_iter().map(clamped_log).collect(),
    })
}

/// Training label of a candidate hyperlink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

/// Change in the loop spectrum when a hyperlink is forced present versus
/// absent. `delta` holds the node block (`τ = 2..=τ_c`) followed by the
/// hyperlink block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFeatures {
    pub delta: Vec<f64>,
    pub cardinality: usize,
    pub label: Option<Label>,
}

impl PerturbationFeatures {
    pub fn from_spectra(plus: &LoopSpectrum, minus: &LoopSpectrum, cardinality: usize) -> Self {
        let node = plus
            .node_log_traces
            .iter()
            .zip(&minus.node_log_traces)
            .map(|(p, m)| p - m);
        let link = plus
            .link_log_traces
            .iter()
            .zip(&minus.link_log_traces)
            .map(|(p, m)| p - m);
        Self {
            delta: node.chain(link).collect(),
            cardinality,
            label: None,
        }
    }

    pub fn tau_max(&self) -> usize {
        self.delta.len() / 2 + 1
    }

    pub fn node_block(&self) -> &[f64] {
        &self.delta[..self.delta.len() / 2]
    }

    pub fn link_block(&self) -> &[f64] {
        &self.delta[self.delta.len() / 2..]
    }

    /// The same features at a smaller loop cutoff: each block keeps its
    /// leading `tau_max - 1` entries.
    pub fn truncated(&self, tau_max: usize) -> Result<Self> {
        if tau_max < 2 || tau_max > self.tau_max() {
            return Err(Error::InvalidTauMax(tau_max));
        }
        let keep = tau_max - 1;
        let delta = self.node_block()[..keep]
            .iter()
            .chain(&self.link_block()[..keep])
            .copied()
            .collect();
        Ok(Self {
            delta,
            cardinality: self.cardinality,
            label: self.label,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

/// Features of `e` relative to `g`, recomputing both spectra from scratch.
pub fn perturbation_features(
    g: &Hypergraph,
    e: &Hyperlink,
    tau_max: usize,
) -> Result<PerturbationFeatures> {
    let plus = spectrum(&g.with_hyperlink(e)?, tau_max)?;
    let minus = spectrum(&g.without_hyperlink(e)?, tau_max)?;
    Ok(PerturbationFeatures::from_spectra(
        &plus,
        &minus,
        e.cardinality(),
    ))
}

/// Feature extraction against a fixed observed hypergraph. The spectrum of
/// the observed graph is computed once; each candidate then needs one new
/// spectrum, since either `G_{e+}` or `G_{e−}` equals the observed graph.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    graph: Hypergraph,
    tau_max: usize,
    base: LoopSpectrum,
}

impl FeatureExtractor {
    pub fn new(graph: Hypergraph, tau_max: usize) -> Result<Self> {
        let base = spectrum(&graph, tau_max)?;
        Ok(Self {
            graph,
            tau_max,
            base,
        })
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn base_spectrum(&self) -> &LoopSpectrum {
        &self.base
    }

    pub fn features(&self, e: &Hyperlink) -> Result<PerturbationFeatures> {
        let f = if self.graph.contains(e) {
            let minus = spectrum(&self.graph.without_hyperlink(e)?, self.tau_max)?;
            PerturbationFeatures::from_spectra(&self.base, &minus, e.cardinality())
        } else {
            let plus = spectrum(&self.graph.with_hyperlink(e)?, self.tau_max)?;
            PerturbationFeatures::from_spectra(&plus, &self.base, e.cardinality())
        };
        Ok(f)
    }

    /// Features for every candidate, in input order. Runs on the current
    /// rayon pool; results do not depend on its size.
    pub fn features_batch(&self, candidates: &[Hyperlink]) -> Result<Vec<PerturbationFeatures>> {
        candidates.par_iter().map(|e| self.features(e)).collect()
    }
}
