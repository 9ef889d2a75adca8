//! Hyperlink prediction from loop spectra.
//!
//! A candidate hyperlink is scored by how much it changes the counts of
//! closed walks in the observed hypergraph. Two walk families are counted:
//! node-based loops, via traces of powers of the node adjacency `S Sᵀ − D`,
//! and hyperlink-based loops, via traces of powers of the intersection
//! profile `Sᵀ S − Z`. The log-trace differences between the graph with and
//! without the candidate feed a logistic model whose input is scaled by
//! `|e|^{−γ}` so that hyperlinks of different cardinality are comparable.
//!
//! Module map:
//! - [`hypergraph`]: representation, incidence, adjacency, intersection profile
//! - [`spectrum`]: traces of matrix powers and perturbation features
//! - [`walks`]: brute-force closed-walk enumeration for verification
//! - [`model`]: logistic fit over a `γ` grid, cutoff selection, model files
//! - [`baselines`]: generalised common neighbours and Katz
//! - [`data`]: file parsing, train/test splits, fake-hyperlink sampling
//! - [`metrics`] and [`experiment`]: AUC, Precision, repeated experiments

pub mod baselines;
pub mod data;
pub mod error;
pub mod experiment;
pub mod hypergraph;
pub mod metrics;
pub mod model;
pub mod sparse;
pub mod spectrum;
pub mod synthetic;
pub mod walks;

pub use error::{Error, Result};
pub use hypergraph::{build_hypergraph, Hypergraph, Hyperlink};
pub use spectrum::{perturbation_features, spectrum, trace_powers, Label, PerturbationFeatures};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs `f` on a dedicated rayon pool with `jobs` threads (`None` uses the
/// global pool). Results of this crate never depend on the thread count.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Config("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
