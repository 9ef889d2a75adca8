//! Cross-validated choice of the loop cutoff.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit, validation_auc, FitOptions, TrainingSet};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Hyperlink};
use crate::spectrum::{FeatureExtractor, Label, PerturbationFeatures};

/// Assigns row indices to `folds` groups so that every group holds both
/// labels. Deterministic given `seed`.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} rows for {folds} folds",
            labels.len()
        )));
    }
    let mut pos: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Positive)
        .collect();
    let mut neg: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Negative)
        .collect();
    if pos.len() < folds || neg.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} positive and {} negative rows cannot fill {folds} stratified folds",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (k, i) in pos.into_iter().chain(neg).enumerate() {
        out[k % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// `(train, validation)` rows for fold `k`.
pub(crate) fn fold_partition(folds: &[Vec<usize>], k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    (train, folds[k].clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSelection {
    pub tau_max: usize,
    /// Mean validation AUC per candidate cutoff, ascending by cutoff. Empty
    /// when the grid had a single entry.
    pub scores: Vec<(usize, f64)>,
}

/// Picks the cutoff from `grid` with the highest mean validation AUC; ties go
/// to the smaller cutoff. `features` must be computed at a cutoff no smaller
/// than the grid maximum and carry labels.
pub fn select_tau_c_from_features(
    features: &[PerturbationFeatures],
    grid: &[usize],
    folds: usize,
    seed: u64,
    gamma_grid: &[f64],
    opts: &FitOptions,
) -> Result<TauSelection> {
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    match grid.as_slice() {
        [] => return Err(Error::Config("empty tau grid".into())),
        [only] => {
            if *only < 2 {
                return Err(Error::InvalidTauMax(*only));
            }
            return Ok(TauSelection {
                tau_max: *only,
                scores: Vec::new(),
            });
        }
        _ => {}
    }
    let full = TrainingSet::from_labelled(features.to_vec())?;
    let labels: Vec<Label> = full.rows().iter().map(|(_, l)| *l).collect();
    let split = stratified_folds(&labels, folds, seed)?;

    let mut scores = Vec::with_capacity(grid.len());
    for &tau in &grid {
        let truncated = features
            .iter()
            .map(|f| f.truncated(tau))
            .collect::<Result<Vec<_>>>()?;
        let data = TrainingSet::from_labelled(truncated)?;
        let mut total = 0.0;
        for k in 0..split.len() {
            let (train, val) = fold_partition(&split, k);
            let model = fit(&data.subset(&train)?, gamma_grid, opts)?;
            total += validation_auc(&model, &data, &val)?;
        }
        scores.push((tau, total / split.len() as f64));
    }
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.1 > best.1 {
            best = s;
        }
    }
    Ok(TauSelection {
        tau_max: best.0,
        scores,
    })
}

/// Cross-validated cutoff for labelled candidates of `g`. Features are
/// extracted once at the largest cutoff and truncated per grid point.
pub fn select_tau_c(
    g: &Hypergraph,
    candidates: &[(Hyperlink, Label)],
    grid: &[usize],
    folds: usize,
    seed: u64,
    gamma_grid: &[f64],
    opts: &FitOptions,
) -> Result<TauSelection> {
    let Some(&top) = grid.iter().max() else {
        return Err(Error::Config("empty tau grid".into()));
    };
    if grid.len() == 1 || grid.iter().all(|&t| t == top) {
        return select_tau_c_from_features(&[], &[top], folds, seed, gamma_grid, opts);
    }
    if candidates.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} candidates for {folds} folds",
            candidates.len()
        )));
    }
    let extractor = FeatureExtractor::new(g.clone(), top)?;
    let links: Vec<Hyperlink> = candidates.iter().map(|(e, _)| e.clone()).collect();
    let features: Vec<PerturbationFeatures> = extractor
        .features_batch(&links)?
        .into_iter()
        .zip(candidates)
        .map(|(f, (_, l))| f.with_label(*l))
        .collect();
    select_tau_c_from_features(&features, grid, folds, seed, gamma_grid, opts)
}
