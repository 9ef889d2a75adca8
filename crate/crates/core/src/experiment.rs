//! Repeated hold-out experiments and their reports.
//!
//! Each repetition `r` uses seed `base_seed + r`: a random set of hyperlinks
//! is held out, fake candidates are drawn against the remaining graph, and
//! the held-out hyperlinks must be ranked above the fakes. The model is
//! trained with observed hyperlinks as positives and the whole candidate pool
//! (held-out plus fakes, which are indistinguishable to the predictor) as
//! negatives.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{select_katz_damping, CnVariant, CommonNeighbors, KatzConfig, KatzMatrix};
use crate::data::{
    derive_seed, sample_negative_hyperlinks_excluding, split_train_test, NegativeSamplerConfig,
    SplitSpec,
};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Hyperlink};
use crate::metrics::{auc, mean_std, precision_at_flags};
use crate::model::{
    self, select_tau_c_from_features, AblationMode, FitOptions, GammaCriterion, TrainingSet,
    DEFAULT_RIDGE_LAMBDA, DEFAULT_TAU_MAX,
};
use crate::spectrum::{FeatureExtractor, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Loop,
    Cn,
    Katz,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Loop => "loop",
            Method::Cn => "cn",
            Method::Katz => "katz",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loop" => Ok(Method::Loop),
            "cn" => Ok(Method::Cn),
            "katz" => Ok(Method::Katz),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TauChoice {
    Fixed(usize),
    CrossValidate { grid: Vec<usize>, folds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub method: Method,
    pub test_count: usize,
    pub negatives: usize,
    pub tau: TauChoice,
    pub gamma_grid: Vec<f64>,
    pub ridge_lambda: f64,
    pub mode: AblationMode,
    pub standardize: bool,
    pub katz_factors: Vec<f64>,
    pub katz_folds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "unnamed".into(),
            method: Method::Loop,
            test_count: 400,
            negatives: 1200,
            tau: TauChoice::Fixed(DEFAULT_TAU_MAX),
            gamma_grid: model::default_gamma_grid(),
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            mode: AblationMode::Full,
            standardize: true,
            katz_factors: crate::baselines::DEFAULT_KATZ_FACTORS.to_vec(),
            katz_folds: 5,
        }
    }
}

impl ExperimentConfig {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            ridge_lambda: self.ridge_lambda,
            mode: self.mode,
            standardize: self.standardize,
            criterion: GammaCriterion::Likelihood,
            ..FitOptions::default()
        }
    }

    /// Row label for side-by-side tables.
    pub fn method_name(&self) -> String {
        match self.method {
            Method::Loop => format!("loop-{}", self.mode),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub version: String,
    pub dataset: String,
    pub method: String,
    pub repetitions: usize,
    pub base_seed: u64,
    pub test_count: usize,
    pub negatives: usize,
    pub tau: TauChoice,
    pub gamma_grid: Vec<f64>,
    pub ridge_lambda: f64,
    pub ablation: String,
    pub standardize: bool,
    pub katz_factors: Vec<f64>,
    pub katz_folds: usize,
    pub seed_rule: String,
    pub candidate_protocol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub seed: u64,
    pub auc: f64,
    pub precision: f64,
    pub gamma: Option<f64>,
    pub tau_max: Option<usize>,
    pub katz_damping: Option<f64>,
    pub converged: Option<bool>,
    pub train_hyperlinks: usize,
    pub test_positives: usize,
    pub fake_candidates: usize,
    /// Wall-clock time; kept out of the serialised report so that reports are
    /// byte-identical across runs.
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub precision_mean: f64,
    pub precision_std: f64,
}

impl Aggregate {
    pub fn from_runs(runs: &[RunRecord]) -> Self {
        let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
        let precs: Vec<f64> = runs.iter().map(|r| r.precision).collect();
        let (auc_mean, auc_std) = mean_std(&aucs);
        let (precision_mean, precision_std) = mean_std(&precs);
        Self {
            runs: runs.len(),
            auc_mean,
            auc_std,
            precision_mean,
            precision_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigSnapshot,
    pub per_run: Vec<RunRecord>,
    pub aggregate: Aggregate,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn csv_header() -> &'static str {
        "method,dataset,auc_mean,auc_std,prec_mean,prec_std"
    }

    pub fn csv_row(&self) -> String {
        let a = &self.aggregate;
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            self.config.method,
            self.config.dataset,
            a.auc_mean,
            a.auc_std,
            a.precision_mean,
            a.precision_std
        )
    }

    /// Tab-separated per-run table for external plotting.
    pub fn per_run_tsv(&self) -> String {
        let mut s = String::from("repetition\tseed\tauc\tprecision\tgamma\ttau_max\n");
        for r in &self.per_run {
            let opt = |x: Option<String>| x.unwrap_or_else(|| "NA".into());
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.repetition,
                r.seed,
                r.auc,
                r.precision,
                opt(r.gamma.map(|g| g.to_string())),
                opt(r.tau_max.map(|t| t.to_string())),
            ));
        }
        s
    }

    pub fn total_runtime(&self) -> Duration {
        self.per_run.iter().map(|r| r.runtime).sum()
    }
}

struct Scored {
    test_scores: Vec<f64>,
    fake_scores: Vec<f64>,
    gamma: Option<f64>,
    tau_max: Option<usize>,
    katz_damping: Option<f64>,
    converged: Option<bool>,
}

fn score_loop(
    train: &Hypergraph,
    test: &[Hyperlink],
    fakes: &[Hyperlink],
    config: &ExperimentConfig,
    cv_seed: u64,
) -> Result<Scored> {
    let opts = config.fit_options();
    let top_tau = match &config.tau {
        TauChoice::Fixed(t) => *t,
        TauChoice::CrossValidate { grid, .. } => *grid
            .iter()
            .max()
            .ok_or_else(|| Error::Config("empty tau grid".into()))?,
    };
    let extractor = FeatureExtractor::new(train.clone(), top_tau)?;
    let candidates: Vec<Hyperlink> = test.iter().chain(fakes).cloned().collect();
    let positives = extractor
        .features_batch(train.hyperlinks())?
        .into_iter()
        .map(|f| f.with_label(Label::Positive));
    let cand_features = extractor.features_batch(&candidates)?;
    let labelled: Vec<_> = positives
        .chain(
            cand_features
                .iter()
                .cloned()
                .map(|f| f.with_label(Label::Negative)),
        )
        .collect();

    let tau = match &config.tau {
        TauChoice::Fixed(t) => *t,
        TauChoice::CrossValidate { grid, folds } => {
            select_tau_c_from_features(&labelled, grid, *folds, cv_seed, &config.gamma_grid, &opts)?
                .tau_max
        }
    };
    let truncate = |fs: Vec<crate::spectrum::PerturbationFeatures>| -> Result<Vec<_>> {
        if tau == top_tau {
            Ok(fs)
        } else {
            fs.iter().map(|f| f.truncated(tau)).collect()
        }
    };
    let data = TrainingSet::from_labelled(truncate(labelled)?)?;
    let fitted = model::fit(&data, &config.gamma_grid, &opts)?;
    let scores = truncate(cand_features)?
        .iter()
        .map(|f| fitted.linear_predictor(f))
        .collect::<Result<Vec<_>>>()?;
    let (test_scores, fake_scores) = scores.split_at(test.len());
    Ok(Scored {
        test_scores: test_scores.to_vec(),
        fake_scores: fake_scores.to_vec(),
        gamma: Some(fitted.gamma),
        tau_max: Some(tau),
        katz_damping: None,
        converged: Some(fitted.diagnostics.converged),
    })
}

fn score_baseline(
    train: &Hypergraph,
    test: &[Hyperlink],
    fakes: &[Hyperlink],
    config: &ExperimentConfig,
    cv_seed: u64,
) -> Result<Scored> {
    let candidates: Vec<Hyperlink> = test.iter().chain(fakes).cloned().collect();
    let (scores, damping) = match config.method {
        Method::Cn => {
            let cn = CommonNeighbors::new(train, CnVariant::Binary);
            let s = candidates
                .iter()
                .map(|e| cn.score(e))
                .collect::<Result<Vec<_>>>()?;
            (s, None)
        }
        Method::Katz => {
            let katz_cfg = KatzConfig {
                factors: config.katz_factors.clone(),
                folds: config.katz_folds,
                seed: cv_seed,
            };
            let sel = select_katz_damping(train, &candidates, &katz_cfg)?;
            let km = KatzMatrix::new(train, sel.damping)?;
            let s = candidates
                .iter()
                .map(|e| km.score(e))
                .collect::<Result<Vec<_>>>()?;
            (s, Some(sel.damping))
        }
        Method::Loop => unreachable!("loop method is scored by score_loop"),
    };
    let (t, f) = scores.split_at(test.len());
    Ok(Scored {
        test_scores: t.to_vec(),
        fake_scores: f.to_vec(),
        gamma: None,
        tau_max: None,
        katz_damping: damping,
        converged: None,
    })
}

fn run_once(
    g: &Hypergraph,
    config: &ExperimentConfig,
    repetition: usize,
    seed: u64,
) -> Result<RunRecord> {
    let started = Instant::now();
    let split = split_train_test(
        g,
        SplitSpec {
            test_count: config.test_count,
            seed: derive_seed(seed, 0),
        },
    )?;
    if split.test.is_empty() {
        return Err(Error::Config("test count must be at least 1".into()));
    }
    let held_out: HashSet<Hyperlink> = split.test.iter().cloned().collect();
    let fakes = sample_negative_hyperlinks_excluding(
        &split.train,
        &NegativeSamplerConfig::new(config.negatives, derive_seed(seed, 1)),
        &held_out,
    )?;
    let cv_seed = derive_seed(seed, 2);
    let scored = match config.method {
        Method::Loop => score_loop(&split.train, &split.test, &fakes, config, cv_seed)?,
        _ => score_baseline(&split.train, &split.test, &fakes, config, cv_seed)?,
    };

    let auc_value = auc(&scored.test_scores, &scored.fake_scores)?;
    let flags: Vec<bool> = std::iter::repeat_n(true, scored.test_scores.len())
        .chain(std::iter::repeat_n(false, scored.fake_scores.len()))
        .collect();
    let all: Vec<f64> = scored
        .test_scores
        .iter()
        .chain(&scored.fake_scores)
        .copied()
        .collect();
    let precision = precision_at_flags(&flags, &all, split.test.len())?;

    Ok(RunRecord {
        repetition,
        seed,
        auc: auc_value,
        precision,
        gamma: scored.gamma,
        tau_max: scored.tau_max,
        katz_damping: scored.katz_damping,
        converged: scored.converged,
        train_hyperlinks: split.train.m(),
        test_positives: split.test.len(),
        fake_candidates: fakes.len(),
        runtime: started.elapsed(),
    })
}

/// Runs `repetitions` independent hold-out experiments in order.
pub fn run_experiment(
    g: &Hypergraph,
    config: &ExperimentConfig,
    repetitions: usize,
    base_seed: u64,
) -> Result<ExperimentReport> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    let per_run = (0..repetitions)
        .map(|r| run_once(g, config, r, base_seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::from_runs(&per_run);
    let config = ConfigSnapshot {
        version: crate::VERSION.into(),
        dataset: config.dataset.clone(),
        method: config.method_name(),
        repetitions,
        base_seed,
        test_count: config.test_count,
        negatives: config.negatives,
        tau: config.tau.clone(),
        gamma_grid: config.gamma_grid.clone(),
        ridge_lambda: config.ridge_lambda,
        ablation: config.mode.to_string(),
        standardize: config.standardize,
        katz_factors: config.katz_factors.clone(),
        katz_folds: config.katz_folds,
        seed_rule:
            "run seed = base_seed + repetition; split/sampler/cv streams derived by splitmix64"
                .into(),
        candidate_protocol: "fake candidates regenerated each run against the training graph, \
                             excluding held-out hyperlinks; training negatives = held-out + fakes"
            .into(),
    };
    Ok(ExperimentReport {
        config,
        per_run,
        aggregate,
    })
}

/// [`run_experiment`] restricted to one block of loop features.
pub fn ablation(
    g: &Hypergraph,
    config: &ExperimentConfig,
    mode: AblationMode,
    repetitions: usize,
    base_seed: u64,
) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig {
        mode,
        method: Method::Loop,
        ..config.clone()
    };
    run_experiment(g, &cfg, repetitions, base_seed)
}

/// Scores produced elsewhere, keyed by hyperlink id (`a+b+c`). Columns after
/// the score are ignored.
pub fn read_score_file<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| Error::MalformedLine {
            line: no + 1,
            reason: reason.into(),
        };
        let mut fields = line.split('\t');
        let (Some(id), Some(score)) = (fields.next(), fields.next()) else {
            return Err(malformed("expected `id<TAB>score`"));
        };
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| malformed("score is not a number"))?;
        let id = canonical_id(id.trim());
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateHyperlink(format!(
                "`{id}` at line {}",
                no + 1
            )));
        }
        out.push((id, score));
    }
    Ok(out)
}

/// Sorts the `+`-separated labels of a hyperlink id.
pub fn canonical_id(id: &str) -> String {
    let mut parts: Vec<&str> = id.split('+').collect();
    parts.sort_unstable();
    parts.join("+")
}

/// AUC and Precision of externally scored candidates. Precision's cutoff is
/// the number of positives present among the scored candidates.
pub fn evaluate_scores(
    positives: &HashSet<String>,
    scores: &[(String, f64)],
) -> Result<(f64, f64)> {
    let flags: Vec<bool> = scores
        .iter()
        .map(|(id, _)| positives.contains(id))
        .collect();
    let values: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
    let (pos, neg): (Vec<_>, Vec<_>) = flags.iter().zip(&values).partition(|(f, _)| **f);
    let pos: Vec<f64> = pos.into_iter().map(|(_, s)| *s).collect();
    let neg: Vec<f64> = neg.into_iter().map(|(_, s)| *s).collect();
    let a = auc(&pos, &neg)?;
    let p = precision_at_flags(&flags, &values, pos.len())?;
    Ok((a, p))
}
