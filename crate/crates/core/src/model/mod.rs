//! Cardinality-scaled logistic model over perturbation features.
//!
//! For a fixed scaling exponent `γ`, the log-odds of a candidate `e` is
//! `c + ⟨(α, β), |e|^{−γ} Δ⟩` where `Δ` is its perturbation feature vector.
//! Features are standardised on the training rows after scaling, and the
//! coefficients are stored in that standardised space together with the
//! transform.

mod io;
pub mod logistic;
pub mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::spectrum::{Label, PerturbationFeatures};
use logistic::{maximize, sigmoid, LogisticObjective, NewtonOptions};

pub use io::MODEL_FORMAT_VERSION;
pub use select::{select_tau_c, select_tau_c_from_features, stratified_folds, TauSelection};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;
pub const DEFAULT_TAU_MAX: usize = 8;
pub const DEFAULT_TAU_GRID: [usize; 9] = [6, 7, 8, 9, 10, 11, 12, 13, 14];

/// Relative tolerance under which two log-likelihoods count as tied.
const LIKELIHOOD_TIE: f64 = 1e-9;

/// Which feature blocks enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum AblationMode {
    #[default]
    Full,
    NodeOnly,
    HyperlinkOnly,
}

impl AblationMode {
    fn keeps(self, column: usize, block_len: usize) -> bool {
        match self {
            AblationMode::Full => true,
            AblationMode::NodeOnly => column < block_len,
            AblationMode::HyperlinkOnly => column >= block_len,
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::Full => "full",
            AblationMode::NodeOnly => "node-only",
            AblationMode::HyperlinkOnly => "hyperlink-only",
        })
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AblationMode::Full),
            "node-only" => Ok(AblationMode::NodeOnly),
            "hyperlink-only" => Ok(AblationMode::HyperlinkOnly),
            other => Err(Error::Config(format!("unknown ablation mode `{other}`"))),
        }
    }
}

/// `|e|^{−γ} · Δ`.
pub fn design_row(f: &PerturbationFeatures, gamma: f64) -> Vec<f64> {
    let scale = (f.cardinality as f64).powf(-gamma);
    f.delta.iter().map(|d| d * scale).collect()
}

/// Evenly spaced grid `min, min+step, …, max`, each point computed as
/// `min + i·step` and rounded to 12 decimals.
pub fn gamma_grid(min: f64, step: f64, max: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && step.is_finite() && max.is_finite()) || min < 0.0 || max < min {
        return Err(Error::Config(format!("bad gamma grid {min}:{step}:{max}")));
    }
    if step <= 0.0 {
        return if min == max {
            Ok(vec![min])
        } else {
            Err(Error::Config(format!(
                "gamma step must be positive, got {step}"
            )))
        };
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

pub fn default_gamma_grid() -> Vec<f64> {
    gamma_grid(0.0, 0.1, 2.0).expect("static grid")
}

/// Labelled perturbation features. Holds at least one row of each label and a
/// single feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    rows: Vec<(PerturbationFeatures, Label)>,
}

impl TrainingSet {
    pub fn new(rows: Vec<(PerturbationFeatures, Label)>) -> Result<Self> {
        let has = |l: Label| rows.iter().any(|(_, x)| *x == l);
        if !has(Label::Positive) || !has(Label::Negative) {
            return Err(Error::DegenerateLabels);
        }
        let dim = rows[0].0.delta.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        if let Some((f, _)) = rows.iter().find(|(f, _)| f.delta.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: f.delta.len(),
            });
        }
        Ok(Self { rows })
    }

    /// Uses each feature's own label; unlabelled rows are rejected.
    pub fn from_labelled(features: Vec<PerturbationFeatures>) -> Result<Self> {
        let rows = features
            .into_iter()
            .map(|f| match f.label {
                Some(l) => Ok((f, l)),
                None => Err(Error::InsufficientData("unlabelled training row".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[(PerturbationFeatures, Label)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].0.delta.len()
    }

    pub fn tau_max(&self) -> usize {
        self.dim() / 2 + 1
    }

    pub fn positive_fraction(&self) -> f64 {
        let pos = self
            .rows
            .iter()
            .filter(|(_, l)| *l == Label::Positive)
            .count();
        pos as f64 / self.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.rows[i].clone()).collect())
    }
}

/// Per-column affine transform `(x − mean) / scale`. Columns marked inactive
/// are constant on the training rows (or excluded by the ablation mode) and
/// carry a zero coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub active: Vec<bool>,
}

impl Standardization {
    fn fit(rows: &[Vec<f64>], mode: AblationMode, standardize: bool) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        let mut scales = vec![1.0; dim];
        let mut active = vec![false; dim];
        for j in 0..dim {
            if !mode.keeps(j, dim / 2) {
                continue;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd <= 1e-12 * mean.abs().max(1.0) {
                continue;
            }
            active[j] = true;
            if standardize {
                means[j] = mean;
                scales[j] = sd;
            }
        }
        Self {
            means,
            scales,
            active,
        }
    }

    fn active_columns(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&j| self.active[j]).collect()
    }

    fn apply_active(&self, row: &[f64], columns: &[usize]) -> Vec<f64> {
        columns
            .iter()
            .map(|&j| (row[j] - self.means[j]) / self.scales[j])
            .collect()
    }
}

/// Options shared by every fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub ridge_lambda: f64,
    pub mode: AblationMode,
    pub standardize: bool,
    pub criterion: GammaCriterion,
    pub newton: NewtonOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            mode: AblationMode::Full,
            standardize: true,
            criterion: GammaCriterion::Likelihood,
            newton: NewtonOptions::default(),
        }
    }
}

/// How the scaling exponent is chosen from its grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaCriterion {
    /// Highest penalised training log-likelihood.
    Likelihood,
    /// Highest mean validation AUC over stratified folds.
    ValidationAuc { folds: usize, seed: u64 },
}

/// Outcome of the Newton fit at one `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGammaFit {
    pub gamma: f64,
    pub intercept: f64,
    /// Full-length coefficients in standardised space; inactive columns are 0.
    pub coefficients: Vec<f64>,
    pub standardization: Standardization,
    /// Penalised log-likelihood at the returned iterate.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when the iteration limit was hit or, without a ridge penalty,
    /// when the data are perfectly separated and no finite optimum exists.
    pub converged: bool,
    pub history: Vec<f64>,
}

pub fn fit_fixed_gamma(data: &TrainingSet, gamma: f64, opts: &FitOptions) -> Result<FixedGammaFit> {
    if !(gamma >= 0.0) || !(opts.ridge_lambda >= 0.0) {
        return Err(Error::Config(format!(
            "gamma ({gamma}) and lambda ({}) must be non-negative",
            opts.ridge_lambda
        )));
    }
    let scaled: Vec<Vec<f64>> = data
        .rows
        .iter()
        .map(|(f, _)| design_row(f, gamma))
        .collect();
    let standardization = Standardization::fit(&scaled, opts.mode, opts.standardize);
    let columns = standardization.active_columns();
    let design: Vec<Vec<f64>> = scaled
        .iter()
        .map(|r| standardization.apply_active(r, &columns))
        .collect();
    let signs: Vec<f64> = data.rows.iter().map(|(_, l)| l.sign()).collect();
    let objective = LogisticObjective::new(design, signs, opts.ridge_lambda);

    let p = data.positive_fraction();
    let mut start = vec![0.0; columns.len() + 1];
    start[0] = (p / (1.0 - p)).ln();
    let res = maximize(&objective, start, &opts.newton);

    let separated = opts.ridge_lambda == 0.0
        && !columns.is_empty()
        && objective.margins(&res.theta).iter().all(|&m| m > 0.0);

    let mut coefficients = vec![0.0; data.dim()];
    for (k, &j) in columns.iter().enumerate() {
        coefficients[j] = res.theta[k + 1];
    }
    Ok(FixedGammaFit {
        gamma,
        intercept: res.theta[0],
        coefficients,
        standardization,
        log_likelihood: res.value,
        iterations: res.iterations,
        converged: res.converged && !separated,
        history: res.history,
    })
}

/// A fitted predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub tau_max: usize,
    pub gamma: f64,
    pub ridge_lambda: f64,
    pub mode: AblationMode,
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

/// Bookkeeping from the fit; not needed for prediction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDiagnostics {
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(γ, criterion value)` for every grid point, in grid order.
    pub gamma_profile: Vec<(f64, f64)>,
}

impl FittedModel {
    fn from_fit(fit: FixedGammaFit, opts: &FitOptions, profile: Vec<(f64, f64)>) -> Self {
        let half = fit.coefficients.len() / 2;
        Self {
            tau_max: half + 1,
            gamma: fit.gamma,
            ridge_lambda: opts.ridge_lambda,
            mode: opts.mode,
            intercept: fit.intercept,
            alpha: fit.coefficients[..half].to_vec(),
            beta: fit.coefficients[half..].to_vec(),
            means: fit.standardization.means,
            scales: fit.standardization.scales,
            diagnostics: FitDiagnostics {
                log_likelihood: fit.log_likelihood,
                iterations: fit.iterations,
                converged: fit.converged,
                gamma_profile: profile,
            },
        }
    }

    pub fn dim(&self) -> usize {
        2 * (self.tau_max - 1)
    }

    fn coefficient(&self, j: usize) -> f64 {
        let half = self.tau_max - 1;
        if j < half {
            self.alpha[j]
        } else {
            self.beta[j - half]
        }
    }

    pub fn linear_predictor(&self, f: &PerturbationFeatures) -> Result<f64> {
        if f.delta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.delta.len(),
            });
        }
        let row = design_row(f, self.gamma);
        let mut eta = self.intercept;
        for (j, x) in row.iter().enumerate() {
            let w = self.coefficient(j);
            if w != 0.0 {
                eta += w * ((x - self.means[j]) / self.scales[j]);
            }
        }
        Ok(eta)
    }

    pub fn predict_proba(&self, f: &PerturbationFeatures) -> Result<f64> {
        self.linear_predictor(f).map(sigmoid)
    }

    /// Intercept and coefficients acting directly on `design_row(f, γ)`.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let mut intercept = self.intercept;
        let coef = (0..self.dim())
            .map(|j| {
                let w = self.coefficient(j);
                intercept -= w * self.means[j] / self.scales[j];
                w / self.scales[j]
            })
            .collect();
        (intercept, coef)
    }
}

/// Fits at every `γ` on the grid and keeps the best by `opts.criterion`.
/// Ties go to the smaller `γ`.
pub fn fit(data: &TrainingSet, gamma_grid: &[f64], opts: &FitOptions) -> Result<FittedModel> {
    if gamma_grid.is_empty() {
        return Err(Error::Config("empty gamma grid".into()));
    }
    let mut grid = gamma_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    match opts.criterion {
        GammaCriterion::Likelihood => {
            let fits = grid
                .iter()
                .map(|&g| fit_fixed_gamma(data, g, opts))
                .collect::<Result<Vec<_>>>()?;
            let best = fits
                .iter()
                .map(|f| f.log_likelihood)
                .fold(f64::NEG_INFINITY, f64::max);
            let tol = LIKELIHOOD_TIE * best.abs().max(1.0);
            let profile = fits.iter().map(|f| (f.gamma, f.log_likelihood)).collect();
            let chosen = fits
                .into_iter()
                .find(|f| f.log_likelihood >= best - tol)
                .expect("non-empty grid");
            Ok(FittedModel::from_fit(chosen, opts, profile))
        }
        GammaCriterion::ValidationAuc { folds, seed } => {
            let labels: Vec<Label> = data.rows.iter().map(|(_, l)| *l).collect();
            let split = stratified_folds(&labels, folds, seed)?;
            let inner = FitOptions {
                criterion: GammaCriterion::Likelihood,
                ..opts.clone()
            };
            let mut profile = Vec::with_capacity(grid.len());
            for &g in &grid {
                let mut total = 0.0;
                for k in 0..split.len() {
                    let (train, val) = select::fold_partition(&split, k);
                    let model = fit(&data.subset(&train)?, &[g], &inner)?;
                    total += validation_auc(&model, data, &val)?;
                }
                profile.push((g, total / split.len() as f64));
            }
            let mut best = profile[0];
            for &p in &profile[1..] {
                if p.1 > best.1 {
                    best = p;
                }
            }
            let fit = fit_fixed_gamma(data, best.0, opts)?;
            Ok(FittedModel::from_fit(fit, opts, profile))
        }
    }
}

pub(crate) fn validation_auc(
    model: &FittedModel,
    data: &TrainingSet,
    rows: &[usize],
) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &i in rows {
        let (f, l) = &data.rows[i];
        let s = model.linear_predictor(f)?;
        match l {
            Label::Positive => pos.push(s),
            Label::Negative => neg.push(s),
        }
    }
    auc(&pos, &neg)
}
