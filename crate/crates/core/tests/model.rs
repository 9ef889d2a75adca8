use hyperloop::metrics::auc;
use hyperloop::model::logistic::{maximize, sigmoid, LogisticObjective, NewtonOptions};
use hyperloop::model::{
    default_gamma_grid, fit, fit_fixed_gamma, select_tau_c_from_features, AblationMode, FitOptions,
    FittedModel, TrainingSet,
};
use hyperloop::{Label, PerturbationFeatures};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Rows whose labels are drawn from the logistic model with the given raw
/// coefficients acting on `|e|^{−γ} Δ`.
struct Planted {
    intercept: f64,
    coef: Vec<f64>,
    gamma: f64,
    cards: (usize, usize),
}

impl Planted {
    fn probability(&self, f: &PerturbationFeatures) -> f64 {
        let s = (f.cardinality as f64).powf(-self.gamma);
        let eta = self.intercept
            + self
                .coef
                .iter()
                .zip(&f.delta)
                .map(|(w, x)| w * x * s)
                .sum::<f64>();
        sigmoid(eta)
    }

    fn features(&self, rng: &mut ChaCha8Rng) -> PerturbationFeatures {
        PerturbationFeatures {
            delta: (0..self.coef.len())
                .map(|_| StandardNormal.sample(rng))
                .collect(),
            cardinality: rng.random_range(self.cards.0..=self.cards.1),
            label: None,
        }
    }

    fn rows(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<(PerturbationFeatures, Label)> {
        (0..count)
            .map(|_| {
                let f = self.features(rng);
                let label = if rng.random::<f64>() < self.probability(&f) {
                    Label::Positive
                } else {
                    Label::Negative
                };
                (f, label)
            })
            .collect()
    }

    fn training(&self, seed: u64, count: usize) -> TrainingSet {
        TrainingSet::new(self.rows(&mut ChaCha8Rng::seed_from_u64(seed), count)).unwrap()
    }
}

fn scores(model: &FittedModel, rows: &[(PerturbationFeatures, Label)]) -> (Vec<f64>, Vec<f64>) {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (f, l) in rows {
        let s = model.linear_predictor(f).unwrap();
        match l {
            Label::Positive => pos.push(s),
            Label::Negative => neg.push(s),
        }
    }
    (pos, neg)
}

fn ranking(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn random_objective(seed: u64, lambda: f64) -> LogisticObjective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..5).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let signs = (0..200)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    LogisticObjective::new(design, signs, lambda)
}

#[test]
fn gradient_matches_central_differences() {
    let obj = random_objective(11, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-5;
    for _ in 0..10 {
        let theta: Vec<f64> = (0..obj.n_params())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let analytic = obj.gradient(&theta);
        let numeric: Vec<f64> = (0..theta.len())
            .map(|k| {
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[k] += h;
                down[k] -= h;
                (obj.value(&up) - obj.value(&down)) / (2.0 * h)
            })
            .collect();
        let err: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err / norm < 1e-6, "relative error {}", err / norm);
    }
}

#[test]
fn newton_never_decreases_the_objective() {
    for seed in 0..5 {
        let obj = random_objective(seed, 1e-6);
        let start = vec![3.0; obj.n_params()];
        let res = maximize(&obj, start, &NewtonOptions::default());
        assert!(res.converged);
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }
}

#[test]
fn planted_coefficients_are_recovered() {
    let planted = Planted {
        intercept: 1.0,
        coef: vec![1.2, -1.0, 1.0, 1.5],
        gamma: 0.0,
        cards: (2, 2),
    };
    let data = planted.training(3, 10_000);
    let model = fit(&data, &[0.0], &FitOptions::default()).unwrap();
    let (c, w) = model.raw_coefficients();
    assert!(
        ((c - planted.intercept) / planted.intercept).abs() < 0.1,
        "intercept {c}"
    );
    for (got, want) in w.iter().zip(&planted.coef) {
        assert!(((got - want) / want).abs() < 0.1, "{got} vs {want}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut diffs: Vec<f64> = (0..1000)
        .map(|_| {
            let f = planted.features(&mut rng);
            (model.predict_proba(&f).unwrap() - planted.probability(&f)).abs()
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    assert!(diffs[989] < 0.05, "99th percentile {}", diffs[989]);
    assert!(diffs.iter().sum::<f64>() / 1000.0 < 0.02);
}

#[test]
fn scaling_exponent_is_recovered() {
    let planted = Planted {
        intercept: 0.0,
        coef: vec![4.0, -3.0, 3.0, 2.0],
        gamma: 1.0,
        cards: (2, 6),
    };
    let hits = (0..10)
        .filter(|&seed| {
            let model = fit(
                &planted.training(100 + seed, 4000),
                &default_gamma_grid(),
                &FitOptions::default(),
            )
            .unwrap();
            (0.8..=1.2).contains(&model.gamma)
        })
        .count();
    assert!(hits >= 9, "{hits} of 10");
}

#[test]
fn uniform_cardinality_makes_gamma_irrelevant() {
    let planted = Planted {
        intercept: -0.5,
        coef: vec![1.0, 0.5, -1.0, 0.3],
        gamma: 0.0,
        cards: (3, 3),
    };
    let data = planted.training(5, 600);
    let probe: Vec<PerturbationFeatures> = planted
        .rows(&mut ChaCha8Rng::seed_from_u64(6), 200)
        .into_iter()
        .map(|r| r.0)
        .collect();
    let opts = FitOptions::default();
    let reference = fit(&data, &[0.0], &opts).unwrap();
    let base: Vec<f64> = probe
        .iter()
        .map(|f| reference.linear_predictor(f).unwrap())
        .collect();
    for &g in &default_gamma_grid() {
        let m = fit(&data, &[g], &opts).unwrap();
        let s: Vec<f64> = probe
            .iter()
            .map(|f| m.linear_predictor(f).unwrap())
            .collect();
        assert_eq!(ranking(&s), ranking(&base), "gamma {g}");
        for (a, b) in s.iter().zip(&base) {
            assert!((a - b).abs() < 1e-6);
        }
    }
    assert_eq!(fit(&data, &default_gamma_grid(), &opts).unwrap().gamma, 0.0);
}

#[test]
fn constant_shift_leaves_ranking_unchanged() {
    let planted = Planted {
        intercept: 0.2,
        coef: vec![0.8, -0.6, 1.1, 0.4],
        gamma: 0.0,
        cards: (4, 4),
    };
    let rows = planted.rows(&mut ChaCha8Rng::seed_from_u64(8), 800);
    let shift = [3.0, -7.5, 0.25, 12.0];
    let shifted: Vec<(PerturbationFeatures, Label)> = rows
        .iter()
        .map(|(f, l)| {
            let mut g = f.clone();
            g.delta.iter_mut().zip(&shift).for_each(|(x, s)| *x += s);
            (g, *l)
        })
        .collect();
    let opts = FitOptions::default();
    let a = fit(
        &TrainingSet::new(rows.clone()).unwrap(),
        &default_gamma_grid(),
        &opts,
    )
    .unwrap();
    let b = fit(
        &TrainingSet::new(shifted.clone()).unwrap(),
        &default_gamma_grid(),
        &opts,
    )
    .unwrap();
    let sa: Vec<f64> = rows
        .iter()
        .map(|(f, _)| a.linear_predictor(f).unwrap())
        .collect();
    let sb: Vec<f64> = shifted
        .iter()
        .map(|(f, _)| b.linear_predictor(f).unwrap())
        .collect();
    assert_eq!(ranking(&sa), ranking(&sb));
}

#[test]
fn model_files_reproduce_predictions_exactly() {
    let planted = Planted {
        intercept: 0.3,
        coef: vec![0.9, -0.2, 0.4, 1.3, -0.7, 0.1],
        gamma: 0.7,
        cards: (2, 5),
    };
    let data = planted.training(9, 500);
    let model = fit(&data, &default_gamma_grid(), &FitOptions::default()).unwrap();
    let text = model.to_text(&[("seed".into(), "9".into())]);
    let back = FittedModel::from_text(&text).unwrap();
    for (f, _) in data.rows() {
        assert_eq!(
            model.predict_proba(f).unwrap().to_bits(),
            back.predict_proba(f).unwrap().to_bits()
        );
    }
    assert_eq!(back.to_text(&[("seed".into(), "9".into())]), text);
}

#[test]
fn noise_cutoff_loses_to_informative_cutoff() {
    // Columns for the shorter cutoff are pure noise; the longer cutoff adds
    // the informative ones.
    let wins = (0..10)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let features: Vec<PerturbationFeatures> = (0..300)
                .map(|_| {
                    let delta: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let eta = 1.5 * delta[1] - 1.5 * delta[3];
                    let label = if rng.random::<f64>() < sigmoid(eta) {
                        Label::Positive
                    } else {
                        Label::Negative
                    };
                    PerturbationFeatures {
                        delta,
                        cardinality: 2,
                        label: Some(label),
                    }
                })
                .collect();
            let sel = select_tau_c_from_features(
                &features,
                &[2, 3],
                5,
                seed,
                &[0.0],
                &FitOptions::default(),
            )
            .unwrap();
            sel.tau_max == 3
        })
        .count();
    assert!(wins >= 9, "{wins} of 10");
}

fn split_signal(
    seed: u64,
    rows: usize,
    node_signal: f64,
    link_signal: f64,
    constant_node: bool,
) -> Vec<(PerturbationFeatures, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            let mut delta: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
            if constant_node {
                delta[..3].fill(0.7);
            }
            let eta = node_signal * (delta[0] + delta[1]) + link_signal * (delta[3] - delta[4]);
            let label = if rng.random::<f64>() < sigmoid(eta) {
                Label::Positive
            } else {
                Label::Negative
            };
            (
                PerturbationFeatures {
                    delta,
                    cardinality: 3,
                    label: None,
                },
                label,
            )
        })
        .collect()
}

fn held_out_auc(
    rows: &[(PerturbationFeatures, Label)],
    test_rows: usize,
    mode: AblationMode,
) -> f64 {
    let (test, train) = rows.split_at(test_rows);
    let opts = FitOptions {
        mode,
        ..FitOptions::default()
    };
    let model = fit(&TrainingSet::new(train.to_vec()).unwrap(), &[0.0], &opts).unwrap();
    let (pos, neg) = scores(&model, test);
    auc(&pos, &neg).unwrap()
}

#[test]
fn node_only_without_node_signal_is_chance() {
    let rows = split_signal(21, 1500, 0.0, 1.5, true);
    assert_eq!(held_out_auc(&rows, 750, AblationMode::NodeOnly), 0.5);
    assert!(held_out_auc(&rows, 750, AblationMode::Full) > 0.75);
}

#[test]
fn full_matches_node_only_when_only_nodes_carry_signal() {
    let diffs: Vec<f64> = (0..12)
        .map(|r| {
            let rows = split_signal(300 + r, 20_200, 1.0, 0.0, false);
            held_out_auc(&rows, 200, AblationMode::Full)
                - held_out_auc(&rows, 200, AblationMode::NodeOnly)
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = mean / (sd / n.sqrt());
    let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(t.abs()));
    assert!(p > 0.05, "paired t = {t}, p = {p}");
}

#[test]
fn fixed_gamma_fit_reports_every_iterate() {
    let planted = Planted {
        intercept: 0.0,
        coef: vec![1.0, 1.0],
        gamma: 0.0,
        cards: (2, 2),
    };
    let fit = fit_fixed_gamma(&planted.training(1, 300), 0.0, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert_eq!(fit.history.len(), fit.iterations + 1);
    assert_eq!(*fit.history.last().unwrap(), fit.log_likelihood);
}

proptest! {
    #[test]
    fn probability_is_monotone_in_the_predictor(a in -20.0f64..20.0, gap in 1e-3f64..5.0) {
        prop_assert!(sigmoid(a) < sigmoid(a + gap));
        prop_assert!((0.0..=1.0).contains(&sigmoid(a)));
    }
}
