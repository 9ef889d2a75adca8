//! Ridge-penalised logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};

/// Numerically stable `log σ(z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Penalised log-likelihood `Σ log σ(yᵢ ηᵢ) − λ‖w‖²` with
/// `ηᵢ = θ₀ + Σⱼ θⱼ xᵢⱼ`. The intercept `θ₀` is not penalised.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    design: Vec<Vec<f64>>,
    signs: Vec<f64>,
    lambda: f64,
    dim: usize,
}

impl LogisticObjective {
    /// `design` rows must share one length; `signs` are ±1.
    pub fn new(design: Vec<Vec<f64>>, signs: Vec<f64>, lambda: f64) -> Self {
        assert_eq!(design.len(), signs.len());
        let dim = design.first().map_or(0, Vec::len);
        assert!(design.iter().all(|r| r.len() == dim), "ragged design");
        Self {
            design,
            signs,
            lambda,
            dim,
        }
    }

    /// Number of parameters, intercept included.
    pub fn n_params(&self) -> usize {
        self.dim + 1
    }

    pub fn n_rows(&self) -> usize {
        self.design.len()
    }

    pub fn linear_predictor(&self, theta: &[f64], row: usize) -> f64 {
        theta[0]
            + self.design[row]
                .iter()
                .zip(&theta[1..])
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn margins(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| self.signs[i] * self.linear_predictor(theta, i))
            .collect()
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let ll: f64 = self.margins(theta).into_iter().map(log_sigmoid).sum();
        ll - self.lambda * theta[1..].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_params()];
        for (i, row) in self.design.iter().enumerate() {
            let y = self.signs[i];
            let r = y * sigmoid(-y * self.linear_predictor(theta, i));
            g[0] += r;
            for (gj, x) in g[1..].iter_mut().zip(row) {
                *gj += r * x;
            }
        }
        for (gj, w) in g[1..].iter_mut().zip(&theta[1..]) {
            *gj -= 2.0 * self.lambda * w;
        }
        g
    }

    /// Negated Hessian `Xᵀ W X + 2λ I'`, positive semi-definite.
    pub fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = self.n_params();
        let mut h = DMatrix::zeros(d, d);
        let mut x = vec![1.0; d];
        for (i, row) in self.design.iter().enumerate() {
            let p = sigmoid(self.linear_predictor(theta, i));
            let w = p * (1.0 - p);
            x[1..].copy_from_slice(row);
            for a in 0..d {
                let wa = w * x[a];
                for b in a..d {
                    h[(a, b)] += wa * x[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        for j in 1..d {
            h[(j, j)] += 2.0 * self.lambda;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(1.0, f64::max);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            let step = chol.solve(g);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 10.0
        };
    }
    None
}

/// Maximises `objective` from `start`. Every accepted step is non-decreasing
/// in the objective; a step is halved until that holds.
pub fn maximize(
    objective: &LogisticObjective,
    start: Vec<f64>,
    opts: &NewtonOptions,
) -> NewtonResult {
    let mut theta = start;
    let mut value = objective.value(&theta);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let g = DVector::from_vec(objective.gradient(&theta));
        if g.iter().all(|&x| x == 0.0) {
            converged = true;
            break;
        }
        let Some(step) = solve_spd(&objective.neg_hessian(&theta), &g) else {
            break;
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + t * d)
                .collect();
            let v = objective.value(&cand);
            if v >= value {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            // no ascent left at working precision
            converged = true;
            break;
        };
        let change = v - value;
        theta = cand;
        value = v;
        history.push(value);
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }

    NewtonResult {
        theta,
        value,
        iterations,
        converged,
        history,
    }
}
