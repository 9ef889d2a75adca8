//! Plain-text `key = value` model files. Reals are written with 17
//! significant digits so a reloaded model predicts bit-identically.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{AblationMode, FitDiagnostics, FittedModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn reals(xs: &[f64]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(" ")
}

impl FittedModel {
    /// Serialises the model. `config` pairs are echoed as `config.<key>`
    /// lines and ignored on load.
    pub fn to_text(&self, config: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# hyperloop fitted model");
        let _ = writeln!(s, "format = {MODEL_FORMAT_VERSION}");
        let _ = writeln!(s, "version = {}", crate::VERSION);
        let _ = writeln!(s, "tau_max = {}", self.tau_max);
        let _ = writeln!(s, "gamma = {}", real(self.gamma));
        let _ = writeln!(s, "lambda = {}", real(self.ridge_lambda));
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "intercept = {}", real(self.intercept));
        let _ = writeln!(s, "alpha = {}", reals(&self.alpha));
        let _ = writeln!(s, "beta = {}", reals(&self.beta));
        let _ = writeln!(s, "mean = {}", reals(&self.means));
        let _ = writeln!(s, "scale = {}", reals(&self.scales));
        let d = &self.diagnostics;
        let _ = writeln!(s, "log_likelihood = {}", real(d.log_likelihood));
        let _ = writeln!(s, "iterations = {}", d.iterations);
        let _ = writeln!(s, "converged = {}", d.converged);
        let profile: Vec<String> = d
            .gamma_profile
            .iter()
            .map(|(g, v)| format!("{}:{}", real(*g), real(*v)))
            .collect();
        let _ = writeln!(s, "gamma_profile = {}", profile.join(" "));
        for (k, v) in config {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv: HashMap<&str, &str> = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::ModelFormat(format!("line {}: expected `key = value`", no + 1))
            })?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| Error::ModelFormat(format!("missing key `{k}`")))
        };
        let parse_real = |k: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("`{k}`: bad number `{v}`")))
        };
        let real_of = |k: &str| get(k).and_then(|v| parse_real(k, v));
        let vec_of = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split_whitespace()
                .map(|v| parse_real(k, v))
                .collect()
        };

        let format: u32 = get("format")?
            .parse()
            .map_err(|_| Error::ModelFormat("bad format number".into()))?;
        if format != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported format {format}")));
        }
        let tau_max: usize = get("tau_max")?
            .parse()
            .map_err(|_| Error::ModelFormat("bad tau_max".into()))?;
        if tau_max < 2 {
            return Err(Error::InvalidTauMax(tau_max));
        }
        let model = FittedModel {
            tau_max,
            gamma: real_of("gamma")?,
            ridge_lambda: real_of("lambda")?,
            mode: get("mode")?.parse::<AblationMode>()?,
            intercept: real_of("intercept")?,
            alpha: vec_of("alpha")?,
            beta: vec_of("beta")?,
            means: vec_of("mean")?,
            scales: vec_of("scale")?,
            diagnostics: FitDiagnostics {
                log_likelihood: real_of("log_likelihood").unwrap_or(f64::NAN),
                iterations: kv
                    .get("iterations")
                    .and_then(|v| v.parse().ok())
                    .unwrap_or(0),
                converged: kv.get("converged").is_some_and(|v| *v == "true"),
                gamma_profile: kv
                    .get("gamma_profile")
                    .map(|v| {
                        v.split_whitespace()
                            .filter_map(|p| {
                                let (g, l) = p.split_once(':')?;
                                Some((g.parse().ok()?, l.parse().ok()?))
                            })
                            .collect()
                    })
                    .unwrap_or_default(),
            },
        };
        let half = tau_max - 1;
        let dim = 2 * half;
        if model.alpha.len() != half
            || model.beta.len() != half
            || model.means.len() != dim
            || model.scales.len() != dim
        {
            return Err(Error::ModelFormat(format!(
                "vector lengths do not match tau_max = {tau_max}"
            )));
        }
        if model.scales.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::ModelFormat("scales must be positive".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::PerturbationFeatures;

    fn sample() -> FittedModel {
        FittedModel {
            tau_max: 3,
            gamma: 0.30000000000000004,
            ridge_lambda: 1e-6,
            mode: AblationMode::HyperlinkOnly,
            intercept: -0.123456789012345678,
            alpha: vec![0.0, 0.0],
            beta: vec![1.0 / 3.0, -2.0f64.sqrt()],
            means: vec![0.1, 0.2, std::f64::consts::PI, -1e-300],
            scales: vec![1.0, 1.0, 0.7, 5e5],
            diagnostics: FitDiagnostics {
                log_likelihood: -12.5,
                iterations: 7,
                converged: true,
                gamma_profile: vec![(0.0, -13.0), (0.1, -12.5)],
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let text = m.to_text(&[("seed".into(), "42".into())]);
        assert!(text.contains("config.seed = 42"));
        let back = FittedModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        let f = PerturbationFeatures {
            delta: vec![0.3, -1.1, 2.5, 0.01],
            cardinality: 4,
            label: None,
        };
        assert_eq!(
            m.predict_proba(&f).unwrap().to_bits(),
            back.predict_proba(&f).unwrap().to_bits()
        );
    }

    #[test]
    fn rejects_bad_files() {
        assert!(FittedModel::from_text("format = 1\n").is_err());
        let text = sample().to_text(&[]).replace("tau_max = 3", "tau_max = 4");
        assert!(matches!(
            FittedModel::from_text(&text),
            Err(Error::ModelFormat(_))
        ));
        let text = sample().to_text(&[]).replace("format = 1", "format = 9");
        assert!(FittedModel::from_text(&text).is_err());
    }
}
