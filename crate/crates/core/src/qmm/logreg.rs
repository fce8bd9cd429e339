use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Session, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegOptions {
    pub l2_lambda: f64,
    pub max_epochs: usize,
    /// Stop once the gradient's Euclidean norm falls to this value.
    pub grad_tol: f64,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-3,
            max_epochs: 1000,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_records: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub seed: u64,
    pub epochs: usize,
    pub converged: bool,
    pub final_loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub intercept: f64,
    /// One weight per vocabulary entry, in vocabulary order.
    pub weights: Vec<f64>,
    pub l2_lambda: f64,
    pub vocabulary: Vocabulary,
    pub meta: TrainingMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogRegModel {
    pub fn intercept_only(vocabulary: Vocabulary, intercept: f64, l2_lambda: f64) -> Self {
        let weights = vec![0.0; vocabulary.len()];
        Self {
            intercept,
            weights,
            l2_lambda,
            vocabulary,
            meta: TrainingMeta::default(),
        }
    }

    /// Score of a query set; repeated and out-of-vocabulary queries add nothing.
    pub fn score_queries<'a>(&self, queries: impl IntoIterator<Item = &'a str>) -> f64 {
        let z = self.intercept
            + self
                .vocabulary
                .encode(queries)
                .iter()
                .map(|&k| self.weights[k as usize])
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn score_session(&self, session: &Session) -> f64 {
        self.score_queries(session.queries.iter().map(String::as_str))
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.vocabulary.len() {
            return Err(Error::InvalidInput(format!(
                "model has {} weights for {} vocabulary entries",
                self.weights.len(),
                self.vocabulary.len()
            )));
        }
        Ok(())
    }
}

/// Mean log-loss plus `lambda/2 * |theta[1..]|^2` and its gradient.
/// `theta[0]` is the intercept; `rows` hold active feature indices (0-based
/// into `theta[1..]`); `y` is 0 or 1.
pub fn objective(theta: &[f64], rows: &[Vec<u32>], y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for (row, &t) in rows.iter().zip(y) {
        let z = theta[0] + row.iter().map(|&k| theta[k as usize + 1]).sum::<f64>();
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        grad[0] += r;
        for &k in row {
            grad[k as usize + 1] += r;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for k in 1..theta.len() {
        loss += 0.5 * lambda * theta[k] * theta[k];
        grad[k] += lambda * theta[k];
    }
    (loss, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: Vec<f64>,
    /// Objective after each epoch, starting with the value at zero.
    pub losses: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Full-batch gradient descent from zero with Barzilai-Borwein step
/// proposals and Armijo backtracking.
pub fn fit_design(
    rows: &[Vec<u32>],
    y: &[f64],
    n_features: usize,
    opts: &LogRegOptions,
) -> FitResult {
    let mut theta = vec![0.0; n_features + 1];
    let (mut f, mut g) = objective(&theta, rows, y, opts.l2_lambda);
    let mut losses = vec![f];
    let mut step = 1.0;
    let mut epochs = 0;
    let mut gn = norm(&g);
    while gn > opts.grad_tol && epochs < opts.max_epochs {
        let gg = gn * gn;
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t - alpha * d).collect();
            let (fc, gc) = objective(&cand, rows, y, opts.l2_lambda);
            if fc <= f - 1e-4 * alpha * gg {
                accepted = Some((cand, fc, gc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&dy).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e10)
        } else {
            alpha * 2.0
        };
        theta = cand;
        f = fc;
        g = gc;
        gn = norm(&g);
        losses.push(f);
        epochs += 1;
    }
    FitResult {
        theta,
        losses,
        epochs,
        converged: gn <= opts.grad_tol,
        grad_norm: gn,
    }
}

/// Trains on labeled ±1 sessions; also returns the per-epoch loss trace.
pub fn train_logreg_traced(
    sessions: &[&Session],
    vocabulary: Vocabulary,
    opts: &LogRegOptions,
    seed: u64,
) -> Result<(LogRegModel, Vec<f64>)> {
    let mut y = Vec::with_capacity(sessions.len());
    for s in sessions {
        y.push(s.target().ok_or_else(|| {
            Error::InvalidInput(format!(
                "session {} {} is not labeled +1/-1",
                s.user_id, s.window
            ))
        })?);
    }
    if sessions.is_empty() {
        return Err(Error::InsufficientData(
            "no sessions to train the query model".into(),
        ));
    }
    let rows: Vec<Vec<u32>> = sessions
        .par_iter()
        .map(|s| vocabulary.encode(s.queries.iter().map(String::as_str)))
        .collect();
    let fit = fit_design(&rows, &y, vocabulary.len(), opts);
    if !fit.converged {
        log::warn!(
            "query model stopped after {} epochs with gradient norm {:.3e} (tolerance {:.0e}); keeping best iterate",
            fit.epochs,
            fit.grad_norm,
            opts.grad_tol
        );
    }
    let n_positive = y.iter().filter(|t| **t > 0.5).count();
    let meta = TrainingMeta {
        n_records: y.len(),
        n_positive,
        n_negative: y.len() - n_positive,
        seed,
        epochs: fit.epochs,
        converged: fit.converged,
        final_loss: *fit.losses.last().expect("initial loss"),
        grad_norm: fit.grad_norm,
    };
    let model = LogRegModel {
        intercept: fit.theta[0],
        weights: fit.theta[1..].to_vec(),
        l2_lambda: opts.l2_lambda,
        vocabulary,
        meta,
    };
    Ok((model, fit.losses))
}

pub fn train_logreg(
    sessions: &[&Session],
    vocabulary: Vocabulary,
    opts: &LogRegOptions,
    seed: u64,
) -> Result<LogRegModel> {
    train_logreg_traced(sessions, vocabulary, opts, seed).map(|(m, _)| m)
}
