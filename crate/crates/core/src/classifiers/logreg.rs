//! Binary logistic regression by full-batch gradient descent on the
//! L2-regularized mean log-loss. The bias is not regularized.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 0.01,
            epochs: 500,
            lr: 0.5,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Loss before the first step and after each accepted epoch.
    pub loss_history: Vec<f64>,
}

/// `(1/n) Σ ln(1 + e^{-s z}) + (l2/2)‖w‖²` with `s = ±1`.
pub fn loss(x: &Matrix, y: &[bool], weights: &[f64], bias: f64, l2: f64) -> f64 {
    let n = x.rows() as f64;
    let data: f64 = (0..x.rows())
        .map(|i| {
            let z = dot(x.row(i), weights) + bias;
            softplus(if y[i] { -z } else { z })
        })
        .sum::<f64>()
        / n;
    data + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`loss`] with respect to `(weights, bias)`.
pub fn gradient(x: &Matrix, y: &[bool], weights: &[f64], bias: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for i in 0..x.rows() {
        let row = x.row(i);
        let r = sigmoid(dot(row, weights) + bias) - if y[i] { 1.0 } else { 0.0 };
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (gw, gb / n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Starts from zero weights. A step that would raise the loss is retried at
/// half the learning rate, so the recorded loss never increases.
pub fn fit_logreg(x: &Matrix, y: &[bool], params: &LogRegParams) -> Result<LogReg> {
    if x.rows() == 0 || y.len() != x.rows() {
        return Err(Error::Fit("logistic regression needs labelled rows".into()));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("logistic regression inputs must be finite".into()));
    }
    let mut w = vec![0.0; x.cols()];
    let mut b = 0.0;
    let mut lr = params.lr;
    let mut current = loss(x, y, &w, b, params.l2);
    let mut history = vec![current];
    for _ in 0..params.epochs {
        let (gw, gb) = gradient(x, y, &w, b, params.l2);
        let mut accepted = false;
        for _ in 0..40 {
            let tw: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - lr * g).collect();
            let tb = b - lr * gb;
            let next = loss(x, y, &tw, tb, params.l2);
            if next <= current {
                w = tw;
                b = tb;
                let delta = current - next;
                current = next;
                history.push(current);
                accepted = true;
                if delta < params.tol {
                    return Ok(LogReg {
                        weights: w,
                        bias: b,
                        loss_history: history,
                    });
                }
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(LogReg {
        weights: w,
        bias: b,
        loss_history: history,
    })
}

impl LogReg {
    pub fn zero(n_features: usize) -> Self {
        LogReg {
            weights: vec![0.0; n_features],
            bias: 0.0,
            loss_history: Vec::new(),
        }
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(dot(row, &self.weights) + self.bias)
    }
}
