//! L1-penalized linear SVM (squared hinge loss) used as a sparsity filter.
//!
//! Minimizes `Σ max(0, 1 - y(w·x + b))² + λ‖w‖₁` with `λ = 1 / strength` by
//! cyclic coordinate descent: a generalized Newton step per coordinate
//! followed by an Armijo backtracking line search. The bias is not penalized.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nozzle::{Class, LabelSet};

/// Coefficients below this magnitude count as zero when selecting columns.
pub const ZERO_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    /// Inverse penalty weight; `f64::INFINITY` disables the penalty.
    pub strength: f64,
    pub max_epochs: usize,
    pub tol: f64,
    /// Columns kept when every coefficient is zero.
    pub fallback_top: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            strength: 0.01,
            max_epochs: 1000,
            tol: 1e-6,
            fallback_top: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    /// Gradient of the loss at `w = 0` (after fitting the bias alone).
    pub null_gradient: Vec<f64>,
}

struct Problem<'a> {
    y: &'a [f64],
    lambda: f64,
}

impl Problem<'_> {
    /// Returns (gradient, active-set curvature) for column `x`.
    fn grad_hess(&self, x: &[f64], margins: &[f64]) -> (f64, f64) {
        let mut g = 0.0;
        let mut h = 0.0;
        for i in 0..margins.len() {
            let slack = 1.0 - margins[i];
            if slack > 0.0 {
                g -= 2.0 * self.y[i] * x[i] * slack;
                h += 2.0 * x[i] * x[i];
            }
        }
        (g, h)
    }

    /// Loss change when the coefficient on `x` moves by `d`.
    fn loss_delta(&self, x: &[f64], margins: &[f64], d: f64) -> f64 {
        let mut delta = 0.0;
        for i in 0..margins.len() {
            let before = (1.0 - margins[i]).max(0.0);
            let after = (1.0 - margins[i] - self.y[i] * x[i] * d).max(0.0);
            delta += after * after - before * before;
        }
        delta
    }

    /// One coordinate update; returns the applied change.
    fn step(&self, x: &[f64], w: &mut f64, margins: &mut [f64], lambda: f64) -> f64 {
        let (g, h) = self.grad_hess(x, margins);
        let h = h + 1e-12;
        let d = if g + lambda <= h * *w {
            -(g + lambda) / h
        } else if g - lambda >= h * *w {
            -(g - lambda) / h
        } else {
            -*w
        };
        if d.abs() < 1e-15 {
            return 0.0;
        }
        let pen = |v: f64| lambda * v.abs();
        let decrease = g * d + pen(*w + d) - pen(*w);
        let mut beta = 1.0;
        for _ in 0..30 {
            let trial = beta * d;
            let change = self.loss_delta(x, margins, trial) + pen(*w + trial) - pen(*w);
            if change <= 0.01 * beta * decrease {
                *w += trial;
                for i in 0..margins.len() {
                    margins[i] += self.y[i] * x[i] * trial;
                }
                return trial;
            }
            beta *= 0.5;
        }
        0.0
    }
}

/// Fits one binary problem; `cols` is column-major, `y` holds ±1.
pub fn fit_binary(cols: &[Vec<f64>], y: &[f64], cfg: &SelectorConfig) -> LinearSvm {
    let n = y.len();
    let lambda = if cfg.strength.is_infinite() {
        0.0
    } else {
        1.0 / cfg.strength
    };
    let prob = Problem { y, lambda };
    let ones = vec![1.0; n];
    let mut margins = vec![0.0; n];
    let mut bias = 0.0;
    for _ in 0..50 {
        if prob.step(&ones, &mut bias, &mut margins, 0.0).abs() < cfg.tol {
            break;
        }
    }
    let null_gradient: Vec<f64> = cols.iter().map(|x| prob.grad_hess(x, &margins).0).collect();

    let mut weights = vec![0.0; cols.len()];
    let mut epochs = 0;
    while epochs < cfg.max_epochs {
        epochs += 1;
        let mut max_change: f64 = 0.0;
        for (j, x) in cols.iter().enumerate() {
            let d = prob.step(x, &mut weights[j], &mut margins, prob.lambda);
            max_change = max_change.max(d.abs());
        }
        let d = prob.step(&ones, &mut bias, &mut margins, 0.0);
        max_change = max_change.max(d.abs());
        if max_change < cfg.tol {
            break;
        }
    }
    LinearSvm {
        weights,
        bias,
        epochs,
        null_gradient,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Ascending column indices.
    pub selected: Vec<usize>,
    /// Per-class models; `None` where the class has no positives or no negatives.
    pub models: Vec<Option<LinearSvm>>,
    pub used_fallback: bool,
}

/// One-vs-rest L1 selection over already scaled features.
///
/// Keeps every column whose coefficient is nonzero in any class model.
pub fn fit_l1_selector(x: &Matrix, labels: &[LabelSet], cfg: &SelectorConfig) -> Result<Selection> {
    if x.rows() != labels.len() {
        return Err(Error::Selector("row and label counts differ".into()));
    }
    if x.cols() == 0 {
        return Err(Error::Selector("no feature columns".into()));
    }
    let present: u8 = labels.iter().fold(0, |b, l| b | l.bits());
    if present.count_ones() < 2 {
        return Err(Error::Selector("fewer than two classes present".into()));
    }
    let cols = x.to_columns();
    let n = labels.len();
    let models: Vec<Option<LinearSvm>> = Class::ALL
        .iter()
        .map(|&c| {
            let y: Vec<f64> = labels
                .iter()
                .map(|l| if l.contains(c) { 1.0 } else { -1.0 })
                .collect();
            let pos = y.iter().filter(|v| **v > 0.0).count();
            if pos == 0 || pos == n {
                None
            } else {
                Some(fit_binary(&cols, &y, cfg))
            }
        })
        .collect();

    let p = x.cols();
    let mut selected: Vec<usize> = (0..p)
        .filter(|&j| models.iter().flatten().any(|m| m.weights[j].abs() > ZERO_THRESHOLD))
        .collect();
    let mut used_fallback = false;
    if selected.is_empty() {
        used_fallback = true;
        let score = |j: usize| -> (f64, f64) {
            models.iter().flatten().fold((0.0, 0.0), |(a, b), m| {
                (a + m.weights[j].abs(), b + m.null_gradient[j].abs())
            })
        };
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            let (sa, ga) = score(a);
            let (sb, gb) = score(b);
            sb.total_cmp(&sa).then(gb.total_cmp(&ga)).then(a.cmp(&b))
        });
        order.truncate(cfg.fallback_top.min(p).max(1));
        order.sort_unstable();
        selected = order;
    }
    Ok(Selection {
        selected,
        models,
        used_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standardize(m: &mut Matrix) {
        for j in 0..m.cols() {
            let c = m.column(j);
            let mu = crate::stats::mean(&c);
            let sd = crate::stats::std(&c).max(1e-12);
            for i in 0..m.rows() {
                m.set(i, j, (m.get(i, j) - mu) / sd);
            }
        }
    }

    fn planted(n: usize, p: usize, seed: u64) -> (Matrix, Vec<LabelSet>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n, p);
        let mut labels = Vec::new();
        for i in 0..n {
            let pos = i % 2 == 0;
            labels.push(LabelSet::single(if pos { Class::Pattern1 } else { Class::Other }));
            m.set(i, 0, if pos { 1.0 } else { 0.0 } + rng.gen_range(-0.05..0.05));
            for j in 1..p {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        standardize(&mut m);
        (m, labels)
    }

    #[test]
    fn planted_column_survives_noise_is_dropped() {
        let (m, labels) = planted(200, 100, 1);
        let sel = fit_l1_selector(&m, &labels, &SelectorConfig::default()).unwrap();
        assert!(sel.selected.contains(&0));
        assert!(100 - sel.selected.len() >= 90, "kept {:?}", sel.selected);
    }

    #[test]
    fn no_penalty_keeps_everything() {
        let (m, labels) = planted(60, 10, 2);
        let cfg = SelectorConfig {
            strength: f64::INFINITY,
            max_epochs: 20,
            ..SelectorConfig::default()
        };
        let sel = fit_l1_selector(&m, &labels, &cfg).unwrap();
        assert_eq!(sel.selected, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn duplicate_column_does_not_grow_selection() {
        let (m, labels) = planted(120, 20, 3);
        let base = fit_l1_selector(&m, &labels, &SelectorConfig::default()).unwrap();
        let mut rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        for r in rows.iter_mut() {
            r.push(r[0]);
        }
        let dup = Matrix::from_rows(&rows).unwrap();
        let with_dup = fit_l1_selector(&dup, &labels, &SelectorConfig::default()).unwrap();
        assert!(with_dup.selected.len() <= base.selected.len());
        assert!(!(with_dup.selected.contains(&0) && with_dup.selected.contains(&20)));
    }

    #[test]
    fn single_class_is_rejected() {
        let m = Matrix::zeros(4, 2);
        let labels = alloc::vec![LabelSet::single(Class::Pattern3); 4];
        assert!(matches!(
            fit_l1_selector(&m, &labels, &SelectorConfig::default()),
            Err(Error::Selector(_))
        ));
    }

    #[test]
    fn empty_selection_falls_back_to_top_columns() {
        let (m, labels) = planted(40, 50, 4);
        let cfg = SelectorConfig {
            strength: 1e-9,
            ..SelectorConfig::default()
        };
        let sel = fit_l1_selector(&m, &labels, &cfg).unwrap();
        assert!(sel.used_fallback);
        assert_eq!(sel.selected.len(), 32);
        assert!(sel.selected.contains(&0));
    }

    #[test]
    fn objective_never_increases_over_epochs() {
        let (m, labels) = planted(80, 15, 5);
        let cols = m.to_columns();
        let y: Vec<f64> = labels
            .iter()
            .map(|l| if l.contains(Class::Pattern1) { 1.0 } else { -1.0 })
            .collect();
        let objective = |svm: &LinearSvm| {
            let mut loss = 0.0;
            for i in 0..y.len() {
                let z: f64 = (0..cols.len()).map(|j| svm.weights[j] * cols[j][i]).sum::<f64>() + svm.bias;
                let s = (1.0 - y[i] * z).max(0.0);
                loss += s * s;
            }
            loss + 100.0 * svm.weights.iter().map(|w| w.abs()).sum::<f64>()
        };
        let mut last = f64::INFINITY;
        for epochs in 1..8 {
            let cfg = SelectorConfig {
                max_epochs: epochs,
                tol: 0.0,
                ..SelectorConfig::default()
            };
            let obj = objective(&fit_binary(&cols, &y, &cfg));
            assert!(obj <= last + 1e-9);
            last = obj;
        }
    }
}
