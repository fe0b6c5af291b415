//! Random forests and extremely randomized trees.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tree::{argmax, fit_tree_on, DecisionTree, MaxFeatures, Splitter, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    /// Bootstrap rows per tree (random forest) or use every row (extra trees).
    pub bootstrap: bool,
    pub splitter: Splitter,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: 20,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            splitter: Splitter::Best,
        }
    }

    pub fn extra_trees() -> Self {
        ForestParams {
            bootstrap: false,
            splitter: Splitter::Random,
            ..Self::random_forest()
        }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            max_features: self.max_features,
            splitter: self.splitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

/// Tree `t` draws its bootstrap sample and split randomness from
/// `derive(seed, t)`, so trees can be fitted in any order.
pub fn fit_forest(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    seed: u64,
) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    if x.rows() == 0 {
        return Err(Error::Fit("cannot fit a forest on zero rows".into()));
    }
    let tp = params.tree_params();
    let n = x.rows();
    let trees = par::map_indexed(params.n_trees, |t| {
        let tree_seed = rng::derive(seed, t as u64);
        let rows: Vec<usize> = if params.bootstrap {
            let mut r = rng::rng_for(rng::derive(tree_seed, 0xB007));
            (0..n).map(|_| r.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        fit_tree_on(x, y, n_classes, &rows, &tp, tree_seed)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        params: *params,
        seed,
        trees,
    })
}

impl Forest {
    pub fn n_classes(&self) -> usize {
        self.trees[0].n_classes
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Mean of the leaf class frequencies over all trees.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes()];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.predict_proba(row)) {
                *a += p;
            }
        }
        let k = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.predict_proba(row))
    }
}

/// Mean decrease in impurity, normalized per tree, averaged, then normalized
/// to sum to one. Features never used in a split get exactly zero.
pub fn gini_importance(forest: &Forest) -> Vec<f64> {
    let p = forest.n_features();
    let mut acc = vec![0.0; p];
    for t in &forest.trees {
        let imp = t.impurity_decrease();
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (a, v) in acc.iter_mut().zip(imp) {
                *a += v / total;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize, p: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n, p);
        let mut y = Vec::new();
        for i in 0..n {
            let c = r.gen_range(0..3usize);
            y.push(c);
            for j in 0..p {
                m.set(i, j, r.gen_range(-1.0..1.0));
            }
            m.set(i, 2, c as f64 + r.gen_range(-0.2..0.2));
        }
        (m, y)
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = data(80, 6, 1);
        for params in [ForestParams::random_forest(), ForestParams::extra_trees()] {
            let f = fit_forest(&x, &y, 3, &params, 7).unwrap();
            assert_eq!(f.trees.len(), 50);
            for i in 0..x.rows() {
                let s: f64 = f.predict_proba(x.row(i)).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
            assert!(f.trees.iter().all(|t| t.depth() <= 20));
        }
    }

    #[test]
    fn single_tree_fits_separable_data() {
        let (x, y) = data(60, 4, 2);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestParams::random_forest()
        };
        let f = fit_forest(&x, &y, 3, &params, 0).unwrap();
        assert!((0..x.rows()).all(|i| f.predict(x.row(i)) == y[i]));
    }

    #[test]
    fn zero_trees_is_a_config_error() {
        let (x, y) = data(10, 3, 3);
        let params = ForestParams {
            n_trees: 0,
            ..ForestParams::random_forest()
        };
        assert!(matches!(fit_forest(&x, &y, 3, &params, 0), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_seed_reproduces() {
        let (x, y) = data(50, 5, 4);
        let a = fit_forest(&x, &y, 3, &ForestParams::random_forest(), 11).unwrap();
        let b = fit_forest(&x, &y, 3, &ForestParams::random_forest(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn importance_finds_label_copy() {
        let (mut x, y) = data(120, 8, 5);
        for i in 0..x.rows() {
            x.set(i, 2, y[i] as f64);
        }
        let f = fit_forest(&x, &y, 3, &ForestParams::random_forest(), 3).unwrap();
        let imp = gini_importance(&f);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let top = (0..imp.len()).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        assert_eq!(top, 2, "{imp:?}");
        assert!(imp[2] >= 0.5, "{imp:?}");
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let (mut x, y) = data(60, 3, 6);
        for i in 0..x.rows() {
            x.set(i, 0, 1.0);
        }
        let f = fit_forest(&x, &y, 3, &ForestParams::random_forest(), 1).unwrap();
        assert_eq!(gini_importance(&f)[0], 0.0);
    }
}
