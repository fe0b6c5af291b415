//! CART decision tree with Gini impurity.
//!
//! Nodes live in a flat array; node 0 is the root. A sample goes left when
//! its value is `<= threshold`. Split search visits candidate columns in
//! ascending index order and thresholds in ascending order, keeping the first
//! split with the largest impurity decrease, so ties resolve to the lowest
//! column and then the lowest threshold.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// `1 - Σ (c/N)²`.
pub fn gini(counts: &[u32]) -> Result<f64> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Err(Error::Domain("gini impurity of an empty node".into()));
    }
    Ok(gini_unchecked(counts, total as f64))
}

fn gini_unchecked(counts: &[u32], total: f64) -> f64 {
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(p))`.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (libm::ceil(libm::sqrt(p as f64)) as usize).clamp(1, p.max(1)),
            MaxFeatures::Count(k) => k.clamp(1, p.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    /// Exhaustive midpoint search.
    Best,
    /// One uniform random threshold per candidate column (extra trees).
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 20,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            splitter: Splitter::Best,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// `None` for leaves.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub depth: usize,
    /// Training rows per class that reached this node.
    pub counts: Vec<u32>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.feature.is_none()
    }

    pub fn samples(&self) -> u32 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_classes: usize,
    pub nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    buf: Vec<(f64, usize)>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split_on(&mut self, idx: &[usize], feature: usize, parent: f64) -> Option<Candidate> {
        self.buf.clear();
        self.buf
            .extend(idx.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
        self.buf.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.buf.len();
        let lo = self.buf[0].0;
        let hi = self.buf[n - 1].0;
        if lo == hi {
            return None;
        }
        let nf = n as f64;
        let mut total = vec![0u32; self.n_classes];
        for &(_, c) in &self.buf {
            total[c] += 1;
        }
        match self.params.splitter {
            Splitter::Random => {
                let mut threshold = self.rng.gen_range(lo..hi);
                if threshold <= lo {
                    threshold = lo;
                }
                let mut left = vec![0u32; self.n_classes];
                let mut nl = 0usize;
                for &(v, c) in &self.buf {
                    if v <= threshold {
                        left[c] += 1;
                        nl += 1;
                    }
                }
                let right: Vec<u32> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let nr = n - nl;
                let gain = parent
                    - (nl as f64 / nf) * gini_unchecked(&left, nl as f64)
                    - (nr as f64 / nf) * gini_unchecked(&right, nr as f64);
                Some(Candidate {
                    feature,
                    threshold,
                    gain,
                })
            }
            Splitter::Best => {
                let mut left = vec![0u32; self.n_classes];
                let mut right = total.clone();
                let mut best: Option<Candidate> = None;
                for k in 0..n - 1 {
                    let (v, c) = self.buf[k];
                    left[c] += 1;
                    right[c] -= 1;
                    let next = self.buf[k + 1].0;
                    if v == next {
                        continue;
                    }
                    let nl = (k + 1) as f64;
                    let nr = nf - nl;
                    let gain = parent
                        - (nl / nf) * gini_unchecked(&left, nl)
                        - (nr / nf) * gini_unchecked(&right, nr);
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        let mut threshold = v + (next - v) / 2.0;
                        if threshold >= next {
                            threshold = v;
                        }
                        best = Some(Candidate {
                            feature,
                            threshold,
                            gain,
                        });
                    }
                }
                best
            }
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.cols();
        let mut order: Vec<usize> = (0..p).collect();
        if self.params.max_features.resolve(p) < p {
            order.shuffle(&mut self.rng);
        }
        order
    }

    fn find_split(&mut self, idx: &[usize], parent: f64) -> Option<Candidate> {
        let want = self.params.max_features.resolve(self.x.cols());
        let order = self.candidate_features();
        let mut found: Vec<Candidate> = Vec::new();
        for f in order {
            if found.len() >= want {
                break;
            }
            if let Some(c) = self.best_split_on(idx, f, parent) {
                found.push(c);
            }
        }
        found.sort_by_key(|a| a.feature);
        let mut best: Option<Candidate> = None;
        for c in found {
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        best
    }

    fn build(&mut self, root: Vec<usize>) {
        let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
        let counts = self.counts(&root);
        self.nodes.push(leaf(counts, 0));
        stack.push((0, root));
        while let Some((id, idx)) = stack.pop() {
            let depth = self.nodes[id].depth;
            let n = idx.len();
            let parent = gini_unchecked(&self.nodes[id].counts, n as f64);
            if depth >= self.params.max_depth || n < self.params.min_samples_split || parent == 0.0 {
                continue;
            }
            let Some(split) = self.find_split(&idx, parent) else {
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let left_id = self.nodes.len();
            let lc = self.counts(&l);
            self.nodes.push(leaf(lc, depth + 1));
            let right_id = self.nodes.len();
            let rc = self.counts(&r);
            self.nodes.push(leaf(rc, depth + 1));
            let node = &mut self.nodes[id];
            node.feature = Some(split.feature);
            node.threshold = split.threshold;
            node.left = left_id;
            node.right = right_id;
            // right pushed first so the left subtree is expanded first
            stack.push((right_id, r));
            stack.push((left_id, l));
        }
    }
}

fn leaf(counts: Vec<u32>, depth: usize) -> Node {
    Node {
        feature: None,
        threshold: 0.0,
        left: 0,
        right: 0,
        depth,
        counts,
    }
}

/// Fits a tree on all rows of `x`.
pub fn fit_tree(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree> {
    let rows: Vec<usize> = (0..x.rows()).collect();
    fit_tree_on(x, y, n_classes, &rows, params, seed)
}

/// Fits a tree on the multiset of row indices `rows` (duplicates allowed).
pub fn fit_tree_on(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree> {
    if rows.is_empty() || x.rows() == 0 {
        return Err(Error::Fit("cannot fit a tree on zero rows".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::Fit("label count does not match rows".into()));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::Fit("class index out of range".into()));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("tree inputs must be finite".into()));
    }
    let mut b = Builder {
        x,
        y,
        n_classes,
        params: *params,
        rng: rng::rng_for(seed),
        nodes: Vec::new(),
        buf: Vec::with_capacity(rows.len()),
    };
    b.build(rows.to_vec());
    Ok(DecisionTree {
        n_features: x.cols(),
        n_classes,
        nodes: b.nodes,
    })
}

impl DecisionTree {
    pub fn leaf_for(&self, row: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Some(f) = node.feature {
            node = if row[f] <= node.threshold {
                &self.nodes[node.left]
            } else {
                &self.nodes[node.right]
            };
        }
        node
    }

    /// Class frequencies of the leaf reached by `row`.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let leaf = self.leaf_for(row);
        let total = leaf.samples() as f64;
        leaf.counts.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.predict_proba(row))
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Unnormalized weighted impurity decrease per feature.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        let root = self.nodes[0].samples() as f64;
        for node in &self.nodes {
            if let Some(f) = node.feature {
                let l = &self.nodes[node.left];
                let r = &self.nodes[node.right];
                let w = |n: &Node| {
                    let s = n.samples() as f64;
                    s / root * gini_unchecked(&n.counts, s)
                };
                imp[f] += w(node) - w(l) - w(r);
            }
        }
        imp
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
        assert!((gini(&[1, 2, 3]).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(matches!(gini(&[0, 0]), Err(Error::Domain(_))));
    }

    #[test]
    fn separable_1d_single_split() {
        let xs = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let x = Matrix::new(xs.len(), 1, xs.to_vec()).unwrap();
        let y: Vec<usize> = xs.iter().map(|&v| (v > 0.0) as usize).collect();
        let t = fit_tree(&x, &y, 2, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.nodes[0].threshold, 0.0);
        for (i, &v) in xs.iter().enumerate() {
            assert_eq!(t.predict(&[v]), y[i]);
        }
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = Matrix::new(3, 1, alloc::vec![1.0, 2.0, 3.0]).unwrap();
        let t = fit_tree(&x, &[1, 1, 1], 2, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!(t.nodes[0].is_leaf());
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = Matrix::new(4, 2, alloc::vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let y = [0, 1, 1, 0];
        let t = fit_tree(&x, &y, 2, &TreeParams::default(), 0).unwrap();
        for i in 0..4 {
            assert_eq!(t.predict(x.row(i)), y[i]);
        }
        assert_eq!(t.depth(), 2);
        let stump = TreeParams {
            max_depth: 1,
            ..TreeParams::default()
        };
        let s = fit_tree(&x, &y, 2, &stump, 0).unwrap();
        assert!(s.depth() <= 1);
    }

    #[test]
    fn leaf_counts_sum_to_rows() {
        let data: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64).collect();
        let x = Matrix::new(30, 2, data).unwrap();
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let t = fit_tree(&x, &y, 3, &TreeParams::default(), 1).unwrap();
        let leaves: u32 = t.nodes.iter().filter(|n| n.is_leaf()).map(Node::samples).sum();
        assert_eq!(leaves, 30);
        for n in t.nodes.iter().filter(|n| !n.is_leaf()) {
            assert_eq!(t.nodes[n.left].samples() + t.nodes[n.right].samples(), n.samples());
        }
    }

    #[test]
    fn empty_input_fails() {
        let x = Matrix::zeros(0, 2);
        assert!(matches!(
            fit_tree(&x, &[], 2, &TreeParams::default(), 0),
            Err(Error::Fit(_))
        ));
    }
}
