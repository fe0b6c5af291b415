use alloc::vec;
use alloc::vec::Vec;

use super::tree::argmax;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Brute-force k-nearest-neighbour classifier (Euclidean distance).
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub x: Matrix,
    pub y: Vec<usize>,
}

pub fn fit_knn(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Result<Knn> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if x.rows() == 0 || y.len() != x.rows() {
        return Err(Error::Fit("kNN needs labelled rows".into()));
    }
    Ok(Knn {
        k,
        n_classes,
        x: x.clone(),
        y: y.to_vec(),
    })
}

impl Knn {
    /// Indices of the `k` nearest training rows; distance ties go to the lower row index.
    pub fn neighbours(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..self.x.rows())
            .map(|i| {
                let row = self.x.row(i);
                let s: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = self.k.min(d.len());
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(k);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Vote share of each class among the neighbours.
    pub fn predict_proba(&self, query: &[f64]) -> Vec<f64> {
        let nb = self.neighbours(query);
        let mut votes = vec![0.0; self.n_classes];
        for &i in &nb {
            votes[self.y[i]] += 1.0;
        }
        let k = nb.len() as f64;
        votes.iter_mut().for_each(|v| *v /= k);
        votes
    }

    /// Majority class; vote ties go to the lowest class index.
    pub fn predict(&self, query: &[f64]) -> usize {
        argmax(&self.predict_proba(query))
    }
}
