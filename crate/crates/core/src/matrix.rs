//! Dense row-major matrices and the named feature table.

use alloc::string::String;
use alloc::vec::Vec;

use crate::digest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Schema(alloc::format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Schema("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Row-major copy transposed into column-major storage.
    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }
}

/// Feature table: one row per printhead, one named column per catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    head_ids: Vec<String>,
    columns: Vec<String>,
    values: Matrix,
}

impl FeatureMatrix {
    pub fn new(head_ids: Vec<String>, columns: Vec<String>, values: Matrix) -> Result<Self> {
        if values.rows() != head_ids.len() || values.cols() != columns.len() {
            return Err(Error::Schema(alloc::format!(
                "feature table is {}x{} but has {} heads and {} columns",
                values.rows(),
                values.cols(),
                head_ids.len(),
                columns.len()
            )));
        }
        let mut sorted: Vec<&String> = columns.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Schema("duplicate column names".into()));
        }
        Ok(FeatureMatrix {
            head_ids,
            columns,
            values,
        })
    }

    pub fn head_ids(&self) -> &[String] {
        &self.head_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Matrix {
        &mut self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn header_digest(&self) -> String {
        digest::names_digest(&self.columns)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            head_ids: idx.iter().map(|&i| self.head_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(idx),
        }
    }

    /// Rows reordered by ascending head id.
    pub fn sorted_by_head(&self) -> (FeatureMatrix, Vec<usize>) {
        let mut idx: Vec<usize> = (0..self.n_rows()).collect();
        idx.sort_by(|&a, &b| self.head_ids[a].cmp(&self.head_ids[b]));
        (self.select_rows(&idx), idx)
    }
}
