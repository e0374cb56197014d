use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self · x`, where `x` is given as concatenated slices.
    pub fn mul_vec_parts(&self, parts: &[&[f64]]) -> Vec<f64> {
        debug_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut acc = 0.0;
                let mut offset = 0;
                for p in parts {
                    for (w, x) in row[offset..offset + p.len()].iter().zip(p.iter()) {
                        acc += w * x;
                    }
                    offset += p.len();
                }
                acc
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.mul_vec_parts(&[x])
    }

    /// `selfᵀ · y` restricted to columns `cols`.
    pub fn tmul_vec_cols(&self, y: &[f64], cols: std::ops::Range<usize>) -> Vec<f64> {
        let mut out = vec![0.0; cols.len()];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (o, w) in out.iter_mut().zip(&row[cols.clone()]) {
                *o += w * yr;
            }
        }
        out
    }

    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        self.tmul_vec_cols(y, 0..self.cols)
    }

    /// `self += y · xᵀ` with `x` given as concatenated slices.
    pub fn add_outer_parts(&mut self, y: &[f64], parts: &[&[f64]]) {
        let cols = self.cols;
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            let mut offset = 0;
            for p in parts {
                for (w, x) in row[offset..offset + p.len()].iter_mut().zip(p.iter()) {
                    *w += yr * x;
                }
                offset += p.len();
            }
        }
    }
}

pub fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

pub fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
