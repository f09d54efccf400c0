//! Compressed sparse column matrices, just enough for the solver's needs.

/// Sparse matrix in compressed-sparse-column form.
///
/// Row indices within each column are kept sorted and duplicate entries are
/// summed during construction, so two matrices built from the same triplets
/// are bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// Column start offsets, `ncols + 1` entries.
    pub col_ptr: Vec<usize>,
    /// Row index of each stored entry.
    pub row_ind: Vec<usize>,
    /// Value of each stored entry.
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_ind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_ind: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Build from coordinate triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        // counting sort by column, then sort rows within each column
        let mut count = vec![0usize; ncols + 1];
        for &(_, c, _) in triplets {
            count[c + 1] += 1;
        }
        for c in 0..ncols {
            count[c + 1] += count[c];
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].1, triplets[k].0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_ind = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c, v) = triplets[k];
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ind.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                prev = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_ind,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `out = A * x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        out.fill(0.0);
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                out[self.row_ind[p]] += self.values[p] * xc;
            }
        }
    }

    /// `out = A^T * x`
    pub fn mul_vec_t(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                acc += self.values[p] * x[self.row_ind[p]];
            }
            out[c] = acc;
        }
    }

    /// `out = S * x` where `S` is symmetric and `self` stores its upper
    /// triangle (diagonal included).
    pub fn mul_vec_sym_upper(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.nrows, self.ncols);
        out.fill(0.0);
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_ind[p];
                let v = self.values[p];
                debug_assert!(r <= c, "matrix must be upper triangular");
                out[r] += v * x[c];
                if r != c {
                    out[c] += v * x[r];
                }
            }
        }
    }

    /// Iterate stored entries as `(row, col, value)` in column order.
    pub fn triplet_iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |p| (self.row_ind[p], c, self.values[p]))
        })
    }

    /// Infinity norm of each column.
    pub fn col_inf_norms(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.ncols);
        for c in 0..self.ncols {
            let mut m = 0.0f64;
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                m = m.max(self.values[p].abs());
            }
            out[c] = m;
        }
    }

    /// Infinity norm of each row.
    pub fn row_inf_norms(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nrows);
        out.fill(0.0);
        for p in 0..self.values.len() {
            let r = self.row_ind[p];
            out[r] = out[r].max(self.values[p].abs());
        }
    }

    /// `A := diag(dr) * A * diag(dc)`, in place.
    pub fn scale(&mut self, dr: &[f64], dc: &[f64]) {
        debug_assert_eq!(dr.len(), self.nrows);
        debug_assert_eq!(dc.len(), self.ncols);
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                self.values[p] *= dr[self.row_ind[p]] * dc[c];
            }
        }
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
