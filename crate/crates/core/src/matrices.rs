//! Compressed sparse row storage and the handful of products the pipeline needs.
//!
//! Every matrix in the pipeline (features `X`, labels `Y`, matches `M`,
//! assignments `C`) lives in a [`CsrMatrix`]. Column access is obtained by
//! materializing the transpose. Column indices are strictly ascending within a
//! row and explicit zeros are never stored.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result, Shape};

/// Borrowed view of one sparse row.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> RowView<'a> {
    pub fn new(indices: &'a [usize], values: &'a [f64]) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        Self { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Sparse-sparse dot product by merging the two sorted index lists.
    pub fn dot(&self, other: RowView<'_>) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector. Indices beyond `dense.len()` contribute nothing.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter()
            .filter(|&(j, _)| j < dense.len())
            .map(|(j, v)| v * dense[j])
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// A real-valued sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn new(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(invalid(format!(
                "row_ptr must have length {} and start at 0",
                rows + 1
            )));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(invalid("row_ptr, col_idx and values disagree on nnz"));
        }
        for r in 0..rows {
            let (lo, hi) = (indptr[r], indptr[r + 1]);
            if lo > hi {
                return Err(invalid(format!("row_ptr decreases at row {r}")));
            }
            for k in lo..hi {
                if indices[k] >= cols {
                    return Err(invalid(format!(
                        "column index {} out of range at row {r}",
                        indices[k]
                    )));
                }
                if k > lo && indices[k - 1] >= indices[k] {
                    return Err(invalid(format!("column indices not ascending at row {r}")));
                }
                if values[k] == 0.0 {
                    return Err(invalid(format!("explicit zero stored at row {r}")));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    ///
    /// Entries within a row may come in any order; duplicates are summed and
    /// zeros dropped.
    pub fn from_rows<R>(cols: usize, rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = (usize, f64)>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for (r, row) in rows.into_iter().enumerate() {
            scratch.clear();
            scratch.extend(row);
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                if c >= cols {
                    return Err(invalid(format!(
                        "column index {c} out of range ({cols} columns) at row {r}"
                    )));
                }
                let mut v = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: indptr.len() - 1,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Binary matrix whose row `r` has ones at the listed columns.
    pub fn from_patterns<R>(cols: usize, rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = usize>,
    {
        let rows: Vec<Vec<(usize, f64)>> = rows
            .into_iter()
            .map(|r| {
                let mut r: Vec<usize> = r.into_iter().collect();
                r.sort_unstable();
                r.dedup();
                r.into_iter().map(|c| (c, 1.0)).collect()
            })
            .collect();
        Self::from_rows(cols, rows)
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let cols = dense.first().map_or(0, Vec::len);
        let rows = dense.iter().map(|row| {
            row.iter()
                .copied()
                .enumerate()
                .filter(|&(_, v)| v != 0.0)
                .collect::<Vec<_>>()
        });
        Self::from_rows(cols, rows).expect("dense rows are in range")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r).iter() {
                row[c] = v;
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> Shape {
        Shape(self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> RowView<'_> {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        RowView::new(&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    /// Value at `(r, c)`, zero when absent.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row(r);
        match row.indices.binary_search(&c) {
            Ok(k) => row.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Number of stored entries per column.
    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for &c in &self.indices {
            counts[c] += 1;
        }
        counts
    }

    pub fn transpose(&self) -> Self {
        let mut indptr = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            indptr[c + 1] += 1;
        }
        for c in 0..self.cols {
            indptr[c + 1] += indptr[c];
        }
        let mut next = indptr.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter() {
                let k = next[c];
                indices[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Sub-matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let row = self.row(r);
            indices.extend_from_slice(row.indices);
            values.extend_from_slice(row.values);
            indptr.push(indices.len());
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Applies `f` to every stored value, dropping entries that become zero.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let rows = (0..self.rows).map(|r| {
            self.row(r)
                .iter()
                .map(|(c, v)| (c, f(r, v)))
                .collect::<Vec<_>>()
        });
        Self::from_rows(self.cols, rows).expect("columns unchanged")
    }

    /// Product `self · other` by row-wise (Gustavson) accumulation.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut acc = vec![0.0; other.cols];
        let mut touched = vec![false; other.cols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r).iter() {
                for (c, b) in other.row(k).iter() {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            pattern.clear();
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }

    /// Scales each nonzero row to unit Euclidean norm.
    pub fn normalize_rows(&self) -> Self {
        let mut out = self.clone();
        for r in 0..out.rows {
            let (lo, hi) = (out.indptr[r], out.indptr[r + 1]);
            let norm = out.values[lo..hi].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut out.values[lo..hi] {
                    *v /= norm;
                }
            }
        }
        out
    }
}

/// `A · Bᵀ` where `b_rows` holds the rows of `B` (so its column count must equal `A`'s).
pub fn spmm_pattern(a: &CsrMatrix, b_rows: &CsrMatrix) -> Result<CsrMatrix> {
    if a.cols() != b_rows.cols() {
        return Err(Error::DimensionMismatch {
            op: "spmm_pattern",
            left: a.shape(),
            right: b_rows.shape(),
        });
    }
    a.matmul(&b_rows.transpose())
}

/// `Tr(Yᵀ Ŷ)` for binary matrices: the number of coordinates stored in both.
pub fn trace_product(y: &CsrMatrix, y_hat: &CsrMatrix) -> Result<usize> {
    if y.shape() != y_hat.shape() {
        return Err(Error::DimensionMismatch {
            op: "trace_product",
            left: y.shape(),
            right: y_hat.shape(),
        });
    }
    let mut count = 0;
    for r in 0..y.rows() {
        let (a, b) = (y.row(r).indices, y_hat.row(r).indices);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Keeps, per row, the `lambda` largest strictly positive entries as ones.
///
/// Ties go to the lowest column index.
pub fn row_top_lambda(a: &CsrMatrix, lambda: usize) -> Result<CsrMatrix> {
    if lambda == 0 {
        return Err(invalid("lambda must be at least 1"));
    }
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    let rows = (0..a.rows()).map(|r| {
        scratch.clear();
        scratch.extend(a.row(r).iter().filter(|&(_, v)| v > 0.0));
        scratch.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        scratch.truncate(lambda);
        scratch.iter().map(|&(c, _)| c).collect::<Vec<_>>()
    });
    let rows: Vec<Vec<usize>> = rows.collect();
    CsrMatrix::from_patterns(a.cols(), rows)
}

/// Element-wise indicator of strictly positive entries.
pub fn binarize(a: &CsrMatrix) -> CsrMatrix {
    a.map_values(|_, v| if v > 0.0 { 1.0 } else { 0.0 })
}
