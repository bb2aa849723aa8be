//! Compressed-sparse-row storage and the matrix-vector kernels the solver is built on.
//!
//! A [`SparseMatrix`] keeps its column indices sorted within each row and never stores
//! explicit zeros, so `nnz()` always counts structurally meaningful entries. Products
//! with the transpose are computed by scattering over rows; no CSC copy is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CSR matrix with sorted, duplicate-free columns and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Positive diagonal scalings produced by [`ruiz_rescale`]: the scaled matrix is
/// `diag(row_scale) * A * diag(col_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescalingDiagonals {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
}

impl RescalingDiagonals {
    pub fn identity(n_rows: usize, n_cols: usize) -> Self {
        Self {
            row_scale: vec![1.0; n_rows],
            col_scale: vec![1.0; n_cols],
        }
    }
}

/// On-disk triplet layout: `{"n_rows":..,"n_cols":..,"entries":[[row,col,value],..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletFile {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Row-at-a-time CSR assembly. Each pushed row may contain unsorted and repeated
/// columns; they are sorted, summed and stripped of zeros on push.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    /// Appends one row. Column indices must be `< n_cols`.
    pub fn push_row<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        self.scratch.clear();
        self.scratch.extend(entries);
        let row = self.n_rows();
        if let Some(&(col, _)) = self.scratch.iter().find(|(c, _)| *c >= self.n_cols) {
            return Err(Error::IndexOutOfRange {
                index: 0,
                row,
                col,
                n_rows: row + 1,
                n_cols: self.n_cols,
            });
        }
        self.scratch.sort_unstable_by_key(|&(c, _)| c);
        let mut iter = self.scratch.iter().copied().peekable();
        while let Some((col, mut value)) = iter.next() {
            while let Some(&(next_col, next_value)) = iter.peek() {
                if next_col != col {
                    break;
                }
                value += next_value;
                iter.next();
            }
            if value != 0.0 {
                self.col_indices.push(col);
                self.values.push(value);
            }
        }
        self.row_offsets.push(self.col_indices.len());
        Ok(())
    }

    pub fn finish(self) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.row_offsets.len() - 1,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for (index, &(row, col, _)) in triplets.iter().enumerate() {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    index,
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut counts = vec![0usize; n_rows + 1];
        for &(row, _, _) in triplets {
            counts[row + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        let mut bucketed = vec![(0usize, 0.0f64); triplets.len()];
        let mut cursor = counts.clone();
        for &(row, col, value) in triplets {
            bucketed[cursor[row]] = (col, value);
            cursor[row] += 1;
        }
        let mut builder = CsrBuilder::new(n_cols);
        for r in 0..n_rows {
            builder.push_row(bucketed[counts[r]..counts[r + 1]].iter().copied())?;
        }
        Ok(builder.finish())
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets).expect("diagonal indices in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_triplet_file(&self) -> TripletFile {
        TripletFile {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries: self.triplets().collect(),
        }
    }

    pub fn from_triplet_file(file: &TripletFile) -> Result<Self> {
        Self::from_triplets(file.n_rows, file.n_cols, &file.entries)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            dense[r][c] = v;
        }
        dense
    }

    /// `A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut out)?;
        Ok(out)
    }

    pub fn spmv_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("spmv input", self.n_cols, x.len())?;
        check_len("spmv output", self.n_rows, out.len())?;
        for (r, slot) in out.iter_mut().enumerate() {
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            *slot = self.col_indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
        Ok(())
    }

    /// `Aᵀ y`, scattered row by row.
    pub fn spmv_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_cols];
        self.spmv_transpose_into(y, &mut out)?;
        Ok(out)
    }

    pub fn spmv_transpose_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("spmv_transpose input", self.n_rows, y.len())?;
        check_len("spmv_transpose output", self.n_cols, out.len())?;
        out.fill(0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let span = self.row_offsets[r]..self.row_offsets[r + 1];
            for (&c, &v) in self.col_indices[span.clone()].iter().zip(&self.values[span]) {
                out[c] += v * yr;
            }
        }
        Ok(())
    }

    /// `diag(row) * A * diag(col)`; the sparsity pattern is unchanged.
    pub fn scaled(&self, row: &[f64], col: &[f64]) -> Self {
        let mut values = self.values.clone();
        for r in 0..self.n_rows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                values[k] *= row[r] * col[self.col_indices[k]];
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }

    fn row_col_max_abs(&self) -> (Vec<f64>, Vec<f64>) {
        let mut row_max = vec![0.0f64; self.n_rows];
        let mut col_max = vec![0.0f64; self.n_cols];
        for r in 0..self.n_rows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let a = self.values[k].abs();
                row_max[r] = row_max[r].max(a);
                let c = self.col_indices[k];
                col_max[c] = col_max[c].max(a);
            }
        }
        (row_max, col_max)
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Power iteration on `AᵀA` from a seeded random start. Returns `‖A v‖₂` for the final
/// unit vector `v`, which approaches the largest singular value from below.
pub fn spectral_norm_estimate(a: &SparseMatrix, iterations: usize, seed: u64) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "spectral_norm_estimate needs at least one iteration".into(),
        ));
    }
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..a.n_cols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut av = vec![0.0; a.n_rows()];
    let mut atav = vec![0.0; a.n_cols()];
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    for _ in 0..iterations {
        a.spmv_into(&v, &mut av)?;
        a.spmv_transpose_into(&av, &mut atav)?;
        let n = norm2(&atav);
        if n == 0.0 {
            // Start vector fell into the null space; fall back to the max column norm.
            return Ok(column_norm_bound(a));
        }
        v.iter_mut().zip(&atav).for_each(|(x, y)| *x = y / n);
    }
    a.spmv_into(&v, &mut av)?;
    Ok(norm2(&av))
}

fn column_norm_bound(a: &SparseMatrix) -> f64 {
    let mut sq = vec![0.0; a.n_cols()];
    for (_, c, v) in a.triplets() {
        sq[c] += v * v;
    }
    sq.into_iter().fold(0.0, f64::max).sqrt()
}

/// Iterated ℓ∞ equilibration. Each pass divides every row and column by the square root
/// of its current max-abs entry; empty rows and columns keep scale 1.
pub fn ruiz_rescale(a: &SparseMatrix, iterations: usize) -> (SparseMatrix, RescalingDiagonals) {
    let mut scales = RescalingDiagonals::identity(a.n_rows(), a.n_cols());
    let mut current = a.clone();
    for _ in 0..iterations {
        let (row_max, col_max) = current.row_col_max_abs();
        let row_step: Vec<f64> = row_max
            .iter()
            .map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 })
            .collect();
        let col_step: Vec<f64> = col_max
            .iter()
            .map(|&m| if m > 0.0 { 1.0 / m.sqrt() } else { 1.0 })
            .collect();
        current = current.scaled(&row_step, &col_step);
        scales.row_scale.iter_mut().zip(&row_step).for_each(|(s, t)| *s *= t);
        scales.col_scale.iter_mut().zip(&col_step).for_each(|(s, t)| *s *= t);
    }
    (current, scales)
}

/// One diagonal pass dividing every row and column by the square root of its ℓ1 norm.
pub fn pock_chambolle_rescale(a: &SparseMatrix) -> (SparseMatrix, RescalingDiagonals) {
    let mut row_sum = vec![0.0f64; a.n_rows];
    let mut col_sum = vec![0.0f64; a.n_cols];
    for r in 0..a.n_rows {
        for k in a.row_offsets[r]..a.row_offsets[r + 1] {
            let v = a.values[k].abs();
            row_sum[r] += v;
            col_sum[a.col_indices[k]] += v;
        }
    }
    let inv_sqrt = |s: &f64| if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 };
    let row_scale: Vec<f64> = row_sum.iter().map(inv_sqrt).collect();
    let col_scale: Vec<f64> = col_sum.iter().map(inv_sqrt).collect();
    (a.scaled(&row_scale, &col_scale), RescalingDiagonals { row_scale, col_scale })
}

impl RescalingDiagonals {
    /// Diagonals of `self` applied first, then `next`.
    pub fn then(mut self, next: &RescalingDiagonals) -> Self {
        self.row_scale.iter_mut().zip(&next.row_scale).for_each(|(s, t)| *s *= t);
        self.col_scale.iter_mut().zip(&next.col_scale).for_each(|(s, t)| *s *= t);
        self
    }
}
