//! Null spaces of tall sparse complex systems (double precision).
//!
//! Rows are streamed in blocks through Householder QR, so only an
//! `ncols × ncols` triangular factor is ever held; the final SVD of that
//! factor gives the singular values and right singular vectors.

use crate::error::{QabError, Result};
use ndarray::Array2;
use ndarray_linalg::{Lapack, MatrixLayout, SVD};
use num_complex::Complex64;

/// A sparse row: `(column, value)` pairs.
pub type SparseRow = Vec<(usize, Complex64)>;

#[derive(Clone, Debug)]
pub struct NullSpace {
    /// All singular values, descending (zero-padded to `ncols`).
    pub singular_values: Vec<f64>,
    /// `ncols · ε · σ_max · 10³`.
    pub threshold: f64,
    /// Right singular vectors for singular values below the threshold.
    pub basis: Vec<Vec<Complex64>>,
    /// Right singular vector of the smallest singular value, always filled.
    pub smallest: Vec<Complex64>,
    /// Number of nonzero constraint rows seen.
    pub rows: usize,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// σ_min / σ_max.
    pub fn relative_smallest(&self) -> f64 {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return 0.0;
        }
        self.singular_values.last().copied().unwrap_or(0.0) / max
    }

    /// Smallest singular value above the threshold, relative to σ_max: the
    /// spectral gap protecting the null space.
    pub fn relative_gap(&self) -> f64 {
        let max = self.singular_values.first().copied().unwrap_or(0.0);
        let k = self.singular_values.len() - self.dim();
        if k == 0 || max == 0.0 {
            return 0.0;
        }
        self.singular_values[k - 1] / max
    }
}

/// Column-major block accumulating `[R; new rows]`.
struct Accumulator {
    ncols: usize,
    /// Upper-triangular factor so far (column-major, `ncols × ncols`).
    r: Option<Vec<Complex64>>,
    pending: Vec<SparseRow>,
    block: usize,
    rows: usize,
}

impl Accumulator {
    fn push(&mut self, row: SparseRow) -> Result<()> {
        if row.iter().all(|(_, v)| *v == Complex64::new(0.0, 0.0)) {
            return Ok(());
        }
        self.rows += 1;
        self.pending.push(row);
        if self.pending.len() >= self.block {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let n = self.ncols;
        let top = if self.r.is_some() { n } else { 0 };
        // Pad so the stacked block is never wider than tall.
        let m = (top + self.pending.len()).max(n);
        let mut a = vec![Complex64::new(0.0, 0.0); m * n];
        if let Some(r) = &self.r {
            for j in 0..n {
                for i in 0..=j {
                    a[j * m + i] = r[j * n + i];
                }
            }
        }
        for (k, row) in self.pending.drain(..).enumerate() {
            for (c, v) in row {
                if c >= n {
                    return Err(QabError::Shape(format!("column {c} out of range {n}")));
                }
                a[c * m + top + k] += v;
            }
        }
        Complex64::householder(MatrixLayout::F { col: n as i32, lda: m as i32 }, &mut a)
            .map_err(|e| QabError::Backend(e.to_string()))?;
        let mut r = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..=j {
                r[j * n + i] = a[j * m + i];
            }
        }
        self.r = Some(r);
        Ok(())
    }
}

/// Null space of the system whose nonzero rows are produced by `rows`.
pub fn null_space(ncols: usize, rows: impl IntoIterator<Item = SparseRow>) -> Result<NullSpace> {
    if ncols == 0 {
        return Err(QabError::Shape("system without unknowns".into()));
    }
    let mut acc = Accumulator { ncols, r: None, pending: Vec::new(), block: (4 * ncols).max(256), rows: 0 };
    for row in rows {
        acc.push(row)?;
    }
    acc.flush()?;
    let r = acc.r.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); ncols * ncols]);
    let mat = Array2::from_shape_fn((ncols, ncols), |(i, j)| r[j * ncols + i]);
    let (_, s, vt) = mat.svd(false, true).map_err(|e| QabError::Backend(e.to_string()))?;
    let vt = vt.ok_or_else(|| QabError::Backend("SVD returned no right vectors".into()))?;
    let sv: Vec<f64> = s.to_vec();
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = ncols as f64 * f64::EPSILON * smax * 1e3;
    let vec_of = |k: usize| -> Vec<Complex64> { vt.row(k).iter().map(|z| z.conj()).collect() };
    let basis = (0..ncols).filter(|&k| sv[k] < threshold).map(vec_of).collect();
    Ok(NullSpace { singular_values: sv, threshold, basis, smallest: vec_of(ncols - 1), rows: acc.rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn apply(rows: &[SparseRow], v: &[Complex64]) -> f64 {
        rows.iter().map(|r| r.iter().map(|(j, a)| a * v[*j]).sum::<Complex64>().norm()).fold(0.0, f64::max)
    }

    #[test]
    fn one_dimensional_kernel() {
        // x0 + x1 = 0, x1 − i x2 = 0, repeated with scaling
        let rows: Vec<SparseRow> = (0..50)
            .flat_map(|k| {
                let s = 1.0 + k as f64;
                vec![vec![(0, c(s, 0.0)), (1, c(s, 0.0))], vec![(1, c(s, 0.0)), (2, c(0.0, -s))]]
            })
            .collect();
        let ns = null_space(3, rows.clone()).unwrap();
        assert_eq!(ns.dim(), 1);
        assert!(apply(&rows, &ns.basis[0]) < 1e-12);
        assert!(ns.relative_gap() > 1e-3);
    }

    #[test]
    fn kernel_dimension_and_zero_rows() {
        // 4 unknowns, one constraint, plus empty rows that must be skipped
        let rows = vec![vec![], vec![(2, c(0.0, 0.0))], vec![(0, c(1.0, 1.0)), (3, c(2.0, 0.0))]];
        let ns = null_space(4, rows.clone()).unwrap();
        assert_eq!(ns.rows, 1);
        assert_eq!(ns.dim(), 3);
        for v in &ns.basis {
            assert!(apply(&rows, v) < 1e-14);
        }
    }

    #[test]
    fn many_blocks_full_rank() {
        // enough rows to force several flushes
        let n = 5;
        let rows: Vec<SparseRow> = (0..2000)
            .map(|k| {
                let a = (k % n, c((k as f64).sin(), (k as f64).cos()));
                let b = ((k + 1) % n, c(1.0, 0.5 * (k as f64 * 0.3).sin()));
                vec![a, b]
            })
            .collect();
        let ns = null_space(n, rows.clone()).unwrap();
        assert_eq!(ns.dim(), 0);
        assert!(ns.relative_smallest() > 1e-6);
        assert!(null_space(3, vec![vec![(7, c(1.0, 0.0))]]).is_err());
    }
}
