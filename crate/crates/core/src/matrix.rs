//! Dense row-major matrices and an LU factorization with partial pivoting.
//!
//! Problem sizes here stay in the hundreds, so everything is dense. The
//! product kernel skips zero entries of the left operand, which makes the
//! identity-heavy stage matrices cheap to compose without a sparse format.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(12) {
            let row = &self.row(r)[..self.cols.min(12)];
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn count_nonzeros(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &DenseMatrix, factor: f64) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, exp: usize) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("power of a non-square matrix".into()));
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    /// Copies the `(block_row, block_col)` block of a matrix partitioned into
    /// square blocks of size `bs`.
    pub fn block(&self, bs: usize, block_row: usize, block_col: usize) -> DenseMatrix {
        let mut b = Self::zeros(bs, bs);
        for r in 0..bs {
            let src = &self.row(block_row * bs + r)[block_col * bs..(block_col + 1) * bs];
            b.row_mut(r).copy_from_slice(src);
        }
        b
    }

    /// Overwrites a square block with `factor * value`.
    pub fn set_block(
        &mut self,
        bs: usize,
        block_row: usize,
        block_col: usize,
        value: &DenseMatrix,
        factor: f64,
    ) {
        debug_assert_eq!((value.rows, value.cols), (bs, bs));
        for r in 0..bs {
            let cols = self.cols;
            let dst = &mut self.data[(block_row * bs + r) * cols + block_col * bs..][..bs];
            for (d, s) in dst.iter_mut().zip(value.row(r)) {
                *d = factor * s;
            }
        }
    }

    /// Accumulates `factor * value` into a square block.
    pub fn add_to_block(
        &mut self,
        bs: usize,
        block_row: usize,
        block_col: usize,
        value: &DenseMatrix,
        factor: f64,
    ) {
        debug_assert_eq!((value.rows, value.cols), (bs, bs));
        if factor == 0.0 {
            return;
        }
        for r in 0..bs {
            let cols = self.cols;
            let dst = &mut self.data[(block_row * bs + r) * cols + block_col * bs..][..bs];
            for (d, s) in dst.iter_mut().zip(value.row(r)) {
                *d += factor * s;
            }
        }
    }

    /// Zeroes an entire block row.
    pub fn clear_block_row(&mut self, bs: usize, block_row: usize) {
        let cols = self.cols;
        self.data[block_row * bs * cols..(block_row + 1) * bs * cols].fill(0.0);
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Explicit inverse via LU solves against unit vectors.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.fill(0.0);
            e[c] = 1.0;
            lu.solve_in_place(&mut e);
            for r in 0..n {
                inv[(r, c)] = e[r];
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// LU factorization `PA = LU` with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    factors: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("LU input".into()));
        }
        let n = a.rows;
        let mut f = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (pivot_row, pivot) =
                (k..n)
                    .map(|r| (r, f[r * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot <= scale * f64::EPSILON {
                return Err(Error::Singular { column: k });
            }
            if pivot_row != k {
                for c in 0..n {
                    f.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let diag = f[k * n + k];
            for r in k + 1..n {
                let factor = f[r * n + k] / diag;
                f[r * n + k] = factor;
                if factor != 0.0 {
                    for c in k + 1..n {
                        f[r * n + c] -= factor * f[k * n + c];
                    }
                }
            }
        }
        Ok(Lu {
            n,
            factors: f,
            perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for r in 0..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.factors[r * n + c] * b[c];
            }
            b[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= self.factors[r * n + c] * b[c];
            }
            b[r] = acc / self.factors[r * n + r];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_hand_product() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![4.0, 0.0, 1.0], vec![-1.0, 2.0, 0.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        let expected =
            DenseMatrix::from_rows(&[vec![2.0, 4.0, 1.0], vec![-3.0, 6.0, 0.0]]).unwrap();
        assert_eq!(c, expected);
        assert!(b.matmul(&a).is_err());
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 4.0],
        ])
        .unwrap();
        let x = a.lu().unwrap().solve(&[4.0, 2.0, 11.0]);
        for (xi, ei) in x.iter().zip([1.0, 1.0, 2.0]) {
            assert!((xi - ei).abs() < 1e-13);
        }
        let prod = a.matmul(&a.inverse().unwrap()).unwrap();
        assert!(prod.max_abs_diff(&DenseMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(a.lu(), Err(Error::Singular { .. })));
    }

    #[test]
    fn blocks_round_trip() {
        let mut m = DenseMatrix::zeros(4, 6);
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        m.set_block(2, 1, 2, &b, -1.0);
        assert_eq!(m.block(2, 1, 2), b.scaled(-1.0));
        assert_eq!(m.count_nonzeros(), 4);
        m.add_to_block(2, 1, 2, &b, 1.0);
        assert_eq!(m.count_nonzeros(), 0);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let a = DenseMatrix::from_rows(&[vec![0.5, 1.0], vec![-0.25, 0.1]]).unwrap();
        let p5 = a.powi(5).unwrap();
        let mut manual = DenseMatrix::identity(2);
        for _ in 0..5 {
            manual = manual.matmul(&a).unwrap();
        }
        assert!(p5.max_abs_diff(&manual) < 1e-15);
        assert_eq!(a.powi(0).unwrap(), DenseMatrix::identity(2));
    }
}
