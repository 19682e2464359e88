//! Small dense linear algebra: a column-major matrix, Cholesky solves for
//! the oracle's normal equations and a rank computation for the full-rank
//! event on sampled designs.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense real matrix stored column by column.
///
/// Serializes as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        let mut out = Self::zeros(n, m);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("column length differs from row count".into()));
        }
        let data = columns.iter().flat_map(|c| c.iter().copied()).collect();
        Ok(Self { rows, cols: columns.len(), data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (o, &v) in out.iter_mut().zip(self.column(j)) {
                    *o += v * xj;
                }
            }
        }
        out
    }

    /// `selfᵀ · y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), y)).collect()
    }

    /// Columns listed in `subset`, in that order.
    pub fn select_columns(&self, subset: &[usize]) -> Matrix {
        let data = subset.iter().flat_map(|&j| self.column(j).iter().copied()).collect();
        Matrix { rows: self.rows, cols: subset.len(), data }
    }

    /// Principal submatrix on `subset`.
    pub fn principal(&self, subset: &[usize]) -> Matrix {
        let k = subset.len();
        let mut out = Matrix::zeros(k, k);
        for (a, &i) in subset.iter().enumerate() {
            for (b, &j) in subset.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `a · x = b` for symmetric positive definite `a`.
///
/// Returns `None` when a pivot falls below `rel_tol` times the largest
/// diagonal entry, i.e. when `a` is numerically singular.
pub fn cholesky_solve(a: &Matrix, b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let k = a.nrows();
    debug_assert!(a.is_square() && b.len() == k);
    if k == 0 {
        return Some(Vec::new());
    }
    let scale = (0..k).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let floor = rel_tol * scale;
    let mut l = Matrix::zeros(k, k);
    for j in 0..k {
        let mut d = a[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if !(d > floor) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..k {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / djj;
        }
    }
    let mut z = b.to_vec();
    for i in 0..k {
        for p in 0..i {
            z[i] -= l[(i, p)] * z[p];
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            z[i] -= l[(p, i)] * z[p];
        }
        z[i] /= l[(i, i)];
    }
    Some(z)
}

/// Numerical rank by Gaussian elimination with complete pivoting.
///
/// A pivot counts when it exceeds `max(rows, cols) · ε · |first pivot|`.
pub fn rank(m: &Matrix) -> usize {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut row_of: Vec<usize> = (0..rows).collect();
    let mut col_of: Vec<usize> = (0..cols).collect();
    let steps = rows.min(cols);
    let mut tol = None;
    for s in 0..steps {
        let (mut pi, mut pj, mut best) = (s, s, -1.0);
        for j in s..cols {
            for i in s..rows {
                let v = a[(row_of[i], col_of[j])].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        let tol = *tol.get_or_insert(rows.max(cols) as f64 * f64::EPSILON * best);
        if !(best > tol) || best == 0.0 {
            return s;
        }
        row_of.swap(s, pi);
        col_of.swap(s, pj);
        let (pr, pc) = (row_of[s], col_of[s]);
        let pivot = a[(pr, pc)];
        for i in s + 1..rows {
            let r = row_of[i];
            let factor = a[(r, pc)] / pivot;
            if factor != 0.0 {
                for j in s..cols {
                    let c = col_of[j];
                    let v = a[(pr, c)];
                    a[(r, c)] -= factor * v;
                }
            }
        }
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, &[2.0, 1.0], 1e-12).unwrap();
        // 4x + 2y = 2, 2x + 3y = 1  =>  x = 0.5, y = 0
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(cholesky_solve(&a, &[1.0, 1.0], 1e-12).is_none());
    }

    #[test]
    fn rank_of_tall_wide_and_deficient() {
        let tall = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(rank(&tall), 2);
        let dup = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(rank(&dup), 1);
        let wide = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 5.0]]).unwrap();
        assert_eq!(rank(&wide), 2);
        assert_eq!(rank(&Matrix::zeros(3, 2)), 0);
    }

    #[test]
    fn rows_round_trip_through_column_storage() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = Matrix::from_rows(&rows).unwrap();
        assert_eq!(m.column(1), &[2.0, 5.0]);
        assert_eq!(m.to_rows(), rows);
        assert_eq!(m.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }
}
