//! Small dense helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &Mat) -> f64 {
    max_abs(&(m - m.transpose()))
}

pub fn require_square(m: &Mat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn require_symmetric(m: &Mat, tol: f64) -> Result<()> {
    require_square(m)?;
    let a = asymmetry(m);
    if a > tol {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    Ok(())
}

/// Inverse through LU; `None` when the pivot search fails.
pub fn inverse(m: &Mat) -> Option<Mat> {
    m.clone().lu().try_inverse()
}

pub fn det(m: &Mat) -> f64 {
    m.clone().lu().determinant()
}

/// Row-major flattening, the order used by every on-disk format.
pub fn to_row_major(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Mat> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            found: data.len(),
        });
    }
    Ok(Mat::from_row_slice(rows, cols, data))
}

pub fn scalar(v: f64) -> Mat {
    Mat::from_element(1, 1, v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(m: &Mat, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Quadratic form Mv·v.
pub fn quad_form(m: &Mat, v: &[f64]) -> f64 {
    dot(&mat_vec(m, v), v)
}

/// Symmetrize by averaging with the transpose.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}
