use crate::error::{Error, Result};

use super::{svd, Matrix};

/// Solves the square system `A x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when `A` is numerically singular.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "solve_linear needs a square system, got {}x{} with rhs {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        if m[(pivot, col)].abs() <= 1e-13 * scale {
            return Ok(None);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(pivot, k)];
                m[(pivot, k)] = tmp;
            }
            rhs.swap(col, pivot);
        }
        for r in col + 1..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[(r, k)] -= factor * m[(col, k)];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[(i, k)] * x[k]).sum();
        x[i] = (rhs[i] - s) / m[(i, i)];
    }
    Ok(Some(x))
}

/// Moore-Penrose pseudo-inverse from the SVD, dropping singular values below
/// `rcond * sigma_max`.
pub fn pseudo_inverse(a: &Matrix, rcond: f64) -> Result<Matrix> {
    let dec = svd(a)?;
    let cutoff = rcond * dec.singular_values.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..a.cols() {
            for j in 0..a.rows() {
                out[(i, j)] += dec.v[(i, k)] * dec.u[(j, k)] / s;
            }
        }
    }
    Ok(out)
}
