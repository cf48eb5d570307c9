//! One-sided Jacobi (Hestenes) SVD.

use crate::error::{Error, Result};

use super::{dot, Matrix};

#[derive(Clone, Copy, Debug)]
pub struct SvdOptions {
    pub max_sweeps: usize,
    /// Columns `i, j` count as orthogonal once `|u_i . u_j| <= tol * |u_i| |u_j|`.
    pub tol: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            max_sweeps: 100,
            tol: 1e-12,
        }
    }
}

/// Thin SVD `A = U diag(s) V^T` with `k = min(m, n)` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        let mut out = Matrix::zeros(m, n);
        for r in 0..k {
            let s = self.singular_values[r];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let a = s * self.u[(i, r)];
                for j in 0..n {
                    out[(i, j)] += a * self.v[(j, r)];
                }
            }
        }
        out
    }
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    svd_with(a, SvdOptions::default())
}

pub fn svd_with(a: &Matrix, opts: SvdOptions) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose(), opts)?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    svd_tall(a, opts)
}

/// Requires `rows >= cols`. Works on columns of a copy of `A`.
fn svd_tall(a: &Matrix, opts: SvdOptions) -> Result<Svd> {
    let (m, n) = a.shape();
    // column-major working copies
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    // Rotations preserve the total energy; columns below this are rounding
    // noise and would otherwise keep rotating against each other.
    let total: f64 = cols.iter().map(|c| dot(c, c)).sum();
    let floor = f64::EPSILON * f64::EPSILON * total;
    let mut converged = n < 2;
    for _ in 0..opts.max_sweeps {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= opts.tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "jacobi svd",
            iterations: opts.max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let smax = norms[order[0]];
    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let s = norms[idx];
        // Columns this small are numerically zero; their direction is noise.
        let s = if s <= 1e-15 * smax || smax == 0.0 { 0.0 } else { s };
        singular_values.push(s);
        let ucol = if s > 0.0 {
            cols[idx].iter().map(|x| x / s).collect()
        } else {
            complete_basis(&basis, m)
        };
        u.set_column(k, &ucol);
        basis.push(ucol);
        v.set_column(k, &vcols[idx]);
    }
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Unit vector orthogonal to every vector in `basis` (Gram-Schmidt against
/// the standard basis).
fn complete_basis(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best = vec![0.0; m];
    let mut best_norm = -1.0;
    for e in 0..m {
        let mut w = vec![0.0; m];
        w[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= p * bi;
                }
            }
        }
        let nrm = dot(&w, &w).sqrt();
        if nrm > best_norm {
            best_norm = nrm;
            best = w;
        }
        if nrm > 0.5 {
            break;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal_columns(q: &Matrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&Matrix::identity(g.rows())).unwrap().max_abs()
    }

    #[test]
    fn diagonal() {
        let d = svd(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(d.singular_values, vec![3.0, 1.0]);
        let d = svd(&Matrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(d.singular_values, vec![3.0, 1.0]);
    }

    #[test]
    fn zero_matrix() {
        let d = svd(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(d.singular_values, vec![0.0, 0.0]);
        assert!(orthonormal_columns(&d.u) < 1e-14);
        assert!(orthonormal_columns(&d.v) < 1e-14);
    }

    #[test]
    fn wide_and_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        let d = svd(&a).unwrap();
        assert_eq!(d.u.shape(), (2, 2));
        assert_eq!(d.v.shape(), (3, 2));
        assert!((d.singular_values[0] - 70f64.sqrt()).abs() < 1e-12);
        assert!(d.singular_values[1].abs() < 1e-12);
        assert!(d.reconstruct().sub(&a).unwrap().max_abs() < 1e-12);
        assert!(orthonormal_columns(&d.u) < 1e-12);
    }

    #[test]
    fn rank_one_with_repeated_columns() {
        // a single nonzero column; the transpose has three parallel columns
        let a = Matrix::from_rows(&[
            vec![0.0, 0.0, 0.614704943735635, 0.0],
            vec![0.0, 0.0, 0.482398708203238, 0.0],
            vec![-0.0, -0.0, -0.20289634806112694, -0.0],
        ])
        .unwrap();
        let u = [0.3, -1.7, 0.45];
        let w = [1.0, -1.0, 1.0, 1.0];
        for b in [a.clone(), a.transpose(), Matrix::outer(&u, &w), Matrix::outer(&u, &w).transpose()] {
            let d = svd(&b).unwrap();
            assert!(d.singular_values[1] <= 1e-14 * d.singular_values[0]);
            assert!(d.reconstruct().sub(&b).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let a = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(svd(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn sweep_cap_reports_failure() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let r = svd_with(
            &a,
            SvdOptions {
                max_sweeps: 0,
                tol: 1e-12,
            },
        );
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
