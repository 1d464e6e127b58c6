//! One-sided (Hestenes) Jacobi singular value decomposition.
//!
//! The columns of a working copy are rotated pairwise until every pair is
//! orthogonal to within `ORTH_TOL` relative to the column norms. The sweep
//! order is fixed (cyclic by rows), so identical inputs produce identical
//! bits. One-sided Jacobi determines small singular values to high relative
//! accuracy, which matters here because every quantity of interest is a
//! trailing singular value that is nearly zero.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::Matrix;

const ORTH_TOL: f64 = 4.0 * f64::EPSILON;
const MAX_SWEEPS: usize = 100;
/// Columns whose norm falls below this are treated as exactly zero and their
/// left singular vectors are completed by Gram-Schmidt.
const ZERO_COLUMN: f64 = 1e-290;

/// Thin SVD `X = left * diag(values) * right^T`.
///
/// `left` is `rows x k`, `right` is `cols x k` with `k = min(rows, cols)`;
/// `values` are non-negative and sorted descending. The first entry of each
/// left singular vector that exceeds `1e-12` in magnitude is non-negative.
#[derive(Debug, Clone, Serialize)]
pub struct SvdFactors {
    pub left: Matrix,
    pub values: Vec<f64>,
    pub right: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.values.len();
        let scaled = Matrix::from_fn(self.left.rows(), k, |i, j| self.left[(i, j)] * self.values[j]);
        scaled.matmul(&self.right.transpose())
    }

    /// Largest singular value, 0 for an empty decomposition.
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Smallest of the `min(rows, cols)` singular values.
    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `sigma_k` with 1-based `k`; zero past the end, matching the
    /// convention that a rank-r matrix has `sigma_{r+1} = 0`.
    pub fn sigma(&self, k: usize) -> f64 {
        assert!(k >= 1, "singular values are 1-indexed");
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }
}

/// Full thin SVD. Fails only on non-finite input.
pub fn svd(x: &Matrix) -> Result<SvdFactors> {
    x.ensure_finite()?;
    if x.rows() < x.cols() {
        let t = jacobi(&x.transpose(), true);
        let mut f = SvdFactors {
            left: t.right.expect("right factor requested"),
            values: t.values,
            right: t.left,
        };
        fix_signs(&mut f);
        return Ok(f);
    }
    let t = jacobi(x, true);
    let mut f = SvdFactors {
        left: t.left,
        values: t.values,
        right: t.right.expect("right factor requested"),
    };
    fix_signs(&mut f);
    Ok(f)
}

/// Singular values only, descending; `min(rows, cols)` of them.
pub fn singular_values(x: &Matrix) -> Result<Vec<f64>> {
    x.ensure_finite()?;
    let t = if x.rows() < x.cols() {
        jacobi(&x.transpose(), false)
    } else {
        jacobi(x, false)
    };
    Ok(t.values)
}

struct Jacobi {
    left: Matrix,
    values: Vec<f64>,
    right: Option<Matrix>,
}

/// Requires `rows >= cols`.
fn jacobi(x: &Matrix, want_right: bool) -> Jacobi {
    let m = x.rows();
    let n = x.cols();
    debug_assert!(m >= n);

    // column-major working storage
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut v: Vec<Vec<f64>> = if want_right {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    } else {
        Vec::new()
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (ap, aq) = (&a[p], &a[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for k in 0..m {
                        alpha += ap[k] * ap[k];
                        beta += aq[k] * aq[k];
                        gamma += ap[k] * aq[k];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                if want_right {
                    rotate(&mut v, p, q, c, s);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the result deterministic under ties
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut values = Vec::with_capacity(n);
    let mut u_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for &j in &order {
        let s = norms[j];
        if s > ZERO_COLUMN {
            values.push(s);
            u_cols.push(Some(a[j].iter().map(|x| x / s).collect()));
        } else {
            values.push(0.0);
            u_cols.push(None);
        }
    }
    let u_cols = complete_orthonormal(m, u_cols);
    let left = Matrix::from_fn(m, n, |i, j| u_cols[j][i]);
    let right = want_right.then(|| Matrix::from_fn(n, n, |i, j| v[order[j]][i]));
    Jacobi { left, values, right }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills `None` slots with unit vectors orthogonal to every other column,
/// trying standard basis vectors in order.
fn complete_orthonormal(m: usize, cols: Vec<Option<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut fixed: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let known: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut extra: Vec<Vec<f64>> = Vec::new();
    let mut next_basis = 0;
    for c in cols {
        match c {
            Some(v) => fixed.push(v),
            None => {
                let mut chosen = None;
                while next_basis < m {
                    let mut e = vec![0.0; m];
                    e[next_basis] = 1.0;
                    next_basis += 1;
                    for _ in 0..2 {
                        for b in known.iter().chain(extra.iter()) {
                            let d: f64 = b.iter().zip(&e).map(|(x, y)| x * y).sum();
                            for (ek, bk) in e.iter_mut().zip(b) {
                                *ek -= d * bk;
                            }
                        }
                    }
                    let nrm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if nrm > 0.5 {
                        e.iter_mut().for_each(|x| *x /= nrm);
                        chosen = Some(e);
                        break;
                    }
                }
                let e = chosen.expect("orthogonal completion exhausted the basis");
                extra.push(e.clone());
                fixed.push(e);
            }
        }
    }
    fixed
}

fn fix_signs(f: &mut SvdFactors) {
    let (m, k) = f.left.shape();
    for j in 0..k {
        let lead = (0..m).map(|i| f.left[(i, j)]).find(|v| v.abs() > 1e-12);
        if matches!(lead, Some(v) if v < 0.0) {
            for i in 0..m {
                f.left[(i, j)] = -f.left[(i, j)];
            }
            for i in 0..f.right.rows() {
                f.right[(i, j)] = -f.right[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orth_defect(q: &Matrix) -> f64 {
        let g = q.transpose().matmul(q);
        (&g - &Matrix::identity(g.rows())).max_abs()
    }

    #[test]
    fn diagonal_values() {
        let f = svd(&Matrix::diag(&[3.0, 2.0, 1.0])).unwrap();
        assert_eq!(f.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn unsorted_diagonal_is_sorted() {
        let f = svd(&Matrix::diag(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(f.values, vec![3.0, 2.0, 1.0]);
        assert!((&f.reconstruct() - &Matrix::diag(&[1.0, 3.0, 2.0])).max_abs() < 1e-15);
    }

    #[test]
    fn zero_wide_matrix() {
        let f = svd(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(f.values, vec![0.0, 0.0]);
        assert_eq!(f.left.shape(), (2, 2));
        assert_eq!(f.right.shape(), (3, 2));
        assert!(orth_defect(&f.left) < 1e-15);
        assert!(orth_defect(&f.right) < 1e-15);
    }

    #[test]
    fn rank_one_ones() {
        // eigenvalues of X^T X are 4 and 0
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let f = svd(&x).unwrap();
        assert!((f.values[0] - 2.0).abs() < 1e-15);
        assert!(f.values[1].abs() < 1e-15);
        assert!(orth_defect(&f.left) < 1e-14);
        assert!((&f.reconstruct() - &x).max_abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        let mut x = Matrix::zeros(2, 2);
        x[(0, 1)] = f64::INFINITY;
        assert_eq!(svd(&x).unwrap_err().code(), "invalid-input");
        assert_eq!(singular_values(&x).unwrap_err().code(), "invalid-input");
    }

    #[test]
    fn sign_convention() {
        let x = Matrix::from_rows(&[vec![-2.0, 0.0], vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap();
        let f = svd(&x).unwrap();
        for j in 0..2 {
            let lead = (0..3).map(|i| f.left[(i, j)]).find(|v| v.abs() > 1e-12).unwrap();
            assert!(lead > 0.0);
        }
        assert!((&f.reconstruct() - &x).max_abs() < 1e-15);
    }

    #[test]
    fn values_only_match_full() {
        let x = Matrix::from_fn(5, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
        let a = svd(&x).unwrap().values;
        let b = singular_values(&x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
