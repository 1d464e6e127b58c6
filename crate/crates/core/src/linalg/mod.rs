//! Dense real linear algebra: the matrix type, a Jacobi SVD, norms,
//! inversion and numerical rank.

mod matrix;
pub mod mm;
mod svd;

pub use matrix::Matrix;
pub use svd::{singular_values, svd, SvdFactors};

use crate::error::{Error, Result};

/// Relative rank tolerance used wherever a caller does not pass one.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// `invert` refuses matrices with `sigma_min < SINGULAR_RATIO * sigma_max`.
pub const SINGULAR_RATIO: f64 = 1e-13;

/// Spectral norm.
pub fn operator_norm(x: &Matrix) -> Result<f64> {
    Ok(singular_values(x)?.first().copied().unwrap_or(0.0))
}

/// 2-norm condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number(x: &Matrix) -> Result<f64> {
    let s = singular_values(x)?;
    let hi = s.first().copied().unwrap_or(0.0);
    let lo = s.last().copied().unwrap_or(0.0);
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

/// Inverse of a square matrix together with its 2-norm condition number.
pub fn invert_with_condition(x: &Matrix) -> Result<(Matrix, f64)> {
    if !x.is_square() {
        return Err(Error::InvalidInput(format!(
            "cannot invert a non-square {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    let s = singular_values(x)?;
    let hi = s.first().copied().unwrap_or(0.0);
    let lo = s.last().copied().unwrap_or(0.0);
    if hi == 0.0 || lo < SINGULAR_RATIO * hi {
        return Err(Error::SingularMatrix {
            ratio: if hi == 0.0 { 0.0 } else { lo / hi },
        });
    }
    Ok((lu_inverse(x), hi / lo))
}

pub fn invert(x: &Matrix) -> Result<Matrix> {
    invert_with_condition(x).map(|(inv, _)| inv)
}

/// LU with partial pivoting; the caller has already ruled out singularity.
fn lu_inverse(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut lu = x.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&a, &b| lu[(a, k)].abs().total_cmp(&lu[(b, k)].abs()))
            .unwrap();
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            perm.swap(k, piv);
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            lu[(i, k)] = l;
            if l != 0.0 {
                for j in k + 1..n {
                    lu[(i, j)] -= l * lu[(k, j)];
                }
            }
        }
    }
    let mut inv = Matrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for c in 0..n {
        for i in 0..n {
            col[i] = if perm[i] == c { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = col[i];
            for j in 0..i {
                s -= lu[(i, j)] * col[j];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for j in i + 1..n {
                s -= lu[(i, j)] * col[j];
            }
            col[i] = s / lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, c)] = col[i];
        }
    }
    inv
}

/// Number of singular values `<= rel_tol * sigma_1`; the zero matrix has
/// nullity `min(rows, cols)`.
pub fn nullity(x: &Matrix, rel_tol: f64) -> Result<usize> {
    let s = singular_values(x)?;
    Ok(nullity_of_values(&s, rel_tol))
}

/// Numerical rank at `rel_tol`; `rank + nullity = min(rows, cols)`.
pub fn rank(x: &Matrix, rel_tol: f64) -> Result<usize> {
    let s = singular_values(x)?;
    Ok(s.len() - nullity_of_values(&s, rel_tol))
}

pub(crate) fn nullity_of_values(values: &[f64], rel_tol: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return values.len();
    }
    values.iter().filter(|&&s| s <= rel_tol * top).count()
}

/// Dimension of the kernel: `cols - rank` at `rel_tol`.
pub fn kernel_dim(x: &Matrix, rel_tol: f64) -> Result<usize> {
    Ok(x.cols() - rank(x, rel_tol)?)
}
