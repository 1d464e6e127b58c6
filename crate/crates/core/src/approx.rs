//! Two ways of approximating the off-diagonal block `C` of a nearly-banded
//! inverse: the block `C0` of the unperturbed inverse (bounded through the
//! Neumann series), and the optimal rank-`p` truncation of `C` itself.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{invert, operator_norm, svd, Matrix, SvdFactors};
use crate::partition::BlockPartition;

/// Tail singular values below this fraction of `sigma_1` are reported as 0.
pub const NOISE_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Serialize)]
pub struct TruncationResult {
    #[serde(rename = "L")]
    pub low_rank: Matrix,
    /// `||C - L|| = sigma_{p+1}(C)`.
    pub error: f64,
    /// `sigma_{p+1}(C), ..., sigma_k(C)`.
    pub tail: Vec<f64>,
}

/// Best rank-`p` approximation in the spectral norm: the SVD with every
/// singular value past the `p`-th set to zero.
pub fn best_rank_approx(c: &Matrix, p: usize) -> Result<TruncationResult> {
    let k = c.rows().min(c.cols());
    if p > k {
        return Err(Error::InvalidRank { rank: p, max: k });
    }
    Ok(truncate(&svd(c)?, p))
}

/// Truncation from an existing SVD; `p` must not exceed the number of
/// singular values.
pub(crate) fn truncate(f: &SvdFactors, p: usize) -> TruncationResult {
    let low_rank = Matrix::from_fn(f.left.rows(), f.right.rows(), |i, j| {
        (0..p).map(|r| f.left[(i, r)] * f.values[r] * f.right[(j, r)]).sum()
    });
    let floor = NOISE_FLOOR * f.largest();
    let tail: Vec<f64> = f.values[p..]
        .iter()
        .map(|&s| if s < floor { 0.0 } else { s })
        .collect();
    let error = tail.first().copied().unwrap_or(0.0);
    TruncationResult { low_rank, error, tail }
}

#[derive(Debug, Clone, Serialize)]
pub struct NeumannReport {
    pub epsilon: f64,
    pub norm_k0inv: f64,
    /// `||K0^{-1}||^2 eps / (1 - ||K0^{-1}|| eps)`; absent when the series
    /// is not guaranteed to converge.
    pub bound: Option<f64>,
    /// `||C - C0||`, absent only when `K0 + dK` is singular.
    pub measured: Option<f64>,
    /// `eps < 1 / ||K0^{-1}||`.
    pub valid: bool,
}

/// The first-order-agnostic estimate `||C - C0|| <= ||K0^{-1}||^2 eps / (1 - ||K0^{-1}|| eps)`.
pub fn neumann_estimate(norm_k0inv: f64, eps: f64) -> Option<f64> {
    (eps * norm_k0inv < 1.0).then(|| norm_k0inv * norm_k0inv * eps / (1.0 - norm_k0inv * eps))
}

/// Compares the Neumann estimate against the actual change in `C`.
///
/// `delta_k` may be either the full `M x M` perturbation (which must vanish
/// outside the `B` block) or the `B` block itself; zero padding preserves
/// the spectral norm, so `eps = ||B||` in both cases.
pub fn neumann_bound(k0: &Matrix, delta_k: &Matrix, parts: BlockPartition) -> Result<NeumannReport> {
    if k0.shape() != (parts.m, parts.m) {
        return Err(Error::InvalidInput(format!(
            "K0 is {}x{}, partition expects order {}",
            k0.rows(),
            k0.cols(),
            parts.m
        )));
    }
    let b = if delta_k.shape() == (parts.n, parts.trail()) {
        delta_k.clone()
    } else if delta_k.shape() == (parts.m, parts.m) {
        let b = parts.b(delta_k);
        if &parts.embed_b(&b) != delta_k {
            return Err(Error::InvalidInput(
                "perturbation must be supported on the B block only".into(),
            ));
        }
        b
    } else {
        return Err(Error::InvalidInput(format!(
            "perturbation shape {}x{} is neither {}x{} nor the B block {}x{}",
            delta_k.rows(),
            delta_k.cols(),
            parts.m,
            parts.m,
            parts.n,
            parts.trail()
        )));
    };

    let k0inv = invert(k0)?;
    let norm_k0inv = operator_norm(&k0inv)?;
    let epsilon = operator_norm(&b)?;
    let bound = neumann_estimate(norm_k0inv, epsilon);
    let measured = match invert(&parts.with_b(k0, &b)) {
        Ok(kinv) => Some(operator_norm(&(&parts.c(&kinv) - &parts.c(&k0inv)))?),
        Err(Error::SingularMatrix { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(NeumannReport {
        epsilon,
        norm_k0inv,
        bound,
        measured,
        valid: bound.is_some(),
    })
}
