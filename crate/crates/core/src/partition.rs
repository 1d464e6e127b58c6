//! Block partitioning of `K` and `K^{-1}`, and numerical checks of the
//! Nullity Theorem and its banded corollary.
//!
//! With `K` of order `M` split as
//!
//! ```text
//!        n+p   M-n-p                    n     M-n
//!   K = [ A     B  ]  n          K^-1 = [ E    C  ]  n+p
//!       [ G     D  ]  M-n               [ H    F  ]  M-n-p
//! ```
//!
//! the blocks `B` and `C` are complementary: `dim ker B = dim ker C`, so a
//! rank-r `B` forces `rank C = r + p`. A banded `K` of bandwidth `p` has
//! `B = 0`, and every such `C` has rank at most `p`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, invert_with_condition, singular_values, Matrix};

/// Condition number above which nullity checks carry a warning.
pub const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

impl BlockPartition {
    pub fn new(m: usize, n: usize, p: usize) -> Result<Self> {
        if n < 1 || n + p + 1 > m {
            return Err(Error::PartitionBounds { m, n, p });
        }
        Ok(BlockPartition { m, n, p })
    }

    /// Columns of `A` (and rows of `C`).
    pub fn lead(&self) -> usize {
        self.n + self.p
    }

    /// Columns of `B` and `D`.
    pub fn trail(&self) -> usize {
        self.m - self.n - self.p
    }

    /// Rows of `G` and `D` (and columns of `C`).
    pub fn lower(&self) -> usize {
        self.m - self.n
    }

    /// Every admissible `n` for an order-`m` matrix with offset `p`.
    pub fn admissible_n(m: usize, p: usize) -> std::ops::RangeInclusive<usize> {
        1..=m.saturating_sub(p + 1)
    }

    pub fn a(&self, k: &Matrix) -> Matrix {
        k.block(0, 0, self.n, self.lead())
    }

    pub fn b(&self, k: &Matrix) -> Matrix {
        k.block(0, self.lead(), self.n, self.trail())
    }

    pub fn g(&self, k: &Matrix) -> Matrix {
        k.block(self.n, 0, self.lower(), self.lead())
    }

    pub fn d(&self, k: &Matrix) -> Matrix {
        k.block(self.n, self.lead(), self.lower(), self.trail())
    }

    pub fn e(&self, kinv: &Matrix) -> Matrix {
        kinv.block(0, 0, self.lead(), self.n)
    }

    pub fn c(&self, kinv: &Matrix) -> Matrix {
        kinv.block(0, self.n, self.lead(), self.lower())
    }

    pub fn h(&self, kinv: &Matrix) -> Matrix {
        kinv.block(self.lead(), 0, self.trail(), self.n)
    }

    pub fn f(&self, kinv: &Matrix) -> Matrix {
        kinv.block(self.lead(), self.n, self.trail(), self.lower())
    }

    /// `K` with the given `B` block, other blocks taken from `k0`.
    pub fn with_b(&self, k0: &Matrix, b: &Matrix) -> Matrix {
        assert_eq!(b.shape(), (self.n, self.trail()), "B has the wrong shape");
        let mut k = k0.clone();
        k.set_block(0, self.lead(), b);
        k
    }

    /// Embeds `B` into an otherwise zero `M x M` matrix.
    pub fn embed_b(&self, b: &Matrix) -> Matrix {
        self.with_b(&Matrix::zeros(self.m, self.m), b)
    }
}

/// `K`, its inverse and all eight named blocks.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionedSystem {
    pub k: Matrix,
    pub kinv: Matrix,
    pub partition: BlockPartition,
    pub condition: f64,
    pub a: Matrix,
    pub b: Matrix,
    pub g: Matrix,
    pub d: Matrix,
    pub e: Matrix,
    pub c: Matrix,
    pub h: Matrix,
    pub f: Matrix,
}

impl PartitionedSystem {
    pub fn reassemble_k(&self) -> Matrix {
        Matrix::from_blocks(&self.a, &self.b, &self.g, &self.d)
    }

    pub fn reassemble_kinv(&self) -> Matrix {
        Matrix::from_blocks(&self.e, &self.c, &self.h, &self.f)
    }
}

pub fn partition_system(k: &Matrix, n: usize, p: usize) -> Result<PartitionedSystem> {
    if !k.is_square() {
        return Err(Error::InvalidInput(format!(
            "K must be square, got {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let part = BlockPartition::new(k.rows(), n, p)?;
    let (kinv, condition) = invert_with_condition(k)?;
    Ok(PartitionedSystem {
        a: part.a(k),
        b: part.b(k),
        g: part.g(k),
        d: part.d(k),
        e: part.e(&kinv),
        c: part.c(&kinv),
        h: part.h(&kinv),
        f: part.f(&kinv),
        k: k.clone(),
        kinv,
        partition: part,
        condition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullityReport {
    #[serde(rename = "nullity_B")]
    pub nullity_b: usize,
    #[serde(rename = "nullity_C")]
    pub nullity_c: usize,
    #[serde(rename = "rank_B")]
    pub rank_b: usize,
    #[serde(rename = "rank_C")]
    pub rank_c: usize,
    pub tolerance: f64,
    pub theorem_holds: bool,
    /// Set when `cond(K)` exceeds [`ILL_CONDITIONED`]; the numbers are then
    /// only weak corroboration of an exact-arithmetic statement.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub ill_conditioned: bool,
}

/// Nullities are kernel dimensions (`cols - rank`) at a relative threshold
/// against the largest singular value of the same block.
pub fn check_nullity_theorem(sys: &PartitionedSystem, rel_tol: f64) -> Result<NullityReport> {
    let rank_b = linalg::rank(&sys.b, rel_tol)?;
    let rank_c = linalg::rank(&sys.c, rel_tol)?;
    let nullity_b = sys.b.cols() - rank_b;
    let nullity_c = sys.c.cols() - rank_c;
    Ok(NullityReport {
        nullity_b,
        nullity_c,
        rank_b,
        rank_c,
        tolerance: rel_tol,
        theorem_holds: nullity_b == nullity_c,
        ill_conditioned: sys.condition > ILL_CONDITIONED,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryRow {
    pub n: usize,
    pub rank_c: usize,
    /// `sigma_{p+1}(C) / sigma_1(C)`, 0 when `C` vanishes or has at most
    /// `p` singular values.
    pub tail_ratio: f64,
}

/// Returns the bandwidth violation with the largest magnitude, if any.
pub fn find_bandwidth_violation(k: &Matrix, bandwidth: usize) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            let v = k[(i, j)];
            if i.abs_diff(j) > bandwidth && v != 0.0 && worst.is_none_or(|(_, _, w)| v.abs() > w.abs()) {
                worst = Some((i, j, v));
            }
        }
    }
    worst
}

/// Rank of every upper off-diagonal block `C` of `K^{-1}` for a banded `K`.
pub fn check_banded_corollary(k: &Matrix, bandwidth: usize, rel_tol: f64) -> Result<Vec<CorollaryRow>> {
    if !k.is_square() {
        return Err(Error::InvalidInput("K must be square".into()));
    }
    if let Some((row, col, value)) = find_bandwidth_violation(k, bandwidth) {
        return Err(Error::BandwidthViolation {
            bandwidth,
            row,
            col,
            value,
        });
    }
    let m = k.rows();
    let (kinv, _) = invert_with_condition(k)?;
    BlockPartition::admissible_n(m, bandwidth)
        .map(|n| {
            let part = BlockPartition::new(m, n, bandwidth)?;
            let s = singular_values(&part.c(&kinv))?;
            let rank_c = s.len() - linalg::nullity_of_values(&s, rel_tol);
            let top = s[0];
            let tail_ratio = if top == 0.0 {
                0.0
            } else {
                s.get(bandwidth).copied().unwrap_or(0.0) / top
            };
            Ok(CorollaryRow { n, rank_c, tail_ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri3() -> Matrix {
        Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap()
    }

    #[test]
    fn identity_blocks() {
        let sys = partition_system(&Matrix::identity(4), 1, 1).unwrap();
        assert_eq!(sys.b, Matrix::zeros(1, 2));
        assert_eq!(sys.c.shape(), (2, 3));
        // the overlap of C with the diagonal carries the identity's 1
        assert_eq!(sys.c.to_rows(), vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
    }

    #[test]
    fn tridiagonal_blocks() {
        let sys = partition_system(&tri3(), 1, 1).unwrap();
        assert_eq!(sys.a.to_rows(), vec![vec![2.0, 1.0]]);
        assert_eq!(sys.b.to_rows(), vec![vec![0.0]]);
        assert_eq!(sys.reassemble_k(), sys.k);
        assert_eq!(sys.reassemble_kinv(), sys.kinv);
    }

    #[test]
    fn partition_errors() {
        assert_eq!(partition_system(&tri3(), 0, 1).unwrap_err().code(), "partition-bounds");
        assert_eq!(partition_system(&tri3(), 2, 1).unwrap_err().code(), "partition-bounds");
        let sing = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(partition_system(&sing, 1, 0).unwrap_err().code(), "singular-matrix");
        assert_eq!(partition_system(&Matrix::zeros(2, 3), 1, 0).unwrap_err().code(), "invalid-input");
    }

    #[test]
    fn nullity_on_tridiagonal() {
        let sys = partition_system(&tri3(), 1, 1).unwrap();
        let r = check_nullity_theorem(&sys, 1e-8).unwrap();
        assert_eq!((r.nullity_b, r.nullity_c, r.rank_c), (1, 1, 1));
        assert!(r.theorem_holds);
        assert!(!r.ill_conditioned);
    }

    #[test]
    fn nullity_on_identity() {
        for m in 3..8 {
            for n in 1..m {
                for p in 0..m - n {
                    let sys = partition_system(&Matrix::identity(m), n, p).unwrap();
                    let r = check_nullity_theorem(&sys, 1e-8).unwrap();
                    assert_eq!(r.nullity_b, m - n - p);
                    assert_eq!(r.nullity_c, m - n - p);
                }
            }
        }
    }

    #[test]
    fn report_json_has_six_fields() {
        let sys = partition_system(&tri3(), 1, 1).unwrap();
        let r = check_nullity_theorem(&sys, 1e-8).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), 6);
        for key in ["nullity_B", "nullity_C", "rank_B", "rank_C", "tolerance", "theorem_holds"] {
            assert!(obj.contains_key(key), "{key}");
        }
    }

    #[test]
    fn ill_conditioned_flag() {
        let k = Matrix::diag(&[1.0, 1.0, 1e-9, 1.0]);
        let sys = partition_system(&k, 1, 1).unwrap();
        let r = check_nullity_theorem(&sys, 1e-8).unwrap();
        assert!(r.ill_conditioned);
        assert!(serde_json::to_value(&r).unwrap().get("ill_conditioned").is_some());
    }

    #[test]
    fn corollary_diagonal_and_tridiagonal() {
        let rows = check_banded_corollary(&Matrix::diag(&[1.0, 2.0, 3.0, 4.0]), 0, 1e-8).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.rank_c == 0 && r.tail_ratio == 0.0));

        let rows = check_banded_corollary(&tri3(), 1, 1e-8).unwrap();
        assert_eq!(rows, vec![CorollaryRow { n: 1, rank_c: 1, tail_ratio: rows[0].tail_ratio }]);
        assert!(rows[0].tail_ratio < 1e-15);
    }

    #[test]
    fn corollary_rejects_non_banded() {
        let mut k = tri3();
        k[(0, 2)] = 0.5;
        match check_banded_corollary(&k, 1, 1e-8) {
            Err(Error::BandwidthViolation { row: 0, col: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
