//! A one-dimensional Schrödinger operator `-d^2/dx^2 + V` on `[0, 1]` with
//! Dirichlet boundaries, perturbed by an integral operator `eps W`.
//!
//! The grid is `x_i = i h`, `i = 1..N`, `h = 1 / (N + 1)`. Kernels act
//! through uniform quadrature, so the discrete operator of a kernel matrix
//! `W` is `h W` and its norm is `||h W||`. Grid indices are 1-based in the
//! documentation and 0-based in code.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{invert, nullity, operator_norm, singular_values, Matrix, DEFAULT_RANK_TOL};
use crate::rng;

/// Tolerance on `||h W|| = 1`.
pub const KERNEL_NORM_TOL: f64 = 1e-9;

pub fn grid_step(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// 1-based grid index nearest to `x`, rounding half up.
pub fn grid_index(x: f64, n: usize) -> usize {
    let t = (x / grid_step(n) + 0.5).floor();
    if t <= 0.0 {
        0
    } else {
        t as usize
    }
}

/// `(-1, 2, -1) / h^2 + diag(V)`.
pub fn discretize_schrodinger(v: &[f64], n: usize) -> Result<Matrix> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("grid size must be at least 3, got {n}")));
    }
    if v.len() != n {
        return Err(Error::InvalidInput(format!("{} potential samples for a grid of {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("potential has non-finite samples".into()));
    }
    let h = grid_step(n);
    let s = 1.0 / (h * h);
    Ok(Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 * s + v[i],
        1 => -s,
        _ => 0.0,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    Zero,
    /// `-depth` on the middle third of the interval.
    Well(u32),
}

impl Potential {
    pub fn samples(self, n: usize) -> Vec<f64> {
        let h = grid_step(n);
        (1..=n)
            .map(|i| match self {
                Potential::Zero => 0.0,
                Potential::Well(depth) => {
                    let x = i as f64 * h;
                    if (1.0 / 3.0..=2.0 / 3.0).contains(&x) {
                        -(depth as f64)
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(Potential::Zero);
        }
        match s.strip_prefix("well:").map(str::parse) {
            Some(Ok(d)) => Ok(Potential::Well(d)),
            _ => Err(Error::InvalidArgument(format!("unknown potential '{s}' (expected zero or well:<depth>)"))),
        }
    }
}

/// Index rectangles of the two support regions, 0-based and half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Rows with `x <= x1`, columns with `x >= x0` (strictly outside the
    /// overlap): the only part of `W` that can raise the off-diagonal rank.
    Far,
    /// Rows with `x >= x1`, columns with `x <= x0`.
    Near,
}

struct Thresholds {
    i0: usize,
    i1: usize,
}

fn thresholds(x0: f64, x1: f64, n: usize) -> Thresholds {
    Thresholds {
        i0: grid_index(x0, n),
        i1: grid_index(x1, n),
    }
}

impl Region {
    fn ranges(self, t: &Thresholds, n: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        match self {
            // 1-based rows i < i1, columns j > i0
            Region::Far => (0..t.i1.saturating_sub(1).min(n), t.i0.min(n)..n),
            // 1-based rows i >= i1, columns j <= i0
            Region::Near => (t.i1.saturating_sub(1).min(n)..n, 0..t.i0.min(n)),
        }
    }

    fn contains(self, t: &Thresholds, n: usize, i: usize, j: usize) -> bool {
        let (r, c) = self.ranges(t, n);
        r.contains(&i) && c.contains(&j)
    }
}

/// Rank-one kernel `u v^T` on one support region, with Gaussian `u`, `v`
/// drawn from `seed` and scaled so that `||h W|| = 1`.
pub fn offdiag_kernel(n: usize, x0: f64, x1: f64, seed: u64, region: Region) -> Result<Matrix> {
    let t = thresholds(x0, x1, n);
    let (rows, cols) = region.ranges(&t, n);
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::DegenerateDomain(format!("{region:?} support region is empty on a grid of {n}")));
    }
    let mut r = rng::substream(seed, 0);
    let gu = rng::gaussian(&mut r, rows.len(), 1);
    let gv = rng::gaussian(&mut r, cols.len(), 1);
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for (k, i) in rows.enumerate() {
        u[i] = gu[(k, 0)];
    }
    for (k, j) in cols.enumerate() {
        v[j] = gv[(k, 0)];
    }
    let w = Matrix::outer(&u, &v);
    let norm = operator_norm(&w)? * grid_step(n);
    Ok(w.scale(1.0 / norm))
}

pub fn rank1_offdiag_kernel(n: usize, x0: f64, x1: f64, seed: u64) -> Result<Matrix> {
    offdiag_kernel(n, x0, x1, seed, Region::Far)
}

/// `(sigma1, sigma2)`: reciprocal square roots of the rectangle-rule
/// integrals of `|G0(y, y')|^2` over `[0, x0] x [0, x1]` and
/// `[x0, 1] x [x1, 1]`.
///
/// `g0` is the inverse of the discretized operator; the kernel it
/// represents is `g0 / h`, so each integral is `sum |g0|^2` over the
/// index rectangle.
pub fn green_sigmas(g0: &Matrix, x0: f64, x1: f64, n: usize) -> Result<(f64, f64)> {
    if g0.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "Green's matrix is {}x{}, grid size is {n}",
            g0.rows(),
            g0.cols()
        )));
    }
    let t = thresholds(x0, x1, n);
    if t.i0 == 0 || t.i1 == 0 || t.i0 > n || t.i1 > n {
        return Err(Error::DegenerateDomain(format!(
            "x0 = {x0}, x1 = {x1} round to grid indices {} and {} outside 1..={n}",
            t.i0, t.i1
        )));
    }
    let sum = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> f64 {
        rows.flat_map(|i| cols.clone().map(move |j| (i, j)))
            .map(|(i, j)| g0[(i, j)] * g0[(i, j)])
            .sum()
    };
    let i1 = sum(0..t.i0, 0..t.i1);
    let i2 = sum(t.i0 - 1..n, t.i1 - 1..n);
    if i1 == 0.0 || i2 == 0.0 {
        return Err(Error::DegenerateDomain("Green's function vanishes on an integration rectangle".into()));
    }
    Ok((i1.powf(-0.5), i2.powf(-0.5)))
}

#[derive(Debug, Clone)]
pub struct ContinuousProblem {
    pub grid_size: usize,
    pub potential: Vec<f64>,
    pub x0: f64,
    pub x1: f64,
    pub eps: f64,
    pub kernel: Matrix,
}

impl ContinuousProblem {
    pub fn new(potential: Vec<f64>, x0: f64, x1: f64, eps: f64, kernel: Matrix) -> Result<Self> {
        let n = potential.len();
        if !(0.0 < x1 && x1 < x0 && x0 < 1.0) {
            return Err(Error::InvalidInput(format!("need 0 < x1 < x0 < 1, got x1 = {x1}, x0 = {x0}")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidInput(format!("eps must be finite and non-negative, got {eps}")));
        }
        if kernel.shape() != (n, n) {
            return Err(Error::InvalidInput(format!(
                "kernel is {}x{}, grid size is {n}",
                kernel.rows(),
                kernel.cols()
            )));
        }
        kernel.ensure_finite()?;
        let t = thresholds(x0, x1, n);
        for i in 0..n {
            for j in 0..n {
                let v = kernel[(i, j)];
                if v != 0.0 && !Region::Far.contains(&t, n, i, j) && !Region::Near.contains(&t, n, i, j) {
                    return Err(Error::InvalidInput(format!(
                        "kernel entry ({}, {}) = {v:e} lies outside the admissible support",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let norm = operator_norm(&kernel)? * grid_step(n);
        if (norm - 1.0).abs() > KERNEL_NORM_TOL {
            return Err(Error::InvalidInput(format!("kernel must have unit operator norm, got {norm}")));
        }
        Ok(ContinuousProblem {
            grid_size: n,
            potential,
            x0,
            x1,
            eps,
            kernel,
        })
    }

    pub fn h0(&self) -> Result<Matrix> {
        discretize_schrodinger(&self.potential, self.grid_size)
    }

    /// `H0 + eps h W`.
    pub fn perturbed(&self) -> Result<Matrix> {
        let h = grid_step(self.grid_size);
        Ok(&self.h0()? + &self.kernel.scale(self.eps * h))
    }

    /// Rows with `x <= x0` and columns with `x >= x1`.
    pub fn offdiag_block(&self, g: &Matrix) -> Matrix {
        let n = self.grid_size;
        let t = thresholds(self.x0, self.x1, n);
        let c0 = t.i1.saturating_sub(1);
        g.block(0, c0, t.i0.min(n), n - c0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuousReport {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `eps / (sigma1 sigma2)`.
    pub bound: f64,
    /// `sigma_{n+1}` of the perturbed off-diagonal block.
    pub measured: f64,
    /// Numerical rank of the unperturbed off-diagonal block.
    pub offdiag_rank_n: usize,
    /// `measured / bound`, absent when `eps = 0`.
    pub ratio: Option<f64>,
    /// Smallest `c >= 0` with `measured <= bound (1 + c eps)`.
    pub slack_constant: Option<f64>,
    pub norm_h0_inverse: f64,
}

pub fn verify_continuous_bound(prob: &ContinuousProblem) -> Result<ContinuousReport> {
    let n = prob.grid_size;
    let h0 = prob.h0()?;
    let g0 = invert(&h0)?;
    let norm_g0 = operator_norm(&g0)?;
    if prob.eps * norm_g0 >= 1.0 {
        return Err(Error::Invertibility(format!(
            "eps = {:e} is not below 1 / ||H0^-1|| = {:e}",
            prob.eps,
            1.0 / norm_g0
        )));
    }
    let (sigma1, sigma2) = green_sigmas(&g0, prob.x0, prob.x1, n)?;

    let block0 = prob.offdiag_block(&g0);
    let rank_n = block0.cols().min(block0.rows()) - nullity(&block0, DEFAULT_RANK_TOL)?;
    let g = invert(&prob.perturbed()?)?;
    let s = singular_values(&prob.offdiag_block(&g))?;
    let measured = s.get(rank_n).copied().unwrap_or(0.0);
    let bound = prob.eps / (sigma1 * sigma2);
    let ratio = (prob.eps > 0.0).then(|| measured / bound);
    Ok(ContinuousReport {
        sigma1,
        sigma2,
        bound,
        measured,
        offdiag_rank_n: rank_n,
        ratio,
        slack_constant: ratio.map(|r| (r - 1.0).max(0.0) / prob.eps),
        norm_h0_inverse: norm_g0,
    })
}

/// `||G - G0 + eps G0 (h W) G0||`, the remainder after the first-order term
/// of the Neumann expansion.
pub fn first_order_residual(prob: &ContinuousProblem) -> Result<f64> {
    let h = grid_step(prob.grid_size);
    let g0 = invert(&prob.h0()?)?;
    let g = invert(&prob.perturbed()?)?;
    let first = g0.matmul(&prob.kernel.scale(prob.eps * h)).matmul(&g0);
    operator_norm(&(&(&g - &g0) + &first))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_n3() {
        let m = discretize_schrodinger(&[0.0; 3], 3).unwrap();
        let expect = Matrix::from_rows(&[vec![32.0, -16.0, 0.0], vec![-16.0, 32.0, -16.0], vec![0.0, -16.0, 32.0]])
            .unwrap();
        assert_eq!(m, expect);
    }

    #[test]
    fn potential_on_diagonal() {
        let m = discretize_schrodinger(&[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(m[(2, 2)], 35.0);
    }

    #[test]
    fn bad_grids() {
        assert_eq!(discretize_schrodinger(&[0.0; 2], 2).unwrap_err().code(), "invalid-input");
        assert_eq!(discretize_schrodinger(&[0.0; 3], 4).unwrap_err().code(), "invalid-input");
        assert_eq!(discretize_schrodinger(&[0.0, f64::NAN, 0.0], 3).unwrap_err().code(), "invalid-input");
    }

    #[test]
    fn rounding_half_up() {
        // h = 1/4: 0.375 / h = 1.5 rounds up to 2
        assert_eq!(grid_index(0.375, 3), 2);
        assert_eq!(grid_index(0.6, 200), 121);
        assert_eq!(grid_index(0.4, 200), 80);
    }

    #[test]
    fn potential_parsing() {
        assert_eq!("zero".parse::<Potential>().unwrap(), Potential::Zero);
        assert_eq!("well:5".parse::<Potential>().unwrap(), Potential::Well(5));
        assert_eq!("well:x".parse::<Potential>().unwrap_err().code(), "invalid-argument");
        let v = Potential::Well(2).samples(8);
        // x = 3/9 ..= 6/9
        assert_eq!(v.iter().filter(|&&x| x == -2.0).count(), 4);
    }

    #[test]
    fn sigmas_scale_inversely() {
        let n = 20;
        let g0 = invert(&discretize_schrodinger(&vec![0.0; n], n).unwrap()).unwrap();
        let (a, b) = green_sigmas(&g0, 0.6, 0.4, n).unwrap();
        let (a3, b3) = green_sigmas(&g0.scale(3.0), 0.6, 0.4, n).unwrap();
        assert!((a3 * 3.0 - a).abs() < 1e-12 * a);
        assert!((b3 * 3.0 - b).abs() < 1e-12 * b);
    }

    #[test]
    fn empty_rectangle() {
        let g0 = Matrix::identity(3);
        assert_eq!(green_sigmas(&g0, 0.6, 0.001, 3).unwrap_err().code(), "degenerate-domain");
        assert_eq!(green_sigmas(&g0, 0.999, 0.4, 3).unwrap_err().code(), "degenerate-domain");
    }

    #[test]
    fn kernel_support_and_norm() {
        let n = 30;
        let w = rank1_offdiag_kernel(n, 0.6, 0.4, 2).unwrap();
        assert!((operator_norm(&w).unwrap() * grid_step(n) - 1.0).abs() < 1e-12);
        assert!(ContinuousProblem::new(vec![0.0; n], 0.6, 0.4, 1e-3, w.clone()).is_ok());
        let mut bad = w.clone();
        bad[(n - 1, 0)] = 1.0;
        bad[(0, n - 1)] = 0.0;
        let e = ContinuousProblem::new(vec![0.0; n], 0.6, 0.4, 1e-3, bad).unwrap_err();
        assert_eq!(e.code(), "invalid-input");
        let e = ContinuousProblem::new(vec![0.0; n], 0.6, 0.4, 1e-3, w.scale(2.0)).unwrap_err();
        assert_eq!(e.code(), "invalid-input");
        let e = ContinuousProblem::new(vec![0.0; n], 0.4, 0.6, 1e-3, w).unwrap_err();
        assert_eq!(e.code(), "invalid-input");
    }

    #[test]
    fn zero_eps_measures_zero() {
        let n = 40;
        let w = rank1_offdiag_kernel(n, 0.6, 0.4, 1).unwrap();
        let prob = ContinuousProblem::new(vec![0.0; n], 0.6, 0.4, 0.0, w).unwrap();
        let r = verify_continuous_bound(&prob).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.measured <= 1e-10 * singular_values(&prob.offdiag_block(&invert(&prob.h0().unwrap()).unwrap())).unwrap()[0]);
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn large_eps_rejected() {
        let n = 10;
        let w = rank1_offdiag_kernel(n, 0.6, 0.4, 1).unwrap();
        let prob = ContinuousProblem::new(vec![0.0; n], 0.6, 0.4, 20.0, w).unwrap();
        assert_eq!(verify_continuous_bound(&prob).unwrap_err().code(), "invertibility");
    }
}
