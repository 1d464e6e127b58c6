//! Sharp first-order control of `sigma_{p+1}(C)` by `||B||`.
//!
//! Replacing `C` in `K^{-1}` by its best rank-`p` approximation `L` gives
//! `J = [[E, L], [H, F]]`, whose inverse has a vanishing upper-right block.
//! Writing `J^{-1} = [[A~, 0], [G~, D~]]`, the identities
//! `B = A (L - C) D~` and `A - A~ = A (L - C) G~` hold exactly, and imply
//!
//! ```text
//! sigma_n(A) sigma_{p+1}(C) sigma_last(D~)
//! ---------------------------------------- <= ||B||
//!  1 + sigma_{p+1}(C) ||G~ L|| / sigma_p(C)
//! ```
//!
//! for every admissible `B`. The ratio of the two sides (`eq7_value`)
//! has supremum 1, which yields the first-order limit
//! `sup sigma_{p+1}(C) / ||B|| = 1 / (sigma_n(A) sigma_last(D)) + O(eps)`.
//!
//! The extremal perturbation is searched for by iterating the map
//! `f(B) = A P1 T Q2^T D~`, whose image is always the rank-one matrix
//! `t sigma_n(A) sigma_last(D~) u v^T` built from the weakest singular pair
//! of `A` and of `D~`.

use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{neumann_estimate, truncate};
use crate::error::{Error, Result};
use crate::linalg::{invert, operator_norm, singular_values, svd, Matrix, SvdFactors, SINGULAR_RATIO};
use crate::partition::{BlockPartition, PartitionedSystem};
use crate::rng;

/// Relative tolerance applied to the two block identities.
pub const LEMMA_TOL: f64 = 1e-9;
/// Residuals are compared against `max(norm, floor)`, where the floor is
/// this fraction of the norm of the product being formed; with
/// [`LEMMA_TOL`] that amounts to a few roundoff units.
pub const MACHINE_FLOOR: f64 = 1e-6;
/// Default fixed-point tolerance (relative to `eps`) for the search.
pub const DEFAULT_SEARCH_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Damping factor of `B <- (1 - a) B + a f(B)`.
pub const DAMPING: f64 = 0.5;
/// Random restarts tried after the structured start fails.
pub const MAX_RESTARTS: usize = 8;

// Once `1 - cos(B, f(B))` drops below this the iterate lies on the extremal
// ray and only its length is solved for.
const RAY_ALIGNMENT: f64 = 1e-8;
// Iterates shorter than this fraction of eps have lost all signal.
const COLLAPSE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCertificate {
    pub a_tilde: Matrix,
    pub g_tilde: Matrix,
    pub d_tilde: Matrix,
    /// The rank-`p` truncation `L` of `C` used to build `J`.
    #[serde(rename = "L")]
    pub low_rank: Matrix,
    /// `||B - A (L - C) D~||`.
    pub residual_b: f64,
    /// `||(A - A~) - A (L - C) G~||`.
    pub residual_a: f64,
    /// `||B~||`, zero in exact arithmetic.
    pub b_tilde_norm: f64,
    pub j_inverse_norm: f64,
    pub j_invertible: bool,
    /// Both residuals and `||B~||` within [`LEMMA_TOL`].
    pub identities_hold: bool,
}

/// Forms `J`, inverts it and measures how well both identities hold.
///
/// Requires `||L - C|| * ||K|| < 1`, which makes `J` a small perturbation
/// of `K^{-1}`.
pub fn lemma_certificate(sys: &PartitionedSystem) -> Result<LemmaCertificate> {
    let part = sys.partition;
    let c_svd = svd(&sys.c)?;
    let low_rank = truncate(&c_svd, part.p).low_rank;
    let gap = c_svd.sigma(part.p + 1);
    let norm_k = operator_norm(&sys.k)?;
    if gap * norm_k >= 1.0 {
        return Err(Error::LemmaPrecondition(format!(
            "||L - C|| * ||K|| = {:e} >= 1",
            gap * norm_k
        )));
    }
    let j = Matrix::from_blocks(&sys.e, &low_rank, &sys.h, &sys.f);
    let jinv = match invert(&j) {
        Ok(x) => x,
        Err(Error::SingularMatrix { .. }) => {
            return Err(Error::LemmaPrecondition("J is singular".into()));
        }
        Err(e) => return Err(e),
    };
    let a_tilde = part.a(&jinv);
    let b_tilde = part.b(&jinv);
    let g_tilde = part.g(&jinv);
    let d_tilde = part.d(&jinv);

    let a_lc = sys.a.matmul(&(&low_rank - &sys.c));
    let residual_b = operator_norm(&(&sys.b - &a_lc.matmul(&d_tilde)))?;
    let residual_a = operator_norm(&(&(&sys.a - &a_tilde) - &a_lc.matmul(&g_tilde)))?;

    let norm_a = operator_norm(&sys.a)?;
    let norm_c = operator_norm(&sys.c)?;
    let b_tilde_norm = operator_norm(&b_tilde)?;
    let j_inverse_norm = operator_norm(&jinv)?;
    let scale_b = operator_norm(&sys.b)?.max(MACHINE_FLOOR * norm_a * norm_c * operator_norm(&d_tilde)?);
    let norm_g = operator_norm(&g_tilde)?;
    let scale_a = (norm_a * gap * norm_g).max(MACHINE_FLOOR * norm_a * norm_c * norm_g);
    let identities_hold = residual_b <= LEMMA_TOL * scale_b
        && residual_a <= LEMMA_TOL * scale_a
        && b_tilde_norm <= LEMMA_TOL * j_inverse_norm;
    Ok(LemmaCertificate {
        b_tilde_norm,
        j_inverse_norm,
        identities_hold,
        a_tilde,
        g_tilde,
        d_tilde,
        low_rank,
        residual_b,
        residual_a,
        j_invertible: true,
    })
}

/// The scalar ingredients of `eq7_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupremumTerms {
    pub sigma_n_a: f64,
    /// `sigma_{p+1}(C)`.
    pub sigma_gap: f64,
    /// `sigma_p(C)`; `None` when `p = 0`.
    pub sigma_p_c: Option<f64>,
    pub sigma_last_d_tilde: f64,
    /// `||G~ L||`.
    pub norm_gl: f64,
    pub norm_b: f64,
}

impl SupremumTerms {
    /// `sigma_{p+1}(C) / (1 + sigma_{p+1}(C) ||G~ L|| / sigma_p(C))`, the
    /// single nonzero entry of `T`.
    pub fn t_entry(&self) -> Result<f64> {
        let correction = match self.sigma_p_c {
            None => 0.0,
            Some(_) if self.sigma_gap == 0.0 => 0.0,
            Some(sp) if sp > 0.0 => self.sigma_gap * self.norm_gl / sp,
            Some(_) => {
                return Err(Error::DegenerateInput(
                    "sigma_p(C) = 0 while sigma_{p+1}(C) > 0".into(),
                ))
            }
        };
        Ok(self.sigma_gap / (1.0 + correction))
    }

    pub fn value(&self) -> Result<f64> {
        if self.norm_b == 0.0 {
            return Err(Error::DegenerateInput("||B|| = 0, the ratio is undefined".into()));
        }
        Ok(self.sigma_n_a * self.t_entry()? * self.sigma_last_d_tilde / self.norm_b)
    }
}

pub fn supremum_terms(sys: &PartitionedSystem, cert: &LemmaCertificate) -> Result<SupremumTerms> {
    let p = sys.partition.p;
    let c_vals = singular_values(&sys.c)?;
    let sigma = |k: usize| c_vals.get(k - 1).copied().unwrap_or(0.0);
    Ok(SupremumTerms {
        sigma_n_a: smallest(&singular_values(&sys.a)?),
        sigma_gap: sigma(p + 1),
        sigma_p_c: (p > 0).then(|| sigma(p)),
        sigma_last_d_tilde: smallest(&singular_values(&cert.d_tilde)?),
        norm_gl: operator_norm(&cert.g_tilde.matmul(&cert.low_rank))?,
        norm_b: operator_norm(&sys.b)?,
    })
}

/// `sigma_n(A) sigma_{p+1}(C) sigma_last(D~) / (||B|| (1 + sigma_{p+1}(C) ||G~L|| / sigma_p(C)))`,
/// never above 1 for a valid input.
pub fn eq7_value(sys: &PartitionedSystem, cert: &LemmaCertificate) -> Result<f64> {
    supremum_terms(sys, cert)?.value()
}

fn smallest(values: &[f64]) -> f64 {
    values.last().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpEstimate {
    pub sigma_n_a: f64,
    pub sigma_last_d: f64,
    /// `1 / (sigma_n(A) sigma_last(D))`.
    pub first_order: f64,
}

/// First-order value of `sup_{||B|| <= eps} sigma_{p+1}(C) / ||B||`.
///
/// Uses the smallest singular value of the `n x (n+p)` block `A` and of the
/// `(M-n) x (M-n-p)` block `D`.
pub fn sharp_estimate(a: &Matrix, d: &Matrix) -> Result<SharpEstimate> {
    if a.rows() > a.cols() {
        return Err(Error::InvalidInput(format!(
            "A must be wide (n x (n+p)), got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if d.rows() < d.cols() {
        return Err(Error::InvalidInput(format!(
            "D must be tall ((M-n) x (M-n-p)), got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let sa = singular_values(a)?;
    let sd = singular_values(d)?;
    let full_rank = |s: &[f64]| {
        let hi = s.first().copied().unwrap_or(0.0);
        hi > 0.0 && smallest(s) > SINGULAR_RATIO * hi
    };
    if !full_rank(&sa) {
        return Err(Error::UnboundedRatio("A does not have full row rank".into()));
    }
    if !full_rank(&sd) {
        return Err(Error::UnboundedRatio("D does not have full column rank".into()));
    }
    let sigma_n_a = smallest(&sa);
    let sigma_last_d = smallest(&sd);
    Ok(SharpEstimate {
        sigma_n_a,
        sigma_last_d,
        first_order: 1.0 / (sigma_n_a * sigma_last_d),
    })
}

/// The unperturbed matrix `K0 = [[A, 0], [G, D]]` with its blocks, so that
/// `K(B)` can be rebuilt cheaply for any `B`.
#[derive(Debug, Clone)]
pub struct BlockInstance {
    pub a: Matrix,
    pub g: Matrix,
    pub d: Matrix,
    pub partition: BlockPartition,
    pub k0: Matrix,
}

impl BlockInstance {
    pub fn new(a: &Matrix, g: &Matrix, d: &Matrix) -> Result<Self> {
        let n = a.rows();
        let lead = a.cols();
        if n == 0 || lead < n {
            return Err(Error::InvalidInput(format!("A must be n x (n+p) with n >= 1, got {}x{}", n, lead)));
        }
        let p = lead - n;
        let lower = d.rows();
        let trail = d.cols();
        let m = n + lower;
        if trail == 0 || lower != trail + p || g.shape() != (lower, lead) {
            return Err(Error::InvalidInput(format!(
                "blocks do not tile: A {}x{}, G {}x{}, D {}x{}",
                n,
                lead,
                g.rows(),
                g.cols(),
                lower,
                trail
            )));
        }
        let partition = BlockPartition::new(m, n, p)?;
        let k0 = Matrix::from_blocks(a, &Matrix::zeros(n, trail), g, d);
        Ok(BlockInstance {
            a: a.clone(),
            g: g.clone(),
            d: d.clone(),
            partition,
            k0,
        })
    }

    pub fn from_matrix(k0: &Matrix, n: usize, p: usize) -> Result<Self> {
        let part = BlockPartition::new(k0.rows(), n, p)?;
        BlockInstance::new(&part.a(k0), &part.g(k0), &part.d(k0))
    }

    pub fn b_shape(&self) -> (usize, usize) {
        (self.partition.n, self.partition.trail())
    }

    pub fn k_with(&self, b: &Matrix) -> Matrix {
        self.partition.with_b(&self.k0, b)
    }

    /// `sigma_{p+1}(C(B)) / ||B||`.
    pub fn ratio(&self, b: &Matrix) -> Result<f64> {
        let kinv = invert(&self.k_with(b))?;
        let s = singular_values(&self.partition.c(&kinv))?;
        let gap = s.get(self.partition.p).copied().unwrap_or(0.0);
        let nb = operator_norm(b)?;
        if nb == 0.0 {
            return Err(Error::DegenerateInput("||B|| = 0".into()));
        }
        Ok(gap / nb)
    }

    /// Largest `eps` accepted by the search: `eps ||K0^{-1}|| < 1` and
    /// `||K0^{-1}||^2 eps / (1 - ||K0^{-1}|| eps) < 1 / (2 ||K||)` with
    /// `||K|| <= ||K0|| + eps`.
    pub fn admits(&self, eps: f64) -> Result<bool> {
        let nk0inv = operator_norm(&invert(&self.k0)?)?;
        let nk0 = operator_norm(&self.k0)?;
        Ok(match neumann_estimate(nk0inv, eps) {
            Some(est) => est < 0.5 / (nk0 + eps),
            None => false,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCaseResult {
    #[serde(rename = "B0")]
    pub b0: Matrix,
    /// `||f(B0) - B0||`.
    pub fixed_point_residual: f64,
    /// `sigma_{p+1}(C(B0)) / ||B0||`.
    pub achieved_ratio: f64,
    pub eq7_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub sharp_estimate: f64,
    /// Smallest `c >= 0` with `achieved_ratio >= (1 - c eps) sharp_estimate`.
    pub first_order_constant: f64,
    /// Largest `||B||` over every iterate visited; never exceeds `eps`.
    pub max_iterate_norm: f64,
    pub eps: f64,
}

/// One application of the map `f`, together with the quantities the search
/// and the reports need.
#[derive(Debug, Clone)]
pub struct MapStep {
    pub image: Matrix,
    pub terms: SupremumTerms,
    pub eq7: f64,
    pub ratio: f64,
}

/// Evaluates `f(B) = A P1 T Q2^T D~` at `B`.
///
/// `T` has a single nonzero entry at row `n`, column `M-n-p` (1-based), so
/// only column `n` of `P1` and column `M-n-p` of `Q2` enter the product:
/// `f(B) = t (A p1_n) (q2_last^T D~)`. Singular vectors are defined up to
/// sign; the sign making `<f(B), B> >= 0` is used so that `f` is continuous
/// along an iteration.
pub fn apply_map(inst: &BlockInstance, a_svd: &SvdFactors, b: &Matrix) -> Result<MapStep> {
    let part = inst.partition;
    let (n, p) = (part.n, part.p);
    let kinv = invert(&inst.k_with(b))?;
    let c = part.c(&kinv);
    let c_svd = svd(&c)?;
    let low_rank = truncate(&c_svd, p).low_rank;
    let j = Matrix::from_blocks(&part.e(&kinv), &low_rank, &part.h(&kinv), &part.f(&kinv));
    let jinv = match invert(&j) {
        Ok(x) => x,
        Err(Error::SingularMatrix { .. }) => return Err(Error::LemmaPrecondition("J is singular".into())),
        Err(e) => return Err(e),
    };
    let g_tilde = part.g(&jinv);
    let d_tilde = part.d(&jinv);
    let dt_svd = svd(&d_tilde)?;
    let last = part.trail() - 1;

    let terms = SupremumTerms {
        sigma_n_a: a_svd.values[n - 1],
        sigma_gap: c_svd.sigma(p + 1),
        sigma_p_c: (p > 0).then(|| c_svd.sigma(p)),
        sigma_last_d_tilde: dt_svd.values[last],
        norm_gl: operator_norm(&g_tilde.matmul(&low_rank))?,
        norm_b: operator_norm(b)?,
    };
    let t = terms.t_entry()?;
    let eq7 = terms.value()?;

    let left = inst.a.mul_vec(&a_svd.right.column(n - 1));
    let q2 = dt_svd.left.column(last);
    let right: Vec<f64> = (0..d_tilde.cols())
        .map(|j| (0..d_tilde.rows()).map(|i| q2[i] * d_tilde[(i, j)]).sum())
        .collect();
    let mut image = Matrix::outer(&left, &right).scale(t);
    if image.dot(b) < 0.0 {
        image = image.scale(-1.0);
    }
    Ok(MapStep {
        image,
        eq7,
        ratio: terms.sigma_gap / terms.norm_b,
        terms,
    })
}

struct Visit {
    b: Matrix,
    step: MapStep,
    residual: f64,
}

struct RunOutcome {
    converged: Option<Visit>,
    best: Option<Visit>,
    iterations: usize,
    max_norm: f64,
}

/// Searches for a fixed point of `f` inside `{||B|| <= eps}`.
///
/// Damped iteration `B <- (1 - a) B + a f(B)` aligns `B` with the extremal
/// rank-one direction; once aligned, the fixed-point equation
/// `||f(s d)|| = s` along that ray is solved by secant steps on the length
/// `s`. The structured start (a single entry `eps` at row `n`, column
/// `M-n-p`) is tried first, then up to [`MAX_RESTARTS`] seeded random
/// starts. A run converges when `||f(B) - B|| <= tol * eps`.
pub fn worst_case_search(
    a: &Matrix,
    g: &Matrix,
    d: &Matrix,
    eps: f64,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<WorstCaseResult> {
    let inst = BlockInstance::new(a, g, d)?;
    search_instance(&inst, eps, max_iter, tol, seed)
}

pub fn search_instance(inst: &BlockInstance, eps: f64, max_iter: usize, tol: f64, seed: u64) -> Result<WorstCaseResult> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be finite and non-negative, got {eps}")));
    }
    if eps == 0.0 {
        return Err(Error::DegenerateInput("eps = 0 admits only B = 0".into()));
    }
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(Error::InvalidArgument("tol must be positive and max_iter at least 1".into()));
    }
    if !inst.admits(eps)? {
        return Err(Error::LemmaPrecondition(format!("eps = {eps:e} is above the admissible threshold")));
    }
    let sharp = sharp_estimate(&inst.a, &inst.d)?;
    let a_svd = svd(&inst.a)?;
    let (rows, cols) = inst.b_shape();

    let mut best: Option<Visit> = None;
    let mut iterations = 0;
    let mut max_norm: f64 = 0.0;
    let mut found = None;
    let mut restarts = 0;
    for r in 0..=MAX_RESTARTS {
        let start = if r == 0 {
            let mut b = Matrix::zeros(rows, cols);
            b[(rows - 1, cols - 1)] = eps;
            b
        } else {
            let g = rng::gaussian(&mut rng::substream(seed, r as u64), rows, cols);
            let s = operator_norm(&g)?;
            g.scale(eps / s)
        };
        restarts = r;
        let out = run_from(inst, &a_svd, start, eps, max_iter, tol)?;
        iterations += out.iterations;
        max_norm = max_norm.max(out.max_norm);
        if let Some(v) = out.best {
            if best.as_ref().is_none_or(|b| v.step.ratio > b.step.ratio) {
                best = Some(v);
            }
        }
        if let Some(v) = out.converged {
            found = Some(v);
            break;
        }
    }
    let converged = found.is_some();
    let visit = found
        .or(best)
        .ok_or_else(|| Error::LemmaPrecondition("no iterate could be evaluated".into()))?;
    Ok(WorstCaseResult {
        fixed_point_residual: visit.residual,
        achieved_ratio: visit.step.ratio,
        eq7_value: visit.step.eq7,
        iterations,
        converged,
        restarts,
        sharp_estimate: sharp.first_order,
        first_order_constant: (1.0 - visit.step.ratio / sharp.first_order).max(0.0) / eps,
        max_iterate_norm: max_norm,
        eps,
        b0: visit.b,
    })
}

fn run_from(
    inst: &BlockInstance,
    a_svd: &SvdFactors,
    mut b: Matrix,
    eps: f64,
    max_iter: usize,
    tol: f64,
) -> Result<RunOutcome> {
    let mut best: Option<Visit> = None;
    let mut prev_on_ray: Option<(f64, f64)> = None;
    let mut max_norm: f64 = 0.0;
    for it in 0..max_iter {
        let s = operator_norm(&b)?;
        debug_assert!(s <= eps * (1.0 + 1e-12), "iterate left the ball: {s} > {eps}");
        max_norm = max_norm.max(s);
        if s < COLLAPSE * eps {
            return Ok(RunOutcome { converged: None, best, iterations: it, max_norm });
        }
        let step = match apply_map(inst, a_svd, &b) {
            Ok(step) => step,
            // the first iterate is validated up front; later failures end this run
            Err(e) if it == 0 => return Err(e),
            Err(_) => return Ok(RunOutcome { converged: None, best, iterations: it, max_norm }),
        };
        let residual = operator_norm(&(&step.image - &b))?;
        let image = step.image.clone();
        let visit = Visit { b: b.clone(), step, residual };
        if residual <= tol * eps {
            return Ok(RunOutcome {
                converged: Some(visit),
                best,
                iterations: it + 1,
                max_norm,
            });
        }

        let fnorm = image.frobenius_norm();
        let cos = image.dot(&b) / (fnorm * b.frobenius_norm());
        if best.as_ref().is_none_or(|v| visit.step.ratio > v.step.ratio) {
            best = Some(visit);
        }
        if fnorm == 0.0 {
            return Ok(RunOutcome { converged: None, best, iterations: it + 1, max_norm });
        }
        b = if 1.0 - cos < RAY_ALIGNMENT {
            // on the extremal ray: secant step for ||f(s d)|| - s = 0
            let gval = operator_norm(&image)? - s;
            let next = match prev_on_ray {
                Some((s0, g0)) if gval != g0 => s - gval * (s - s0) / (gval - g0),
                _ => s + DAMPING * gval,
            };
            prev_on_ray = Some((s, gval));
            let next = next.clamp(0.1 * s, s);
            image.scale(next / operator_norm(&image)?)
        } else {
            prev_on_ray = None;
            &b.scale(1.0 - DAMPING) + &image.scale(DAMPING)
        };
    }
    Ok(RunOutcome { converged: None, best, iterations: max_iter, max_norm })
}

/// Detailed output of [`empirical_sup`].
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalSup {
    pub sup: f64,
    /// Best ratio among the random samples alone.
    pub best_random: f64,
    /// Best ratio among the candidates derived from the worst-case search.
    pub best_candidate: Option<f64>,
    pub worst_case: Option<WorstCaseResult>,
}

/// Largest `sigma_{p+1}(C) / ||B||` found over seeded random `B` with
/// `||B|| = eps` and the worst-case search output.
pub fn empirical_sup(a: &Matrix, g: &Matrix, d: &Matrix, eps: f64, samples: usize, seed: u64) -> Result<f64> {
    let inst = BlockInstance::new(a, g, d)?;
    Ok(empirical_sup_instance(&inst, eps, samples, seed)?.sup)
}

/// Random directions are standard Gaussian matrices scaled to norm `eps`;
/// sample `i` draws from substream `i + 1` of `seed`. The search result
/// `B0` enters as a candidate, together with its direction rescaled to
/// `+-eps`. When `eps` is above the search threshold only random samples
/// are used.
pub fn empirical_sup_instance(inst: &BlockInstance, eps: f64, samples: usize, seed: u64) -> Result<EmpiricalSup> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    invert(&inst.k0)?;
    let (rows, cols) = inst.b_shape();
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = rng::gaussian(&mut rng::substream(seed, i as u64 + 1), rows, cols);
            let b = g.scale(eps / operator_norm(&g)?);
            inst.ratio(&b)
        })
        .collect::<Result<_>>()?;
    let best_random = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let worst_case = match search_instance(inst, eps, DEFAULT_MAX_ITER, DEFAULT_SEARCH_TOL, seed) {
        Ok(w) => Some(w),
        Err(Error::LemmaPrecondition(_)) => None,
        Err(e) => return Err(e),
    };
    let best_candidate = match &worst_case {
        Some(w) => {
            let nb = operator_norm(&w.b0)?;
            let mut best = w.achieved_ratio;
            for sign in [1.0, -1.0] {
                best = best.max(inst.ratio(&w.b0.scale(sign * eps / nb))?);
            }
            Some(best)
        }
        None => None,
    };
    Ok(EmpiricalSup {
        sup: best_candidate.map_or(best_random, |c| c.max(best_random)),
        best_random,
        best_candidate,
        worst_case,
    })
}
