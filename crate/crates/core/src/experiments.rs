//! Seeded instance generators and the eps sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{invert, operator_norm, singular_values, Matrix};
use crate::partition::BlockPartition;
use crate::rng;
use crate::sharp::{empirical_sup_instance, sharp_estimate, BlockInstance};

/// Attempts made by generators whose output is not invertible by
/// construction.
pub const GENERATION_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// Uniform off-diagonal band, strictly dominant diagonal.
    BandedDominant,
    /// Uniform entries on the whole band, no dominance.
    BandedRandom,
    /// Small integers on the band, strictly dominant diagonal.
    IntegerExact,
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "banded-dominant" => Ok(InstanceKind::BandedDominant),
            "banded-random" => Ok(InstanceKind::BandedRandom),
            "integer-exact" => Ok(InstanceKind::IntegerExact),
            _ => Err(Error::InvalidArgument(format!(
                "unknown instance kind '{s}' (expected banded-dominant, banded-random or integer-exact)"
            ))),
        }
    }
}

/// Runs `build(attempt)` until it returns an invertible matrix.
pub fn retry_invertible(mut build: impl FnMut(usize) -> Matrix) -> Result<Matrix> {
    for attempt in 0..GENERATION_ATTEMPTS {
        let k = build(attempt);
        match invert(&k) {
            Ok(_) => return Ok(k),
            Err(Error::SingularMatrix { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailure {
        attempts: GENERATION_ATTEMPTS,
    })
}

fn in_band(i: usize, j: usize, p: usize) -> bool {
    i.abs_diff(j) <= p
}

fn set_dominant_diagonal(k: &mut Matrix, extra: impl Fn(usize) -> f64) {
    for i in 0..k.rows() {
        let off: f64 = (0..k.cols()).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
        k[(i, i)] = 1.0 + off + extra(i);
    }
}

/// An invertible `m x m` matrix of bandwidth `p`, deterministic in `seed`.
pub fn generate_instance(seed: u64, m: usize, p: usize, kind: InstanceKind) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::InvalidInput("matrix order must be positive".into()));
    }
    match kind {
        InstanceKind::BandedDominant => {
            let mut r = rng::substream(seed, 0);
            let mut k = Matrix::from_fn(m, m, |i, j| {
                if i != j && in_band(i, j, p) {
                    r.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            });
            let extra: Vec<f64> = (0..m).map(|_| r.random::<f64>()).collect();
            set_dominant_diagonal(&mut k, |i| extra[i]);
            Ok(k)
        }
        InstanceKind::IntegerExact => {
            let mut r = rng::substream(seed, 0);
            let mut k = Matrix::from_fn(m, m, |i, j| {
                if i != j && in_band(i, j, p) {
                    r.random_range(-3i32..=3) as f64
                } else {
                    0.0
                }
            });
            set_dominant_diagonal(&mut k, |_| 0.0);
            Ok(k)
        }
        InstanceKind::BandedRandom => retry_invertible(|attempt| {
            let mut r = rng::substream(seed, attempt as u64);
            Matrix::from_fn(m, m, |i, j| {
                if in_band(i, j, p) {
                    r.random_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
        }),
    }
}

/// Integer matrix whose block `B` (partition `n`, `p`) has rank exactly `r`.
///
/// The band of width `p` is filled as in the integer-exact generator; `B`
/// is set to `U V` where `U` (`n x r`) and `V` (`r x (M-n-p)`) carry an
/// identity in their leading `r x r` part, and the diagonal is then raised
/// to strict dominance.
pub fn integer_rank_instance(seed: u64, m: usize, n: usize, p: usize, r: usize) -> Result<Matrix> {
    let part = BlockPartition::new(m, n, p)?;
    let trail = part.trail();
    if r > n.min(trail) {
        return Err(Error::InvalidRank { rank: r, max: n.min(trail) });
    }
    let mut g = rng::substream(seed, 1);
    let mut k = Matrix::from_fn(m, m, |i, j| {
        if i != j && in_band(i, j, p) {
            g.random_range(-3i32..=3) as f64
        } else {
            0.0
        }
    });
    let mut small = |rows: usize, cols: usize, tall: bool| {
        Matrix::from_fn(rows, cols, |i, j| {
            let (a, b) = if tall { (i, j) } else { (j, i) };
            if a < r {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            } else {
                g.random_range(-1i32..=1) as f64
            }
        })
    };
    let u = small(n, r, true);
    let v = small(r, trail, false);
    k.set_block(0, part.lead(), &u.matmul(&v));
    set_dominant_diagonal(&mut k, |_| 0.0);
    Ok(k)
}

/// Constant-coefficient tridiagonal matrix.
pub fn tridiagonal(m: usize, diag: f64, off: f64) -> Matrix {
    Matrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => diag,
        1 => off,
        _ => 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub m: usize,
    pub p: usize,
    pub n: usize,
    pub eps_list: Vec<f64>,
    pub samples_per_eps: usize,
    /// Rank of the structured part of `B`; 0 for the main sweep.
    pub k: usize,
    pub kind: InstanceKind,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<BlockPartition> {
        if self.eps_list.is_empty() {
            return Err(Error::InvalidConfig("eps list is empty".into()));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidConfig(format!("eps values must be positive, got {e}")));
        }
        if self.samples_per_eps == 0 {
            return Err(Error::InvalidConfig("samples per eps must be at least 1".into()));
        }
        let part = BlockPartition::new(self.m, self.n, self.p)?;
        let kmax = self.n.min(part.trail());
        if self.k > kmax {
            return Err(Error::InvalidConfig(format!("k = {} exceeds min(n, M-n-p) = {kmax}", self.k)));
        }
        Ok(part)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub empirical_sup: f64,
    pub analytic: f64,
    pub ratio: f64,
    pub worst_case_converged: bool,
    /// `false` when `eps` is above the search threshold; such rows are
    /// excluded from the fit.
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFit {
    /// Least-squares slope of `log|ratio - 1|` against `log eps`; absent
    /// with fewer than three valid rows.
    pub slope: Option<f64>,
    /// `max |ratio - 1| / eps` over valid rows.
    pub constant: Option<f64>,
    pub valid_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub fit: SweepFit,
}

impl SweepOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,empirical_sup,analytic,ratio,converged\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{}",
                r.eps, r.empirical_sup, r.analytic, r.ratio, r.worst_case_converged
            );
        }
        out
    }
}

pub fn fit_rows(rows: &[SweepRow]) -> SweepFit {
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.valid).collect();
    let constant = valid
        .iter()
        .map(|r| (r.ratio - 1.0).abs() / r.eps)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    let pts: Vec<(f64, f64)> = valid
        .iter()
        .filter(|r| r.ratio != 1.0)
        .map(|r| (r.eps.ln(), (r.ratio - 1.0).abs().ln()))
        .collect();
    let slope = (pts.len() >= 3).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    SweepFit {
        slope,
        constant,
        valid_rows: valid.len(),
    }
}

/// Main sweep on a generated instance.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let k0 = generate_instance(cfg.seed, cfg.m, cfg.p, cfg.kind)?;
    run_sweep_on(&k0, cfg)
}

/// Main sweep on a given `K0`; its band outside `B` is kept and `B` is
/// replaced by the sampled perturbations.
pub fn run_sweep_on(k0: &Matrix, cfg: &SweepConfig) -> Result<SweepOutput> {
    let part = cfg.validate()?;
    if cfg.k != 0 {
        return Err(Error::InvalidConfig("the main sweep needs k = 0".into()));
    }
    if k0.shape() != (part.m, part.m) {
        return Err(Error::InvalidConfig(format!("K0 is {}x{}, config expects M = {}", k0.rows(), k0.cols(), part.m)));
    }
    let inst = BlockInstance::from_matrix(k0, part.n, part.p)?;
    let analytic = sharp_estimate(&inst.a, &inst.d)?.first_order;
    let rows = cfg
        .eps_list
        .iter()
        .map(|&eps| {
            let sup = empirical_sup_instance(&inst, eps, cfg.samples_per_eps, cfg.seed)?;
            let ratio = sup.sup / analytic;
            Ok(SweepRow {
                eps,
                empirical_sup: sup.sup,
                analytic,
                ratio,
                worst_case_converged: sup.worst_case.as_ref().is_some_and(|w| w.converged),
                valid: sup.worst_case.is_some(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_rows(&rows);
    Ok(SweepOutput { rows, fit })
}

/// One sample of the rank-`k` study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankKRow {
    pub eps: f64,
    pub sample: usize,
    pub sigma_n_a: f64,
    pub sigma_last_d: f64,
    /// `sigma_1(B), ..., sigma_k(B)`.
    pub b_leading: Vec<f64>,
    /// `sigma_{k+1}(B)`.
    pub b_next: f64,
    /// `sigma_{p+k+1}(C)`.
    pub c_tail: f64,
    /// `sigma_{p+k+1}(C) / sigma_1(C)`.
    pub c_tail_relative: f64,
    /// `sigma_{p+k+1}(C) / sigma_{k+1}(B)`; absent when `B` has rank `k`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RankKOutput {
    Main(SweepOutput),
    RankK(Vec<RankKRow>),
}

impl RankKOutput {
    pub fn to_csv(&self) -> String {
        match self {
            RankKOutput::Main(s) => s.to_csv(),
            RankKOutput::RankK(rows) => {
                let mut out =
                    String::from("eps,sample,sigma_n_A,sigma_last_D,sigma_B_leading,sigma_B_next,sigma_C_tail,ratio\n");
                for r in rows {
                    let lead: Vec<String> = r.b_leading.iter().map(|v| format!("{v:e}")).collect();
                    let ratio = r.ratio.map_or(String::new(), |v| format!("{v:e}"));
                    let _ = writeln!(
                        out,
                        "{:e},{},{:e},{:e},{},{:e},{:e},{}",
                        r.eps,
                        r.sample,
                        r.sigma_n_a,
                        r.sigma_last_d,
                        lead.join(";"),
                        r.b_next,
                        r.c_tail,
                        ratio
                    );
                }
                out
            }
        }
    }
}

/// Observed `sigma_{p+k+1}(C) / sigma_{k+1}(B)` for `B` = rank-`k` part +
/// noise. `k = 0` runs the main sweep instead.
pub fn rank_k_sweep(cfg: &SweepConfig) -> Result<RankKOutput> {
    cfg.validate()?;
    let k0 = generate_instance(cfg.seed, cfg.m, cfg.p, cfg.kind)?;
    if cfg.k == 0 {
        return run_sweep_on(&k0, cfg).map(RankKOutput::Main);
    }
    let inst = BlockInstance::from_matrix(&k0, cfg.n, cfg.p)?;
    let jobs: Vec<(usize, f64, usize)> = cfg
        .eps_list
        .iter()
        .enumerate()
        .flat_map(|(e, &eps)| (0..cfg.samples_per_eps).map(move |s| (e, eps, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(e, eps, s)| {
            let index = (e * cfg.samples_per_eps + s) as u64;
            let mut row = rank_k_sample(&inst, cfg.k, eps, cfg.seed, index)?;
            row.sample = s;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankKOutput::RankK(rows))
}

/// A single rank-`k` sample drawn from substream `index` of `seed`.
///
/// The structured part has norm `0.25 / ||K0^{-1}||`, keeping `K`
/// invertible whenever `noise < 0.75 / ||K0^{-1}||`; the noise is Gaussian
/// scaled to norm `noise` and may be 0.
pub fn rank_k_sample(inst: &BlockInstance, k: usize, noise: f64, seed: u64, index: u64) -> Result<RankKRow> {
    let (rows, cols) = inst.b_shape();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::InvalidRank { rank: k, max: rows.min(cols) });
    }
    let part = inst.partition;
    let mut r = rng::substream(seed, index);
    let low = rng::gaussian(&mut r, rows, k).matmul(&rng::gaussian(&mut r, k, cols));
    let size = 0.25 / operator_norm(&invert(&inst.k0)?)?;
    let mut b = low.scale(size / operator_norm(&low)?);
    if noise > 0.0 {
        let g = rng::gaussian(&mut r, rows, cols);
        b = &b + &g.scale(noise / operator_norm(&g)?);
    }
    let kinv = invert(&inst.k_with(&b))?;
    let cs = singular_values(&part.c(&kinv))?;
    let bs = singular_values(&b)?;
    let sharp = sharp_estimate(&inst.a, &inst.d)?;
    let c_tail = cs.get(part.p + k).copied().unwrap_or(0.0);
    let b_next = bs.get(k).copied().unwrap_or(0.0);
    Ok(RankKRow {
        eps: noise,
        sample: index as usize,
        sigma_n_a: sharp.sigma_n_a,
        sigma_last_d: sharp.sigma_last_d,
        b_leading: bs[..k].to_vec(),
        b_next,
        c_tail,
        c_tail_relative: c_tail / cs[0],
        // below roundoff B has rank k and the ratio carries no information
        ratio: (b_next > 1e-14 * bs[0]).then(|| c_tail / b_next),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{check_nullity_theorem, partition_system};

    #[test]
    fn dominant_rows() {
        let k = generate_instance(3, 20, 1, InstanceKind::BandedDominant).unwrap();
        for i in 0..20 {
            let off: f64 = (0..20).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
            assert!(k[(i, i)] >= 1.0 + off);
            for j in 0..20 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(k[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        for kind in [InstanceKind::BandedDominant, InstanceKind::BandedRandom, InstanceKind::IntegerExact] {
            let a = generate_instance(11, 9, 2, kind).unwrap();
            let b = generate_instance(11, 9, 2, kind).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, generate_instance(12, 9, 2, kind).unwrap());
        }
    }

    #[test]
    fn integer_exact_nullity() {
        let k = generate_instance(5, 8, 2, InstanceKind::IntegerExact).unwrap();
        assert!(k.as_slice().iter().all(|v| v.fract() == 0.0));
        let sys = partition_system(&k, 3, 2).unwrap();
        assert!(check_nullity_theorem(&sys, 1e-8).unwrap().theorem_holds);
    }

    #[test]
    fn retries_exhausted() {
        let e = retry_invertible(|_| Matrix::zeros(3, 3)).unwrap_err();
        assert_eq!(e.code(), "generation-failure");
        let mut calls = 0;
        let k = retry_invertible(|a| {
            calls += 1;
            if a < 3 {
                Matrix::zeros(2, 2)
            } else {
                Matrix::identity(2)
            }
        })
        .unwrap();
        assert_eq!(k, Matrix::identity(2));
        assert_eq!(calls, 4);
    }

    #[test]
    fn rank_instance_has_rank_r() {
        let k = integer_rank_instance(4, 10, 4, 2, 2).unwrap();
        let b = BlockPartition::new(10, 4, 2).unwrap().b(&k);
        assert_eq!(crate::linalg::rank(&b, 1e-8).unwrap(), 2);
        assert_eq!(integer_rank_instance(4, 10, 4, 2, 5).unwrap_err().code(), "invalid-rank");
    }

    fn cfg(eps: Vec<f64>) -> SweepConfig {
        SweepConfig {
            seed: 7,
            m: 12,
            p: 1,
            n: 5,
            eps_list: eps,
            samples_per_eps: 4,
            k: 0,
            kind: InstanceKind::BandedDominant,
        }
    }

    #[test]
    fn config_errors() {
        assert_eq!(run_sweep(&cfg(vec![])).unwrap_err().code(), "invalid-config");
        assert_eq!(run_sweep(&cfg(vec![1e-3, -1.0])).unwrap_err().code(), "invalid-config");
        let mut c = cfg(vec![1e-3]);
        c.samples_per_eps = 0;
        assert_eq!(run_sweep(&c).unwrap_err().code(), "invalid-config");
        let mut c = cfg(vec![1e-3]);
        c.k = 7;
        assert_eq!(rank_k_sweep(&c).unwrap_err().code(), "invalid-config");
        let mut c = cfg(vec![1e-3]);
        c.n = 11;
        assert_eq!(run_sweep(&c).unwrap_err().code(), "partition-bounds");
    }

    #[test]
    fn csv_header_and_rows() {
        let out = run_sweep(&cfg(vec![1e-3, 1e-4])).unwrap();
        let csv = out.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eps,empirical_sup,analytic,ratio,converged");
        assert_eq!(lines.len(), 3);
        assert_eq!(csv, run_sweep(&cfg(vec![1e-3, 1e-4])).unwrap().to_csv());
    }

    #[test]
    fn fit_recovers_linear_slope() {
        let rows: Vec<SweepRow> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| SweepRow {
                eps,
                empirical_sup: 1.0,
                analytic: 1.0,
                ratio: 1.0 - 3.0 * eps,
                worst_case_converged: true,
                valid: true,
            })
            .collect();
        let fit = fit_rows(&rows);
        assert!((fit.slope.unwrap() - 1.0).abs() < 1e-9);
        assert!((fit.constant.unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(fit_rows(&rows[..2]).slope, None);
    }

    #[test]
    fn exact_rank_k_has_no_tail() {
        let k0 = generate_instance(1, 16, 1, InstanceKind::BandedDominant).unwrap();
        let inst = BlockInstance::from_matrix(&k0, 6, 1).unwrap();
        let row = rank_k_sample(&inst, 2, 0.0, 9, 0).unwrap();
        assert!(row.c_tail_relative <= 1e-10);
        assert_eq!(row.ratio, None);
    }
}
