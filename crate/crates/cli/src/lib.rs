//! Command-line front end. [`run`] takes the argument list and returns the
//! exit status together with everything destined for stdout and stderr,
//! so the binary is a thin wrapper and tests need no subprocess.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use bandinv_core::continuous::{self, ContinuousProblem, Potential};
use bandinv_core::experiments::{self, InstanceKind, SweepConfig};
use bandinv_core::linalg::{mm, operator_norm, singular_values, Matrix, DEFAULT_RANK_TOL};
use bandinv_core::partition::{check_nullity_theorem, partition_system, BlockPartition};
use bandinv_core::sharp::{self, BlockInstance};
use bandinv_core::{approx, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

/// Above this order `B0` is written to a companion Matrix Market file.
pub const INLINE_LIMIT: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "bandinv", version, about = "Off-diagonal rank structure of inverses of nearly-banded matrices")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Output format (json for single reports, csv for sweeps by default).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Suppress progress messages on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct Split {
    /// Matrix Market file holding K.
    input: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Partition K, check the nullity theorem and report every bound.
    Analyze {
        #[command(flatten)]
        split: Split,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the kernel dimensions of B and C.
    VerifyNullity {
        #[command(flatten)]
        split: Split,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Neumann estimate and sharp first-order estimate for K = K0 + B.
    Bound {
        #[command(flatten)]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
    /// Search for the extremal perturbation B0 of norm at most eps.
    WorstCase {
        #[command(flatten)]
        split: Split,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = sharp::DEFAULT_SEARCH_TOL)]
        tol: f64,
        #[arg(long, default_value_t = sharp::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical supremum against the sharp estimate over an eps list.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Ratios sigma_{p+k+1}(C) / sigma_{k+1}(B) for rank-k perturbations plus noise.
    RankKSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Green's function bound for a perturbed 1-D Schrödinger operator.
    Continuous {
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        eps: f64,
        /// zero, well:<depth>, or a Matrix Market file of N samples.
        #[arg(long, default_value = "zero")]
        potential: String,
        /// rank1-offdiag:<seed>, or a Matrix Market file holding W.
        #[arg(long)]
        kernel: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value = "banded-dominant")]
    kind: String,
    /// Use this K0 instead of a generated one.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl SweepArgs {
    fn config(&self, k: usize) -> Result<SweepConfig, Error> {
        Ok(SweepConfig {
            seed: self.seed,
            m: self.m,
            p: self.p,
            n: self.n,
            eps_list: self.eps.clone(),
            samples_per_eps: self.samples,
            k,
            kind: self.kind.parse::<InstanceKind>()?,
        })
    }
}

/// What a finished invocation produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String, String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn error_object(code: &str, message: &str) -> String {
    json!({ "error": code, "message": message }).to_string() + "\n"
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    status: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                kind => {
                    let code = match kind {
                        ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand => "unknown-verb",
                        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => "unknown-verb",
                        _ => "usage",
                    };
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
                    Outcome {
                        status: 2,
                        stdout: String::new(),
                        stderr: error_object(code, first),
                    }
                }
            };
        }
    };
    let mut log = String::new();
    match dispatch(cli.verb, &mut log) {
        Ok(stdout) => Outcome {
            status: 0,
            stdout,
            stderr: log,
        },
        Err(Failure::Usage(code, msg)) => Outcome {
            status: 2,
            stdout: String::new(),
            stderr: log + &error_object(&code, &msg),
        },
        Err(Failure::Compute(e)) => Outcome {
            status: 1,
            stdout: String::new(),
            stderr: log + &error_object(e.code(), &e.to_string()),
        },
    }
}

struct Emitter<'a> {
    common: &'a Common,
    log: &'a mut String,
}

impl Emitter<'_> {
    fn progress(&mut self, msg: &str) {
        if !self.common.quiet {
            self.log.push_str("bandinv: ");
            self.log.push_str(msg);
            self.log.push('\n');
        }
    }

    /// Writes `body` to the output file or hands it back for stdout.
    fn finish(&mut self, body: String) -> Result<String, Failure> {
        match &self.common.output {
            Some(path) => {
                fs::write(path, body).map_err(Error::from)?;
                self.progress(&format!("wrote {}", path.display()));
                Ok(String::new())
            }
            None => Ok(body),
        }
    }

    fn format(&self, default: Format, csv_ok: bool) -> Result<Format, Failure> {
        let f = self.common.format.unwrap_or(default);
        if f == Format::Csv && !csv_ok {
            return Err(Failure::Usage("usage".into(), "csv output is only available for sweeps".into()));
        }
        Ok(f)
    }
}

fn to_json(v: &impl Serialize) -> String {
    // the report types hold only finite reals and strings
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn read_split(split: &Split) -> Result<Matrix, Failure> {
    let k = mm::read_path(&split.input)?;
    if !k.is_square() {
        return Err(Error::InvalidInput(format!("K must be square, got {}x{}", k.rows(), k.cols())).into());
    }
    BlockPartition::new(k.rows(), split.n, split.p)?;
    Ok(k)
}

/// `Ok(value)` or the error object, for report fields that may fail on
/// their own without failing the whole analysis.
fn field<T: Serialize>(r: Result<T, Error>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("report serializes"),
        Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
    }
}

fn dispatch(verb: Verb, log: &mut String) -> Result<String, Failure> {
    match verb {
        Verb::Analyze { split, tol, common } => {
            let mut out = Emitter { common: &common, log };
            out.format(Format::Json, false)?;
            let k = read_split(&split)?;
            let sys = partition_system(&k, split.n, split.p)?;
            let nullity = check_nullity_theorem(&sys, tol)?;
            let trunc = approx::best_rank_approx(&sys.c, split.p)?;
            let sharp_est = sharp::sharp_estimate(&sys.a, &sys.d);
            let cert = sharp::lemma_certificate(&sys);
            let eq7 = match &cert {
                Ok(c) => field(sharp::eq7_value(&sys, c)),
                Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
            };
            let lemma = cert.map(|c| {
                json!({
                    "residual_B": c.residual_b,
                    "residual_A": c.residual_a,
                    "B_tilde_norm": c.b_tilde_norm,
                    "J_invertible": c.j_invertible,
                })
            });
            let report = json!({
                "M": k.rows(),
                "n": split.n,
                "p": split.p,
                "condition": sys.condition,
                "norm_B": operator_norm(&sys.b)?,
                "nullity": nullity,
                "truncation": { "error": trunc.error, "tail": trunc.tail },
                "sharp_estimate": field(sharp_est),
                "lemma": field(lemma),
                "eq7_value": eq7,
            });
            out.finish(to_json(&report))
        }
        Verb::VerifyNullity { split, tol, common } => {
            let mut out = Emitter { common: &common, log };
            out.format(Format::Json, false)?;
            let k = read_split(&split)?;
            let sys = partition_system(&k, split.n, split.p)?;
            out.finish(to_json(&check_nullity_theorem(&sys, tol)?))
        }
        Verb::Bound { split, common } => {
            let mut out = Emitter { common: &common, log };
            out.format(Format::Json, false)?;
            let k = read_split(&split)?;
            let part = BlockPartition::new(k.rows(), split.n, split.p)?;
            let b = part.b(&k);
            let k0 = part.with_b(&k, &Matrix::zeros(b.rows(), b.cols()));
            let neumann = approx::neumann_bound(&k0, &b, part)?;
            let sharp_est = sharp::sharp_estimate(&part.a(&k), &part.d(&k))?;
            let sys = partition_system(&k, split.n, split.p)?;
            let gap = singular_values(&sys.c)?.get(split.p).copied().unwrap_or(0.0);
            let nb = operator_norm(&b)?;
            let report = json!({
                "neumann": neumann,
                "sharp": sharp_est,
                "sigma_p1_C": gap,
                "norm_B": nb,
                "observed_ratio": (nb > 0.0).then(|| gap / nb),
            });
            out.finish(to_json(&report))
        }
        Verb::WorstCase {
            split,
            eps,
            seed,
            tol,
            max_iter,
            common,
        } => {
            let mut out = Emitter { common: &common, log };
            out.format(Format::Json, false)?;
            let k = read_split(&split)?;
            let inst = BlockInstance::from_matrix(&k, split.n, split.p)?;
            out.progress(&format!("searching for B0 at eps = {eps:e}"));
            let res = sharp::search_instance(&inst, eps, max_iter, tol, seed)?;
            if !res.converged {
                out.progress(&format!(
                    "search did not converge; best iterate has residual {:e}",
                    res.fixed_point_residual
                ));
            }
            let mut report = serde_json::to_value(&res).expect("report serializes");
            if k.rows() > INLINE_LIMIT {
                let path = companion_path(common.output.as_deref(), seed);
                mm::write_path(&path, &res.b0, mm::Layout::Array)?;
                out.progress(&format!("wrote B0 to {}", path.display()));
                report["B0"] = json!({ "path": path.display().to_string() });
            }
            out.finish(to_json(&report))
        }
        Verb::Sweep { sweep, common } => {
            let mut out = Emitter { common: &common, log };
            let fmt = out.format(Format::Csv, true)?;
            let cfg = sweep.config(0)?;
            out.progress(&format!("sweeping {} eps values, {} samples each", cfg.eps_list.len(), cfg.samples_per_eps));
            let res = match &sweep.input {
                Some(path) => experiments::run_sweep_on(&mm::read_path(path)?, &cfg)?,
                None => experiments::run_sweep(&cfg)?,
            };
            let body = match fmt {
                Format::Csv => {
                    let f = &res.fit;
                    format!(
                        "{}# fit: slope={},constant={},valid_rows={}\n",
                        res.to_csv(),
                        opt(f.slope),
                        opt(f.constant),
                        f.valid_rows
                    )
                }
                Format::Json => to_json(&res),
            };
            out.finish(body)
        }
        Verb::RankKSweep { sweep, k, common } => {
            let mut out = Emitter { common: &common, log };
            let fmt = out.format(Format::Csv, true)?;
            if sweep.input.is_some() {
                return Err(Failure::Usage("usage".into(), "rank-k-sweep generates its own K0".into()));
            }
            let cfg = sweep.config(k)?;
            out.progress(&format!("rank-{k} study over {} eps values", cfg.eps_list.len()));
            let res = experiments::rank_k_sweep(&cfg)?;
            out.finish(match fmt {
                Format::Csv => res.to_csv(),
                Format::Json => to_json(&res),
            })
        }
        Verb::Continuous {
            grid,
            x0,
            x1,
            eps,
            potential,
            kernel,
            common,
        } => {
            let mut out = Emitter { common: &common, log };
            out.format(Format::Json, false)?;
            let v = match potential.parse::<Potential>() {
                Ok(p) => p.samples(grid),
                Err(_) if Path::new(&potential).exists() => mm::read_path(&potential)?.as_slice().to_vec(),
                Err(e) => return Err(e.into()),
            };
            let w = match kernel.strip_prefix("rank1-offdiag:") {
                Some(seed) => {
                    let seed: u64 = seed
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad kernel seed '{seed}'")))?;
                    continuous::rank1_offdiag_kernel(grid, x0, x1, seed)?
                }
                None => mm::read_path(&kernel)?,
            };
            let prob = ContinuousProblem::new(v, x0, x1, eps, w)?;
            out.finish(to_json(&continuous::verify_continuous_bound(&prob)?))
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

fn companion_path(output: Option<&Path>, seed: u64) -> PathBuf {
    match output {
        Some(p) => p.with_extension("B0.mtx"),
        None => PathBuf::from(format!("B0-seed{seed}.mtx")),
    }
}
