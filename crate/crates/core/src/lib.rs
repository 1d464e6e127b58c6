//! Inverses of nearly-banded matrices: nullity checks for complementary
//! blocks, low-rank approximation of off-diagonal blocks of `K^{-1}`, the
//! sharp first-order bound on `sigma_{p+1}(C) / ||B||` together with a
//! constructive worst-case search, and a discretized continuum analogue.
//!
//! Block names follow one partition throughout. `K` is `M x M`,
//!
//! ```text
//! K = [[A, B], [G, D]]        K^{-1} = [[E, C], [H, F]]
//! ```
//!
//! with `A` of size `n x (n+p)` and `C` of size `(n+p) x (M-n)`.

pub mod approx;
pub mod continuous;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod partition;
pub mod rng;
pub mod sharp;

pub use approx::{best_rank_approx, neumann_bound, NeumannReport, TruncationResult};
pub use continuous::{ContinuousProblem, ContinuousReport};
pub use error::{Error, Result};
pub use experiments::{InstanceKind, SweepConfig, SweepOutput, SweepRow};
pub use linalg::{Matrix, SvdFactors};
pub use partition::{BlockPartition, NullityReport, PartitionedSystem};
pub use sharp::{BlockInstance, LemmaCertificate, SharpEstimate, WorstCaseResult};
