//! Sparse secret sharing over finite fields.
//!
//! Encodes sparse private matrices into sparse shares with minimal q-ary
//! information leakage, and applies the encodings to straggler-tolerant
//! private distributed matrix multiplication.

pub mod cluster;
pub mod error;
pub mod field;
pub mod matmul;
pub mod numeric;
pub mod optimizer;
pub mod otp;
pub mod rng;
pub mod shuffle;
pub mod sim;
pub mod sss;
pub mod stats;

pub use cluster::{ClusterPlan, LayeredTasks};
pub use error::{Error, Result};
pub use field::{FieldElement, FieldKind, FieldMatrix, FieldSpec};
pub use matmul::{MmScheme, MmVariant, WorkerResponse};
pub use numeric::Real;
pub use optimizer::{solve_otp, solve_pstar, solve_sss, SolveResult, TrustedCollusion};
pub use otp::{OtpShares, PadParams};
pub use shuffle::PermTriple;
pub use sim::{LatencyModel, SimResult};
pub use sss::{ShareParams, ShareSet};
pub use stats::{Channel, LeakageReport, SourceModel};

/// Double-precision PMF, the precision every solver uses.
pub type Pmf = stats::Pmf<f64>;
pub type Pmf32 = stats::Pmf<f32>;
pub type ConditionalPmf = stats::ConditionalPmf<f64>;
pub type ConditionalPmf32 = stats::ConditionalPmf<f32>;
