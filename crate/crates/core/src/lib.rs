//! Encrypted aggregate-then-argmax voting for prompt ensembles.
//!
//! The crate evaluates the server side of private ensemble voting over a
//! SIMD homomorphic-vector abstraction: per-prompt logit vectors are summed
//! under encryption and reduced to a one-hot vector marking the winning
//! class, using a composite polynomial approximation of `sign`.
//!
//! * [`backend`]: slot-vector backends (exact and noisy leveled simulator).
//! * [`poly`]: polynomials and depth-optimal evaluation.
//! * [`sign`]: composite sign approximation and its error certificate.
//! * [`argmax`]: normalization, `max`, logarithmic-fold argmax and the
//!   linear pairwise-comparison baseline, plus slot packing.
//! * [`ensemble`]: logit ingestion, aggregation and end-to-end voting.
//! * [`bench`]: operation-count benchmarks and cost breakdowns.

pub mod argmax;
pub mod backend;
pub mod bench;
pub mod ensemble;
pub mod error;
pub mod poly;
pub mod sign;

pub use backend::{
    BackendParams, CkksSimulator, CostModel, ExactBackend, HomBackend, OpCounters, Plaintext,
    SlotVector,
};
pub use error::{Error, Result};
pub use poly::{EvalPlan, Polynomial};
pub use sign::{CompositeSign, ErrorCertificate, SignConfig};
