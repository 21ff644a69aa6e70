//! Relative-entropy soft covering and decoupling toolkit.
//!
//! * [`linalg`]: dense Hermitian linear algebra, partial traces, purifications, Haar sampling.
//! * [`entropic`]: divergences, entropies, the min-entropy SDP, smoothing certificates, lemma audits.
//! * [`channels`]: Kraus / Stinespring / Choi channels and classical-quantum ensembles.
//! * [`qcover`], [`cqcover`], [`decouple`]: covering and decoupling experiments with their bounds.
//! * [`cli`]: the experiment runner behind the `qsc` binary.

pub mod channels;
pub mod cli;
pub mod cqcover;
pub mod decouple;
pub mod entropic;
pub mod error;
pub mod linalg;
pub mod qcover;
pub mod stats;

pub use error::{Error, Result};
