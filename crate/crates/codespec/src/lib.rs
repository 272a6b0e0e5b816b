//! Information-theoretic analysis of neural-network codes.
//!
//! The crate bundles four strands of analysis around a single input type,
//! the activation matrix (samples x units):
//!
//! * eigenspectra of the activation covariance and power-law exponent
//!   estimation ([`spectrum`], [`powerlaw`]),
//! * random projections of activation trajectories and their action,
//!   with the zeta-function prediction ([`projection`]),
//! * closed-form entropy and channel-capacity results with brute-force
//!   and Blahut-Arimoto oracles ([`infotheory`]),
//! * Monte Carlo simulation of information survival through cascaded
//!   dropout layers ([`channel_sim`]).
//!
//! [`synth`] generates inputs with known ground truth, [`activation_io`]
//! handles NPY/CSV persistence, and the `codespec` binary exposes it all
//! on the command line.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation_io;
pub mod channel_sim;
pub mod error;
pub mod infotheory;
pub mod powerlaw;
pub mod projection;
pub mod report;
pub mod rng;
pub mod spectrum;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
