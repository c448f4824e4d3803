//! Batched Bayesian optimization over finite grids with determinantal point
//! process (DPP) diversification.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: domains, kernels, exact Gaussian-process conditioning,
//!   joint posterior path sampling and a quadrature Fourier-feature surrogate.
//! * [`dpp`]: L-ensembles, restricted log-determinants, exact batch
//!   distributions (enumeration oracles), Monte-Carlo `p_max` estimates and
//!   the three Metropolis-Hastings batch samplers.
//! * [`strategies`]: every batch proposal rule (TS, hallucinated TS, GP-BUCB,
//!   GP-UCB-PE, UCB-DPP-SAMPLE, DPP-TS, DPP-TS-alt, PHE, DPP-PHE, uniform and
//!   pure-DPP exploration).
//! * [`bench`]: benchmark objectives, the noisy observation model, regret
//!   accounting and information-gain diagnostics.

pub mod bench;
pub mod dpp;
mod error;
pub mod linalg;
pub mod model;
pub mod strategies;

pub use error::{Error, Result};
