//! Exact simulation of a quantum discrete denoising diffusion probabilistic
//! model over binary data, together with its classical factorized baseline.
//!
//! The forward process pushes a joint distribution over `N`-bit strings
//! towards uniform with a depolarizing channel; because every state along the
//! way is diagonal in the computational basis, the whole process is tracked as
//! a length-`2^N` probability vector. The backward process is a
//! time-conditioned parameterized circuit trained against the ground-truth
//! posterior with an exact (full-distribution) MMD loss.
//!
//! Modules follow the pipeline:
//!
//! * [`sim`] — statevector simulation primitives plus a dense density-matrix
//!   path used as a small-system verification oracle.
//! * [`schedule`] — the cosine noise schedule `α_t`, `ᾱ_t`.
//! * [`diffusion`] — depolarizing forward diffusion and noisy-sample draws.
//! * [`posterior`] — ground-truth posteriors: closed form, mixture form,
//!   swap-test style circuit, and a Choi-operator oracle.
//! * [`denoiser`] — the trainable denoising circuit and its checkpoints.
//! * [`train`] — MMD loss, parameter-shift gradients, Adam, training loop.
//! * [`onestep`] — step-distribution assembly from an x0-predictor and both
//!   iterative and single-step generation.
//! * [`baseline`] — classical per-dimension (factorized) diffusion baseline.
//! * [`datasets`] — bars-and-stripes, mixed Gaussian, and fully correlated
//!   target distributions.
//! * [`metrics`] — exact divergences, entropies, and report tables.

pub mod baseline;
pub mod datasets;
pub mod denoiser;
pub mod diffusion;
mod error;
pub mod metrics;
pub mod onestep;
pub mod posterior;
pub mod rng;
pub mod schedule;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
