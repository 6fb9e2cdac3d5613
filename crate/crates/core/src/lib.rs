//! Greedy sparse-signal recovery with regularized signal estimation.
//!
//! The crate provides orthogonal matching pursuit (OMP) together with
//! Tikhonov-regularized (T-OMP), Landweber-regularized (L-OMP) and LMS-based
//! (SGP) variants, CoSaMP, a seeded problem generator, reconstruction metrics
//! and a Monte-Carlo harness that sweeps measurement counts and noise levels.

pub mod analysis;
pub mod linalg;
pub mod model;
pub mod pursuit;
pub mod harness;
