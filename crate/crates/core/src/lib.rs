//! Bayesian dynamic factor model for binary votes with ideal points on the
//! unit circle.
//!
//! Each unit (voter) follows a path of angles generated by projecting two
//! latent AR(1) processes onto the circle. Each item (one decision in one
//! period) has a "reverse" and an "affirm" position; a unit votes for the
//! nearer one, with a symmetric-beta shock. The posterior is explored by an
//! MCMC scheme combining elliptical slice sampling for the latent paths,
//! circle HMC for the item positions and Metropolis updates for the rest.

pub mod circular;
pub mod cli;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod identify;
pub mod link;
pub mod mcmc;
pub mod process;
pub mod quadrature;
pub mod special;
pub mod votes_io;

pub use error::{Error, Result};
