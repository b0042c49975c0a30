//! Posterior sampler: elliptical slice updates for the latent paths, circle
//! HMC for item angles, Metropolis updates for κ and the process
//! hyperparameters, and a conjugate draw for λ.

mod chain;
mod kernels;
mod output;
mod rng;
mod state;
mod synth;

pub use chain::{layout_for, run_chain, run_chain_indexed, run_chains, Blocks, Sampler};
pub use kernels::{
    draw_lambda, ess_update_unit, gibbs_update_lambda, hmc_transition, hmc_update_case, kappa_transition, kinetic,
    leapfrog, mh_update_hyper, mh_update_kappa, mh_update_rho, rho_stats, EssOutcome, HmcOutcome, HmcSettings,
    HyperProposal, RhoStats, MAX_SHRINKS,
};
pub use output::{AcceptanceReport, BlockRates, ChainOutput, DrawLayout, HyperDraw, PosteriorDraw, RunManifest};
pub use rng::{substream, Phase};
pub use state::ModelState;
pub use synth::{generate_synthetic, simulate_votes, state_from_angles, CaseTruth, SynthSpec, SynthTruth, UnitTruth};
