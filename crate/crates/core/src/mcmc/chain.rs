use std::time::Instant;

use log::info;
use rayon::prelude::*;

use crate::error::Result;
use crate::votes_io::{RunConfig, VoteDataset};

use super::kernels::{
    ess_update_unit, gibbs_update_lambda, hmc_update_case, mh_update_hyper, mh_update_kappa, mh_update_rho,
    HmcSettings, HyperProposal,
};
use super::output::{AcceptanceReport, BlockRates, ChainOutput, DrawLayout, HyperDraw, PosteriorDraw, RunManifest};
use super::rng::{substream, Phase};
use super::state::ModelState;

/// Which blocks a sweep runs. All are on for a normal fit; tests switch
/// blocks off to check each one against its prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    pub ess: bool,
    pub hmc: bool,
    pub kappa: bool,
    pub hyper: bool,
    pub rho: bool,
    pub lambda: bool,
}

impl Default for Blocks {
    fn default() -> Self {
        Blocks {
            ess: true,
            hmc: true,
            kappa: true,
            hyper: true,
            rho: true,
            lambda: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    hmc: (f64, u64),
    kappa: (f64, u64),
    hyper: (f64, u64),
    rho: (f64, u64),
    shrinks: (f64, u64),
    divergent: u64,
}

impl Tally {
    fn rates(&self) -> BlockRates {
        let r = |(s, n): (f64, u64)| if n == 0 { 0.0 } else { s / n as f64 };
        BlockRates {
            hmc: r(self.hmc),
            kappa: r(self.kappa),
            hyper: r(self.hyper),
            rho: r(self.rho),
            ess_shrinks: r(self.shrinks),
            hmc_divergent: self.divergent,
        }
    }
}

/// Sample covariance of the later half of a trace, dropping the transient.
fn recent_covariance(trace: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let recent = &trace[trace.len() / 2..];
    let n = recent.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|i| recent.iter().map(|x| x[i]).sum::<f64>() / n);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            recent.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1.0)
        })
    })
}

/// Robbins–Monro gain at adaptation step `n`.
fn gain(n: usize) -> f64 {
    (n as f64 + 1.0).powf(-0.6)
}

/// The proposal shape is re-estimated from the burn-in trace every
/// `HYPER_COV_EVERY` draws once `HYPER_COV_START` are in, but never within the
/// last `HYPER_COV_EVERY` burn-in iterations, so the scale can settle.
const HYPER_COV_START: usize = 100;
const HYPER_COV_EVERY: usize = 50;

/// One chain: the model state plus adaptation state and acceptance tallies.
pub struct Sampler {
    data: VoteDataset,
    config: RunConfig,
    blocks: Blocks,
    chain: u64,
    iteration: usize,
    state: ModelState,
    hmc_log_step: Vec<f64>,
    kappa_log_step: Vec<f64>,
    hyper_proposal: HyperProposal,
    hyper_trace: Vec<[f64; 3]>,
    burnin_tally: Tally,
    sampling_tally: Tally,
}

impl Sampler {
    pub fn new(data: VoteDataset, config: RunConfig, chain: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = substream(config.seed, chain as u64, 0, Phase::Init, 0);
        let state = ModelState::initial(&data, &config.hyperprior, &mut rng)?;
        Ok(Self::with_state(data, config, chain, state))
    }

    pub fn with_state(data: VoteDataset, config: RunConfig, chain: usize, state: ModelState) -> Self {
        let s = &config.sampler;
        let n_cases = data.n_cases();
        Sampler {
            hmc_log_step: vec![s.hmc_step.ln(); n_cases],
            kappa_log_step: vec![s.kappa_step.ln(); n_cases],
            hyper_proposal: HyperProposal::isotropic(s.hyper_step),
            hyper_trace: Vec::new(),
            burnin_tally: Tally::default(),
            sampling_tally: Tally::default(),
            blocks: Blocks::default(),
            iteration: 0,
            chain: chain as u64,
            data,
            config,
            state,
        }
    }

    pub fn with_blocks(mut self, blocks: Blocks) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn data(&self) -> &VoteDataset {
        &self.data
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Swaps the observed votes (the design must match the current one).
    pub fn set_data(&mut self, data: VoteDataset) {
        debug_assert_eq!(data.n_cases(), self.data.n_cases());
        debug_assert_eq!(data.n_units(), self.data.n_units());
        self.data = data;
    }

    pub fn acceptance(&self) -> AcceptanceReport {
        AcceptanceReport {
            burnin: self.burnin_tally.rates(),
            sampling: self.sampling_tally.rates(),
        }
    }

    fn rng(&self, phase: Phase, index: usize) -> rand_chacha::ChaCha8Rng {
        substream(self.config.seed, self.chain, self.iteration as u64 + 1, phase, index as u64)
    }

    /// One full sweep. Adaptation runs while the iteration is in burn-in.
    pub fn sweep(&mut self) -> Result<()> {
        let adapt = self.iteration < self.config.sampler.burnin;
        let n_adapt = self.iteration;
        let s = self.config.sampler.clone();
        let prior = self.config.hyperprior.clone();
        let mut tally = if adapt { self.burnin_tally } else { self.sampling_tally };

        if self.blocks.ess {
            let outs = (0..self.data.n_units())
                .into_par_iter()
                .map(|u| ess_update_unit(&self.state, u, &self.data, &mut self.rng(Phase::Ess, u)))
                .collect::<Result<Vec<_>>>()?;
            for (u, out) in outs.into_iter().enumerate() {
                tally.shrinks.0 += out.shrinks as f64;
                tally.shrinks.1 += 1;
                self.state.set_aux(u, out.path);
            }
        }

        if self.blocks.hmc {
            let outs: Vec<_> = (0..self.data.n_cases())
                .into_par_iter()
                .map(|c| {
                    let hs = HmcSettings {
                        step: self.hmc_log_step[c].exp(),
                        n_leapfrog: s.leapfrog_steps,
                        momentum: s.momentum,
                    };
                    hmc_update_case(&self.state, c, &self.data, &hs, &mut self.rng(Phase::Hmc, c))
                })
                .collect();
            for (c, out) in outs.into_iter().enumerate() {
                tally.hmc.0 += out.accepted as u8 as f64;
                tally.hmc.1 += 1;
                tally.divergent += out.divergent as u64;
                if adapt {
                    let next = self.hmc_log_step[c] + gain(n_adapt) * (out.accept_prob - s.hmc_target);
                    self.hmc_log_step[c] = next.clamp(-9.0, 1.0);
                }
                self.state.set_case(c, out.case);
            }
        }

        if self.blocks.kappa {
            let outs: Vec<_> = (0..self.data.n_cases())
                .into_par_iter()
                .map(|c| {
                    let step = self.kappa_log_step[c].exp();
                    mh_update_kappa(&self.state, c, &self.data, step, &mut self.rng(Phase::Kappa, c))
                })
                .collect();
            for (c, (params, accepted)) in outs.into_iter().enumerate() {
                tally.kappa.0 += accepted as u8 as f64;
                tally.kappa.1 += 1;
                if adapt {
                    let next = self.kappa_log_step[c] + gain(n_adapt) * (accepted as u8 as f64 - s.kappa_target);
                    self.kappa_log_step[c] = next.clamp(-9.0, 3.0);
                }
                self.state.set_case(c, params);
            }
        }

        if self.blocks.hyper {
            let mut rng = self.rng(Phase::Hyper, 0);
            let (h, accepted) = mh_update_hyper(&self.state, &prior, &self.hyper_proposal, &mut rng);
            tally.hyper.0 += accepted as u8 as f64;
            tally.hyper.1 += 1;
            if accepted {
                self.state.set_hyper_keep_v(h.mu, h.tau2, h.varsigma);
            }
            if adapt {
                self.hyper_proposal
                    .adapt_scale(gain(n_adapt) * (accepted as u8 as f64 - s.hyper_target));
                let h = self.state.hyper();
                self.hyper_trace.push([h.mu.ln(), h.tau2.ln(), h.varsigma.ln()]);
                let n = self.hyper_trace.len();
                let room = s.burnin - self.iteration >= HYPER_COV_EVERY;
                if n >= HYPER_COV_START && n.is_multiple_of(HYPER_COV_EVERY) && room {
                    self.hyper_proposal.set_covariance(recent_covariance(&self.hyper_trace));
                }
            }
        }

        if self.blocks.rho {
            let (rho, accepted) = mh_update_rho(&self.state, &prior, &mut self.rng(Phase::Rho, 0));
            tally.rho.0 += accepted as u8 as f64;
            tally.rho.1 += 1;
            self.state.set_rho(rho);
        }

        if self.blocks.lambda {
            let lambda = gibbs_update_lambda(&self.state, &prior, &mut self.rng(Phase::Lambda, 0));
            self.state.set_lambda(lambda);
        }

        if adapt {
            self.burnin_tally = tally;
        } else {
            self.sampling_tally = tally;
        }
        self.iteration += 1;
        self.state.check_finite()
    }

    /// Column labels for this dataset's draw tables.
    pub fn layout(&self) -> DrawLayout {
        layout_for(&self.data)
    }

    /// The current state flattened in layout order.
    pub fn snapshot(&self) -> PosteriorDraw {
        let st = &self.state;
        let h = st.hyper();
        PosteriorDraw {
            beta: (0..st.n_units()).flat_map(|u| st.betas(u).iter().copied()).collect(),
            psi: st.cases().iter().map(|c| c.psi()).collect(),
            zeta: st.cases().iter().map(|c| c.zeta()).collect(),
            kappa: st.cases().iter().map(|c| c.kappa()).collect(),
            hyper: HyperDraw {
                mu: h.mu,
                rho: h.rho,
                tau2: h.tau2,
                varsigma: h.varsigma,
                lambda: st.lambda(),
            },
        }
    }
}

/// β columns are unit-major over served periods; case columns period-major.
pub fn layout_for(data: &VoteDataset) -> DrawLayout {
    let beta = (0..data.n_units())
        .flat_map(|u| {
            data.service(u)
                .map(move |p| (data.unit_ids()[u].clone(), data.period_ids()[p].clone()))
        })
        .collect();
    let cases = (0..data.n_cases())
        .map(|c| {
            let (p, i) = data.case_key(c);
            (data.period_ids()[p].clone(), data.item_ids(p)[i].clone())
        })
        .collect();
    DrawLayout { beta, cases }
}

/// Runs chain 0 for the configured schedule.
pub fn run_chain(data: &VoteDataset, config: &RunConfig) -> Result<ChainOutput> {
    run_chain_indexed(data, config, 0)
}

/// Runs one chain whose random streams are keyed by `chain`.
pub fn run_chain_indexed(data: &VoteDataset, config: &RunConfig, chain: usize) -> Result<ChainOutput> {
    let started = Instant::now();
    let s = config.sampler.clone();
    let mut sampler = Sampler::new(data.clone(), config.clone(), chain)?;
    let mut output = ChainOutput {
        manifest: RunManifest {
            seed: config.seed,
            chain,
            iterations: s.iterations,
            burnin: s.burnin,
            thin: s.thin,
            draws: 0,
            config_hash: config.hash(),
            acceptance: AcceptanceReport::default(),
            identified: false,
            elapsed_secs: 0.0,
            layout: sampler.layout(),
        },
        beta: Vec::new(),
        psi: Vec::new(),
        zeta: Vec::new(),
        kappa: Vec::new(),
        hyper: Vec::new(),
    };
    for it in 0..s.iterations {
        sampler.sweep()?;
        if it >= s.burnin && (it - s.burnin + 1).is_multiple_of(s.thin) {
            output.push(sampler.snapshot());
        }
        if s.progress_every > 0 && (it + 1) % s.progress_every == 0 {
            let a = sampler.acceptance();
            let r = if it < s.burnin { a.burnin } else { a.sampling };
            let h = sampler.state().hyper();
            info!(
                "chain {chain} iter {}/{}: hmc {:.2} kappa {:.2} hyper {:.2} rho {:.2} | mu {:.3} rho {:.3} tau2 {:.3} varsigma {:.3}",
                it + 1,
                s.iterations,
                r.hmc,
                r.kappa,
                r.hyper,
                r.rho,
                h.mu,
                h.rho,
                h.tau2,
                h.varsigma
            );
        }
    }
    output.manifest.acceptance = sampler.acceptance();
    output.manifest.elapsed_secs = started.elapsed().as_secs_f64();
    Ok(output)
}

/// Runs `n` chains in parallel, each with its own random streams.
pub fn run_chains(data: &VoteDataset, config: &RunConfig, n: usize) -> Result<Vec<ChainOutput>> {
    (0..n)
        .into_par_iter()
        .map(|k| run_chain_indexed(data, config, k))
        .collect()
}
