use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column labels of the draw tables.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DrawLayout {
    /// (unit, period) of each β column.
    pub beta: Vec<(String, String)>,
    /// (period, item) of each ψ, ζ and κ column.
    pub cases: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperDraw {
    pub mu: f64,
    pub rho: f64,
    pub tau2: f64,
    pub varsigma: f64,
    pub lambda: f64,
}

/// Acceptance rates per block, plus slice-sampler effort.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockRates {
    pub hmc: f64,
    pub kappa: f64,
    pub hyper: f64,
    pub rho: f64,
    /// Mean number of bracket shrinks per elliptical slice update.
    pub ess_shrinks: f64,
    /// HMC trajectories rejected because of a non-finite energy.
    pub hmc_divergent: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub burnin: BlockRates,
    pub sampling: BlockRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub chain: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub draws: usize,
    pub config_hash: String,
    pub acceptance: AcceptanceReport,
    pub identified: bool,
    pub elapsed_secs: f64,
    pub layout: DrawLayout,
}

/// One retained state, flattened in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub beta: Vec<f64>,
    pub psi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub hyper: HyperDraw,
}

/// Thinned posterior draws of every parameter block. Rows are draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub manifest: RunManifest,
    pub beta: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub zeta: Vec<Vec<f64>>,
    pub kappa: Vec<Vec<f64>>,
    pub hyper: Vec<HyperDraw>,
}

impl ChainOutput {
    pub fn layout(&self) -> &DrawLayout {
        &self.manifest.layout
    }

    pub fn n_draws(&self) -> usize {
        self.hyper.len()
    }

    pub fn draw(&self, i: usize) -> PosteriorDraw {
        PosteriorDraw {
            beta: self.beta[i].clone(),
            psi: self.psi[i].clone(),
            zeta: self.zeta[i].clone(),
            kappa: self.kappa[i].clone(),
            hyper: self.hyper[i],
        }
    }

    pub fn push(&mut self, d: PosteriorDraw) {
        self.beta.push(d.beta);
        self.psi.push(d.psi);
        self.zeta.push(d.zeta);
        self.kappa.push(d.kappa);
        self.hyper.push(d.hyper);
        self.manifest.draws = self.hyper.len();
    }

    pub fn draws(&self) -> impl Iterator<Item = PosteriorDraw> + '_ {
        (0..self.n_draws()).map(|i| self.draw(i))
    }

    /// Concatenates chains that share a layout into one pooled output.
    pub fn pool(chains: Vec<ChainOutput>) -> Result<ChainOutput> {
        let mut iter = chains.into_iter();
        let mut pooled = iter
            .next()
            .ok_or_else(|| Error::InvalidInput("no chains to pool".into()))?;
        for c in iter {
            if c.manifest.layout != pooled.manifest.layout {
                return Err(Error::InvalidInput("chains have different layouts".into()));
            }
            pooled.manifest.identified &= c.manifest.identified;
            for d in c.draws() {
                pooled.push(d);
            }
        }
        Ok(pooled)
    }
}
