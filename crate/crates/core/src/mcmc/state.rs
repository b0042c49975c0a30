use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::dist::truncated_normal;
use crate::error::{Error, Result};
use crate::link::{vote_loglik, CaseParams};
use crate::process::{simulate_aux_path, AuxPath, ProcessHyper};
use crate::votes_io::{HyperPrior, VoteDataset};

/// Every latent quantity of the model.
///
/// Ideal points are cached next to the auxiliary paths and recomputed
/// whenever a path or μ changes, so they always equal the angle transform of
/// the current paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    aux: Vec<AuxPath>,
    betas: Vec<Vec<f64>>,
    cases: Vec<CaseParams>,
    hyper: ProcessHyper,
    lambda: f64,
}

impl ModelState {
    pub fn new(aux: Vec<AuxPath>, cases: Vec<CaseParams>, hyper: ProcessHyper, lambda: f64) -> Result<Self> {
        hyper.validate()?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        let betas = aux.iter().map(|p| p.betas(hyper.mu)).collect();
        Ok(ModelState {
            aux,
            betas,
            cases,
            hyper,
            lambda,
        })
    }

    /// Starting point of a chain: hyperparameters at their prior means,
    /// paths drawn from the process prior, item angles uniform, κ = λ = 1.
    pub fn initial<R: Rng + ?Sized>(data: &VoteDataset, prior: &HyperPrior, rng: &mut R) -> Result<Self> {
        let hyper = ProcessHyper::new(
            if prior.mu_mean > 0.0 { prior.mu_mean } else { 1.0 },
            prior.rho_mean.clamp(0.05, 0.95),
            prior.tau2_mean,
            prior.varsigma_mean,
        )?;
        let aux = (0..data.n_units())
            .map(|u| simulate_aux_path(&hyper, data.service_len(u), rng))
            .collect();
        let cases = (0..data.n_cases())
            .map(|_| CaseParams::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI), 1.0))
            .collect::<Result<_>>()?;
        Self::new(aux, cases, hyper, 1.0)
    }

    /// A joint draw of every latent quantity from the prior.
    pub fn from_prior<R: Rng + ?Sized>(data: &VoteDataset, prior: &HyperPrior, rng: &mut R) -> Result<Self> {
        let mu = truncated_normal(rng, prior.mu_mean, prior.mu_sd, 0.0, f64::INFINITY);
        let rho = truncated_normal(rng, prior.rho_mean, prior.rho_sd, 0.0, 1.0);
        let tau2 = Exp::new(1.0 / prior.tau2_mean).expect("positive rate").sample(rng);
        let (shape, rate) = prior.varsigma_shape_rate();
        let varsigma = Gamma::new(shape, 1.0 / rate).expect("positive shape").sample(rng);
        let eta = Exp::new(1.0 / prior.inv_lambda_mean).expect("positive rate").sample(rng);
        let lambda = 1.0 / eta;
        let hyper = ProcessHyper::new(mu, rho, tau2, varsigma)?;
        let aux = (0..data.n_units())
            .map(|u| simulate_aux_path(&hyper, data.service_len(u), rng))
            .collect();
        let kappa_law = Exp::new(eta).expect("positive rate");
        let cases = (0..data.n_cases())
            .map(|_| {
                let psi = rng.random_range(-PI..PI);
                let zeta = rng.random_range(-PI..PI);
                // κ below the smallest normal f64 is indistinguishable from 0.
                CaseParams::new(psi, zeta, kappa_law.sample(rng).max(f64::MIN_POSITIVE))
            })
            .collect::<Result<_>>()?;
        Self::new(aux, cases, hyper, lambda)
    }

    pub fn n_units(&self) -> usize {
        self.aux.len()
    }

    pub fn aux(&self, unit: usize) -> &AuxPath {
        &self.aux[unit]
    }

    pub fn aux_paths(&self) -> &[AuxPath] {
        &self.aux
    }

    /// Ideal points of a unit over its served periods.
    pub fn betas(&self, unit: usize) -> &[f64] {
        &self.betas[unit]
    }

    pub fn cases(&self) -> &[CaseParams] {
        &self.cases
    }

    pub fn case(&self, case: usize) -> &CaseParams {
        &self.cases[case]
    }

    pub fn hyper(&self) -> &ProcessHyper {
        &self.hyper
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub(crate) fn set_aux(&mut self, unit: usize, path: AuxPath) {
        debug_assert_eq!(path.len(), self.aux[unit].len());
        self.betas[unit] = path.betas(self.hyper.mu);
        self.aux[unit] = path;
    }

    pub(crate) fn set_case(&mut self, case: usize, params: CaseParams) {
        self.cases[case] = params;
    }

    pub(crate) fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    pub(crate) fn set_rho(&mut self, rho: f64) {
        self.hyper.rho = rho;
    }

    /// Moves to new (μ, τ², ς) holding the uncentred `v` series fixed, so the
    /// centred paths shift by the change in μ.
    pub(crate) fn set_hyper_keep_v(&mut self, mu: f64, tau2: f64, varsigma: f64) {
        let shift = self.hyper.mu - mu;
        self.hyper.mu = mu;
        self.hyper.tau2 = tau2;
        self.hyper.varsigma = varsigma;
        for (path, betas) in self.aux.iter_mut().zip(&mut self.betas) {
            for row in path.rows_mut() {
                row[0] += shift;
            }
            *betas = path.betas(mu);
        }
    }

    /// Vote log-likelihood of one unit's observed votes.
    pub fn unit_loglik(&self, data: &VoteDataset, unit: usize) -> f64 {
        let betas = &self.betas[unit];
        data.unit_votes(unit)
            .iter()
            .map(|v| vote_loglik(betas[v.slot], v.reverse, &self.cases[v.case]))
            .sum()
    }

    /// (β, vote) pairs of the votes cast on one case.
    pub fn case_votes(&self, data: &VoteDataset, case: usize) -> Vec<(f64, bool)> {
        data.case_votes(case)
            .iter()
            .map(|v| (self.betas[v.unit][v.slot], v.reverse))
            .collect()
    }

    /// Total vote log-likelihood.
    pub fn loglik(&self, data: &VoteDataset) -> f64 {
        (0..self.aux.len()).map(|u| self.unit_loglik(data, u)).sum()
    }

    /// Fails with the offending block if any quantity is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        let h = &self.hyper;
        if ![h.mu, h.rho, h.tau2, h.varsigma, self.lambda].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite(format!("hyperparameters {h:?}, lambda {}", self.lambda)));
        }
        for (u, p) in self.aux.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("auxiliary path of unit {u}: {:?}", p.rows())));
            }
        }
        for (c, p) in self.cases.iter().enumerate() {
            if !(p.psi().is_finite() && p.zeta().is_finite() && p.kappa().is_finite()) {
                return Err(Error::NonFinite(format!("case {c}: {p:?}")));
            }
        }
        Ok(())
    }
}
