use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{vote_prob, CaseParams};
use crate::process::{simulate_aux_path, AuxPath, ProcessHyper};
use crate::votes_io::{VoteDataset, VoteRecord};

use super::state::ModelState;

/// Dimensions and true parameters of a simulated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub units: usize,
    pub periods: usize,
    pub items_per_period: usize,
    pub mu: f64,
    pub rho: f64,
    pub tau2: f64,
    #[serde(default = "one")]
    pub varsigma: f64,
    /// Mean λ of the exponential law of κ.
    pub kappa_mean: f64,
    /// Probability that a vote is recorded as missing.
    #[serde(default)]
    pub missing_rate: f64,
    /// Label of the first period; later periods count up from it.
    #[serde(default = "one_i64")]
    pub first_period: i64,
    /// Inclusive (first, last) period index per unit; full service if absent.
    #[serde(default)]
    pub service: Option<Vec<[usize; 2]>>,
}

fn one() -> f64 {
    1.0
}

fn one_i64() -> i64 {
    1
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.units == 0 || self.periods == 0 || self.items_per_period == 0 {
            return Err(Error::InvalidInput("synthetic dimensions must be positive".into()));
        }
        if !(self.kappa_mean > 0.0) || !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidInput("kappa_mean must be positive and missing_rate in [0, 1)".into()));
        }
        if let Some(s) = &self.service {
            if s.len() != self.units || s.iter().any(|&[a, b]| a > b || b >= self.periods) {
                return Err(Error::InvalidInput("service ranges must be one valid [first, last] per unit".into()));
            }
        }
        ProcessHyper::new(self.mu, self.rho, self.tau2, self.varsigma).map(|_| ())
    }

    fn hyper(&self) -> ProcessHyper {
        ProcessHyper {
            mu: self.mu,
            rho: self.rho,
            tau2: self.tau2,
            varsigma: self.varsigma,
        }
    }

    fn service(&self, unit: usize) -> (usize, usize) {
        match &self.service {
            Some(s) => (s[unit][0], s[unit][1]),
            None => (0, self.periods - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTruth {
    pub unit: String,
    pub periods: Vec<String>,
    pub beta: Vec<f64>,
    pub aux: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTruth {
    pub period: String,
    pub item: String,
    pub psi: f64,
    pub zeta: f64,
    pub kappa: f64,
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub units: Vec<UnitTruth>,
    pub cases: Vec<CaseTruth>,
}

impl SynthTruth {
    /// True β for (unit, period) labels, if that unit served then.
    pub fn beta(&self, unit: &str, period: &str) -> Option<f64> {
        let u = self.units.iter().find(|u| u.unit == unit)?;
        let t = u.periods.iter().position(|p| p == period)?;
        Some(u.beta[t])
    }
}

fn label(prefix: char, i: usize, n: usize) -> String {
    let width = n.to_string().len();
    format!("{prefix}{:0width$}", i + 1)
}

/// Simulates paths from the process prior, uniform item angles, exponential
/// κ and Bernoulli votes.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: &SynthSpec, rng: &mut R) -> Result<(VoteDataset, SynthTruth)> {
    spec.validate()?;
    let hyper = spec.hyper();
    let periods: Vec<String> = (0..spec.periods).map(|t| (spec.first_period + t as i64).to_string()).collect();
    let kappa_law = Exp::new(1.0 / spec.kappa_mean).expect("positive rate");

    let mut units = Vec::with_capacity(spec.units);
    for u in 0..spec.units {
        let (a, b) = spec.service(u);
        let path = simulate_aux_path(&hyper, b - a + 1, rng);
        units.push(UnitTruth {
            unit: label('u', u, spec.units),
            periods: periods[a..=b].to_vec(),
            beta: path.betas(spec.mu),
            aux: path.rows().to_vec(),
        });
    }
    let mut cases = Vec::with_capacity(spec.periods * spec.items_per_period);
    for period in &periods {
        for j in 0..spec.items_per_period {
            cases.push(CaseTruth {
                period: period.clone(),
                item: label('j', j, spec.items_per_period),
                psi: rng.random_range(-PI..PI),
                zeta: rng.random_range(-PI..PI),
                kappa: kappa_law.sample(rng).max(1e-12),
            });
        }
    }

    let mut records = Vec::new();
    for (t, period) in periods.iter().enumerate() {
        for case in &cases[t * spec.items_per_period..(t + 1) * spec.items_per_period] {
            let params = CaseParams::new(case.psi, case.zeta, case.kappa)?;
            for u in &units {
                let Some(slot) = u.periods.iter().position(|p| p == period) else {
                    continue;
                };
                let theta = vote_prob(u.beta[slot], &params);
                let missing = spec.missing_rate > 0.0 && rng.random::<f64>() < spec.missing_rate;
                let vote = rng.random::<f64>() < theta;
                records.push(VoteRecord {
                    unit: u.unit.clone(),
                    period: period.clone(),
                    item: case.item.clone(),
                    vote: (!missing).then_some(vote),
                });
            }
        }
    }
    let data = VoteDataset::from_records(&records)?;
    let truth = SynthTruth {
        spec: spec.clone(),
        units,
        cases,
    };
    Ok((data, truth))
}

/// Redraws every observed vote of `design` from the model at `state`.
pub fn simulate_votes<R: Rng + ?Sized>(design: &VoteDataset, state: &ModelState, rng: &mut R) -> Result<VoteDataset> {
    design.with_vote_values(|v| {
        let slot = v.period - design.service(v.unit).start();
        let case = design.case_index(v.period, v.item);
        rng.random::<f64>() < vote_prob(state.betas(v.unit)[slot], state.case(case))
    })
}

/// A state whose ideal points are exactly `betas` (per unit, over served
/// periods), built from unit-length auxiliary vectors.
pub fn state_from_angles(
    betas: &[Vec<f64>],
    cases: Vec<CaseParams>,
    hyper: ProcessHyper,
    lambda: f64,
) -> Result<ModelState> {
    let aux = betas
        .iter()
        .map(|b| AuxPath::new(b.iter().map(|&x| [x.cos() - hyper.mu, x.sin()]).collect()))
        .collect();
    ModelState::new(aux, cases, hyper, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> SynthSpec {
        SynthSpec {
            units: 9,
            periods: 3,
            items_per_period: 20,
            mu: 3.0,
            rho: 0.95,
            tau2: 0.3,
            varsigma: 1.0,
            kappa_mean: 20.0,
            missing_rate: 0.0,
            first_period: 2001,
            service: None,
        }
    }

    #[test]
    fn shape_and_truth_agree() {
        let (data, truth) = generate_synthetic(&spec(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(data.n_units(), 9);
        assert_eq!(data.n_periods(), 3);
        assert_eq!(data.n_cases(), 60);
        assert_eq!(data.n_votes(), 9 * 60);
        assert_eq!(data.period_ids(), ["2001", "2002", "2003"]);
        let u = &truth.units[0];
        let path = AuxPath::new(u.aux.clone());
        assert_eq!(path.betas(3.0), u.beta);
        assert_eq!(truth.beta("u1", "2002"), Some(u.beta[1]));
    }

    #[test]
    fn sharp_link_at_reverse_position_votes_reverse() {
        let design = generate_synthetic(&spec(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap().0;
        let betas: Vec<Vec<f64>> = (0..design.n_units()).map(|u| vec![0.7; design.service_len(u)]).collect();
        let hyper = ProcessHyper::new(3.0, 0.9, 1.0, 1.0).unwrap();
        let cases = (0..design.n_cases()).map(|_| CaseParams::new(0.7, 0.7 - PI, 1e8).unwrap()).collect();
        let state = state_from_angles(&betas, cases, hyper, 1.0).unwrap();
        let votes = simulate_votes(&design, &state, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(votes.votes().iter().all(|v| v.reverse));
    }

    #[test]
    fn coincident_positions_give_even_odds() {
        let design = generate_synthetic(&spec(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap().0;
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let betas: Vec<Vec<f64>> = (0..design.n_units())
            .map(|u| (0..design.service_len(u)).map(|_| r.random_range(-PI..PI)).collect())
            .collect();
        let hyper = ProcessHyper::new(3.0, 0.9, 1.0, 1.0).unwrap();
        let cases = (0..design.n_cases())
            .map(|_| {
                let a = r.random_range(-PI..PI);
                CaseParams::new(a, a, 5.0).unwrap()
            })
            .collect();
        let state = state_from_angles(&betas, cases, hyper, 1.0).unwrap();
        let mut ones = 0;
        let mut total = 0;
        for s in 0..20 {
            let votes = simulate_votes(&design, &state, &mut ChaCha8Rng::seed_from_u64(10 + s)).unwrap();
            ones += votes.votes().iter().filter(|v| v.reverse).count();
            total += votes.n_votes();
        }
        let f = ones as f64 / total as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / total as f64).sqrt(), "{f}");
    }

    #[test]
    fn item_frequencies_match_mean_probability() {
        let s = SynthSpec {
            units: 40,
            periods: 1,
            items_per_period: 5,
            ..spec()
        };
        let (design, truth) = generate_synthetic(&s, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let reps = 200;
        let mut counts = vec![0usize; design.n_cases()];
        let betas: Vec<Vec<f64>> = truth.units.iter().map(|u| u.beta.clone()).collect();
        let cases: Vec<CaseParams> = truth
            .cases
            .iter()
            .map(|c| CaseParams::new(c.psi, c.zeta, c.kappa).unwrap())
            .collect();
        let state = state_from_angles(&betas, cases.clone(), ProcessHyper::new(3.0, 0.95, 0.3, 1.0).unwrap(), 1.0).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..reps {
            let v = simulate_votes(&design, &state, &mut r).unwrap();
            for vote in v.votes() {
                counts[design.case_index(vote.period, vote.item)] += vote.reverse as usize;
            }
        }
        for (c, &k) in counts.iter().enumerate() {
            let probs: Vec<f64> = betas.iter().map(|b| vote_prob(b[0], &cases[c])).collect();
            let n = (reps * probs.len()) as f64;
            let p = probs.iter().sum::<f64>() / probs.len() as f64;
            let var: f64 = probs.iter().map(|q| q * (1.0 - q)).sum::<f64>() * reps as f64;
            assert!((k as f64 - n * p).abs() <= 4.0 * var.sqrt() + 1.0, "case {c}: {k} vs {}", n * p);
        }
    }
}
