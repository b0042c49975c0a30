use std::collections::HashMap;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::link::{vote_loglik, CaseParams};
use crate::mcmc::{ChainOutput, DrawLayout, PosteriorDraw};
use crate::votes_io::VoteDataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaicResult {
    pub period: String,
    pub waic: f64,
    pub lppd: f64,
    pub penalty: f64,
}

/// Where each observed vote's parameters live in the draw tables.
#[derive(Debug, Clone)]
pub struct VoteColumns {
    /// Per vote, in dataset order: (β column, case column, reverse).
    votes: Vec<(usize, usize, bool)>,
    /// Per vote: (unit, period).
    keys: Vec<(usize, usize)>,
}

impl VoteColumns {
    pub fn new(layout: &DrawLayout, data: &VoteDataset) -> Result<Self> {
        let beta: HashMap<(&str, &str), usize> = layout
            .beta
            .iter()
            .enumerate()
            .map(|(i, (u, p))| ((u.as_str(), p.as_str()), i))
            .collect();
        let cases: HashMap<(&str, &str), usize> = layout
            .cases
            .iter()
            .enumerate()
            .map(|(i, (p, j))| ((p.as_str(), j.as_str()), i))
            .collect();
        let mut votes = Vec::with_capacity(data.n_votes());
        let mut keys = Vec::with_capacity(data.n_votes());
        for v in data.votes() {
            let unit = data.unit_ids()[v.unit].as_str();
            let period = data.period_ids()[v.period].as_str();
            let item = data.item_ids(v.period)[v.item].as_str();
            let b = beta.get(&(unit, period)).ok_or_else(|| {
                Error::InvalidInput(format!("draws have no ideal point for unit {unit:?} in period {period:?}"))
            })?;
            let c = cases.get(&(period, item)).ok_or_else(|| {
                Error::InvalidInput(format!("draws have no parameters for item {item:?} in period {period:?}"))
            })?;
            votes.push((*b, *c, v.reverse));
            keys.push((v.unit, v.period));
        }
        Ok(VoteColumns { votes, keys })
    }

    fn case(draw: &PosteriorDraw, c: usize) -> Result<CaseParams> {
        CaseParams::new(draw.psi[c], draw.zeta[c], draw.kappa[c])
    }

    /// Log-likelihood of every observed vote under one draw.
    pub fn vote_logliks(&self, draw: &PosteriorDraw) -> Result<Vec<f64>> {
        self.votes
            .iter()
            .map(|&(b, c, y)| Ok(vote_loglik(draw.beta[b], y, &Self::case(draw, c)?)))
            .collect()
    }

    /// Total vote log-likelihood of one draw.
    pub fn draw_loglik(&self, draw: &PosteriorDraw) -> Result<f64> {
        Ok(self.vote_logliks(draw)?.iter().sum())
    }
}

/// lppd and penalty from a draws × units matrix of summed log-likelihoods.
///
/// The penalty uses the variance with denominator S, so repeating every
/// draw leaves both terms unchanged.
pub fn waic_terms(loglik: &[Vec<f64>]) -> (f64, f64) {
    let s = loglik.len() as f64;
    let n_units = loglik.first().map_or(0, Vec::len);
    let mut lppd = 0.0;
    let mut penalty = 0.0;
    for u in 0..n_units {
        let col: Vec<f64> = loglik.iter().map(|row| row[u]).collect();
        let top = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lppd += top + (col.iter().map(|x| (x - top).exp()).sum::<f64>() / s).ln();
        let mean = col.iter().sum::<f64>() / s;
        penalty += col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s;
    }
    (lppd, penalty)
}

/// WAIC of one period: each unit's votes on that period's items form one
/// observation.
pub fn waic_period(output: &ChainOutput, data: &VoteDataset, period: usize) -> Result<WaicResult> {
    let cols = VoteColumns::new(output.layout(), data)?;
    waic_period_with(output, data, &cols, period)
}

fn waic_period_with(output: &ChainOutput, data: &VoteDataset, cols: &VoteColumns, period: usize) -> Result<WaicResult> {
    if output.n_draws() < 2 {
        return Err(Error::InvalidInput("WAIC needs at least two draws".into()));
    }
    let label = data.period_ids()[period].clone();
    let members: Vec<usize> = (0..cols.keys.len()).filter(|&i| cols.keys[i].1 == period).collect();
    if members.is_empty() {
        warn!("period {label:?} has no observed votes; WAIC set to 0");
        return Ok(WaicResult {
            period: label,
            waic: 0.0,
            lppd: 0.0,
            penalty: 0.0,
        });
    }
    let mut units: Vec<usize> = members.iter().map(|&i| cols.keys[i].0).collect();
    units.sort_unstable();
    units.dedup();
    let slot: HashMap<usize, usize> = units.iter().enumerate().map(|(k, &u)| (u, k)).collect();

    let mut matrix = Vec::with_capacity(output.n_draws());
    for d in 0..output.n_draws() {
        let draw = output.draw(d);
        let mut row = vec![0.0; units.len()];
        for &i in &members {
            let (b, c, y) = cols.votes[i];
            row[slot[&cols.keys[i].0]] += vote_loglik(draw.beta[b], y, &VoteColumns::case(&draw, c)?);
        }
        matrix.push(row);
    }
    let (lppd, penalty) = waic_terms(&matrix);
    Ok(WaicResult {
        period: label,
        waic: -2.0 * (lppd - penalty),
        lppd,
        penalty,
    })
}

/// WAIC for every period, in period order.
pub fn waic_all(output: &ChainOutput, data: &VoteDataset) -> Result<Vec<WaicResult>> {
    let cols = VoteColumns::new(output.layout(), data)?;
    (0..data.n_periods())
        .map(|p| waic_period_with(output, data, &cols, p))
        .collect()
}

pub fn write_waic(results: &[WaicResult], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["period", "waic", "lppd", "penalty"])?;
    for r in results {
        w.write_record([r.period.clone(), r.waic.to_string(), r.lppd.to_string(), r.penalty.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{AcceptanceReport, HyperDraw, RunManifest};
    use crate::votes_io::parse_votes_str;

    fn output_for(data: &VoteDataset, draws: Vec<PosteriorDraw>) -> ChainOutput {
        let mut out = ChainOutput {
            manifest: RunManifest {
                seed: 0,
                chain: 0,
                iterations: 0,
                burnin: 0,
                thin: 1,
                draws: 0,
                config_hash: String::new(),
                acceptance: AcceptanceReport::default(),
                identified: false,
                elapsed_secs: 0.0,
                layout: crate::mcmc::layout_for(data),
            },
            beta: vec![],
            psi: vec![],
            zeta: vec![],
            kappa: vec![],
            hyper: vec![],
        };
        for d in draws {
            out.push(d);
        }
        out
    }

    fn hyper() -> HyperDraw {
        HyperDraw {
            mu: 1.0,
            rho: 0.5,
            tau2: 1.0,
            varsigma: 1.0,
            lambda: 1.0,
        }
    }

    #[test]
    fn even_odds_single_vote() {
        let data = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\n").unwrap();
        let d = PosteriorDraw {
            beta: vec![0.3],
            psi: vec![1.0],
            zeta: vec![1.0],
            kappa: vec![2.0],
            hyper: hyper(),
        };
        let out = output_for(&data, vec![d.clone(), d]);
        let r = waic_period(&out, &data, 0).unwrap();
        assert!((r.waic - 1.386_294_361_119_890_6).abs() < 1e-12);
        assert_eq!(r.penalty, 0.0);
    }

    #[test]
    fn duplicating_draws_keeps_waic() {
        let data = parse_votes_str("unit_id,period,item_id,vote\na,1,x,1\nb,1,x,0\na,1,y,0\nb,1,y,0\n").unwrap();
        let draws: Vec<PosteriorDraw> = (0..7)
            .map(|k| PosteriorDraw {
                beta: vec![0.1 * k as f64, -0.2 * k as f64],
                psi: vec![0.5, -1.0 + 0.1 * k as f64],
                zeta: vec![-2.0, 2.5],
                kappa: vec![1.0 + k as f64, 3.0],
                hyper: hyper(),
            })
            .collect();
        let once = waic_period(&output_for(&data, draws.clone()), &data, 0).unwrap();
        let twice: Vec<PosteriorDraw> = draws.iter().flat_map(|d| [d.clone(), d.clone()]).collect();
        let doubled = waic_period(&output_for(&data, twice), &data, 0).unwrap();
        assert!((once.waic - doubled.waic).abs() < 1e-12);
        assert!(once.penalty > 0.0);
    }

    #[test]
    fn rotation_and_reflection_keep_waic() {
        use rand::{Rng, SeedableRng};
        let data = parse_votes_str(
            "unit_id,period,item_id,vote\na,1,x,1\nb,1,x,0\nc,1,x,1\na,1,y,0\nb,1,y,1\nc,1,y,NA\n",
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pi = std::f64::consts::PI;
        let draws: Vec<PosteriorDraw> = (0..40)
            .map(|_| PosteriorDraw {
                beta: (0..3).map(|_| rng.random_range(-pi..pi)).collect(),
                psi: (0..2).map(|_| rng.random_range(-pi..pi)).collect(),
                zeta: (0..2).map(|_| rng.random_range(-pi..pi)).collect(),
                kappa: (0..2).map(|_| rng.random_range(0.5..20.0)).collect(),
                hyper: hyper(),
            })
            .collect();
        let base = waic_period(&output_for(&data, draws.clone()), &data, 0).unwrap();
        let moved = |f: &dyn Fn(f64) -> f64| -> Vec<PosteriorDraw> {
            draws
                .iter()
                .map(|d| PosteriorDraw {
                    beta: d.beta.iter().map(|&x| f(x)).collect(),
                    psi: d.psi.iter().map(|&x| f(x)).collect(),
                    zeta: d.zeta.iter().map(|&x| f(x)).collect(),
                    ..d.clone()
                })
                .collect()
        };
        let rotated = moved(&|x| crate::circular::wrap_angle(x + 1.3));
        let reflected = moved(&|x| crate::circular::wrap_angle(-x));
        for d in [rotated, reflected] {
            let r = waic_period(&output_for(&data, d), &data, 0).unwrap();
            assert!((r.waic - base.waic).abs() < 1e-10, "{} vs {}", r.waic, base.waic);
        }
    }
}
