use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{inv_bessel_ratio, ln_bessel_i0};

/// Concentration ceiling. The mixture likelihood is unbounded as one
/// component shrinks onto a few nearly equal angles; a fit with a component
/// at this ceiling is reported as degenerate.
pub const MAX_CONCENTRATION: f64 = 1e5;
pub const EM_RESTARTS: usize = 10;
pub const EM_TOL: f64 = 1e-8;
const EM_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmMixture {
    pub means: Vec<f64>,
    pub concentrations: Vec<f64>,
    pub weights: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    /// Some component collapsed to the concentration ceiling.
    pub degenerate: bool,
}

impl VmMixture {
    fn new(means: Vec<f64>, concentrations: Vec<f64>, weights: Vec<f64>, loglik: f64, iterations: usize) -> Self {
        let degenerate = concentrations.iter().any(|&k| k >= MAX_CONCENTRATION);
        VmMixture {
            means,
            concentrations,
            weights,
            loglik,
            iterations,
            degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    pub means: Vec<f64>,
    pub concentrations: Vec<f64>,
    pub weights: Vec<f64>,
    /// Per input angle, the posterior probability of each component.
    pub assignments: Vec<Vec<f64>>,
    /// (K, BIC) for every K fitted; no BIC when every fit was degenerate.
    pub bic: Vec<(usize, Option<f64>)>,
}

/// Log-likelihood and responsibilities of the mixture at its parameters.
fn e_step(angles: &[f64], means: &[f64], kappas: &[f64], weights: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let k = means.len();
    let offset: Vec<f64> = (0..k)
        .map(|c| weights[c].ln() - (2.0 * PI).ln() - ln_bessel_i0(kappas[c]))
        .collect();
    let mut total = 0.0;
    let mut resp = Vec::with_capacity(angles.len());
    for &x in angles {
        let lp: Vec<f64> = (0..k)
            .map(|c| offset[c] + kappas[c] * (x - means[c]).cos())
            .collect();
        let top = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = lp.iter().map(|v| (v - top).exp()).sum();
        total += top + s.ln();
        resp.push(lp.iter().map(|v| (v - top).exp() / s).collect());
    }
    (total, resp)
}

fn em_run(angles: &[f64], init_means: Vec<f64>) -> Result<VmMixture> {
    let n = angles.len();
    let k = init_means.len();
    let mut means = init_means;
    let mut kappas = vec![1.0; k];
    let mut weights = vec![1.0 / k as f64; k];
    let (mut ll, mut resp) = e_step(angles, &means, &kappas, &weights);
    for it in 1..=EM_MAX_ITER {
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            if nk < 1e-12 {
                continue;
            }
            let (mut s, mut co) = (0.0, 0.0);
            for (x, r) in angles.iter().zip(&resp) {
                s += r[c] * x.sin();
                co += r[c] * x.cos();
            }
            weights[c] = nk / n as f64;
            means[c] = s.atan2(co);
            let rbar = (s.hypot(co) / nk).min(1.0);
            kappas[c] = inv_bessel_ratio(rbar).clamp(0.0, MAX_CONCENTRATION);
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        let (next, r) = e_step(angles, &means, &kappas, &weights);
        if next < ll - 1e-9 * (1.0 + ll.abs()) {
            return Err(Error::Sampler(format!(
                "EM log-likelihood decreased from {ll} to {next} at iteration {it}"
            )));
        }
        let gain = next - ll;
        ll = next;
        resp = r;
        if gain < EM_TOL {
            return Ok(VmMixture::new(means, kappas, weights, ll, it));
        }
    }
    warn!("von Mises EM stopped after {EM_MAX_ITER} iterations without converging");
    Ok(VmMixture::new(means, kappas, weights, ll, EM_MAX_ITER))
}

/// Fits a K-component von Mises mixture by EM, keeping the best of
/// [`EM_RESTARTS`] starts seeded at distinct random data points. Degenerate
/// fits are returned only when every start degenerates.
pub fn vm_mixture_fit<R: Rng + ?Sized>(angles: &[f64], k: usize, rng: &mut R) -> Result<VmMixture> {
    if k == 0 || k > angles.len() {
        return Err(Error::InvalidInput(format!(
            "cannot fit {k} components to {} angles",
            angles.len()
        )));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("mixture input angle".into()));
    }
    let starts: Vec<Vec<f64>> = (0..EM_RESTARTS)
        .map(|_| {
            rand::seq::index::sample(rng, angles.len(), k)
                .into_iter()
                .map(|i| angles[i])
                .collect()
        })
        .collect();
    let fits = starts
        .into_iter()
        .map(|s| em_run(angles, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(fits
        .into_iter()
        .reduce(|a, b| {
            let better = (a.degenerate && !b.degenerate) || (a.degenerate == b.degenerate && b.loglik > a.loglik);
            if better {
                b
            } else {
                a
            }
        })
        .expect("at least one restart"))
}

pub fn bic(loglik: f64, k: usize, n: usize) -> f64 {
    -2.0 * loglik + (3 * k - 1) as f64 * (n as f64).ln()
}

/// Fits K = kmin..=kmax components and keeps the K with the lowest BIC.
/// `kmax` is lowered to the sample size when there are fewer angles. A K
/// whose fits all degenerate is not scored.
pub fn bic_select<R: Rng + ?Sized>(angles: &[f64], kmin: usize, kmax: usize, rng: &mut R) -> Result<ClusterResult> {
    let n = angles.len();
    if kmin == 0 || kmin > kmax {
        return Err(Error::InvalidInput(format!("invalid component range {kmin}..={kmax}")));
    }
    if n < kmin {
        return Err(Error::InvalidInput(format!("{n} angles cannot support {kmin} components")));
    }
    let kmax = if n < kmax {
        warn!("only {n} angles; fitting at most {n} components instead of {kmax}");
        n
    } else {
        kmax
    };
    let seeds: Vec<u64> = (kmin..=kmax).map(|_| rng.random()).collect();
    let fits = (kmin..=kmax)
        .zip(seeds)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, seed)| {
            let mut r = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            vm_mixture_fit(angles, k, &mut r).map(|f| (k, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(usize, Option<f64>)> = fits
        .iter()
        .map(|(k, f)| (*k, (!f.degenerate).then(|| bic(f.loglik, *k, n))))
        .collect();
    for (k, s) in &scores {
        if s.is_none() {
            warn!("every {k}-component fit collapsed onto a point; K={k} not scored");
        }
    }
    let best = (0..fits.len())
        .filter_map(|i| scores[i].1.map(|b| (i, b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("every mixture fit was degenerate".into()))?;
    let (k, fit) = fits.into_iter().nth(best).expect("index in range");
    let (_, assignments) = e_step(angles, &fit.means, &fit.concentrations, &fit.weights);
    Ok(ClusterResult {
        k,
        means: fit.means,
        concentrations: fit.concentrations,
        weights: fit.weights,
        assignments,
        bic: scores,
    })
}
