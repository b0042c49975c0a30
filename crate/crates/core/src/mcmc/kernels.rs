//! Single-block Markov transitions. Each leaves its full conditional invariant.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::circular::wrap_angle;
use crate::dist::{truncated_normal, von_mises};
use crate::error::{Error, Result};
use crate::link::{case_loglik, case_loglik_and_grad, vote_loglik, CaseParams, Link};
use crate::process::{build_precision, sample_matrix_normal, AuxPath, ProcessHyper};
use crate::votes_io::{HyperPrior, VoteDataset};

use super::state::ModelState;

/// Bracket shrinks after which an elliptical slice update gives up.
pub const MAX_SHRINKS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct EssOutcome {
    pub path: AuxPath,
    pub shrinks: usize,
}

/// Elliptical slice update of one unit's centred auxiliary path.
pub fn ess_update_unit<R: Rng + ?Sized>(
    state: &ModelState,
    unit: usize,
    data: &VoteDataset,
    rng: &mut R,
) -> Result<EssOutcome> {
    let current = state.aux(unit).rows();
    let mu = state.hyper().mu;
    let votes = data.unit_votes(unit);
    let nu = sample_matrix_normal(state.hyper(), current.len(), rng);

    let loglik = |rows: &[[f64; 2]]| -> f64 {
        votes
            .iter()
            .map(|v| {
                let [z1, z2] = rows[v.slot];
                let beta = wrap_angle(z2.atan2(z1 + mu));
                vote_loglik(beta, v.reverse, state.case(v.case))
            })
            .sum()
    };

    let log_y = state.unit_loglik(data, unit) + rng.random::<f64>().ln();
    let mut theta = rng.random_range(0.0..TAU);
    let (mut lo, mut hi) = (theta - TAU, theta);
    let mut proposal = vec![[0.0; 2]; current.len()];
    for shrinks in 0..=MAX_SHRINKS {
        let (s, c) = theta.sin_cos();
        for ((p, z), n) in proposal.iter_mut().zip(current).zip(&nu) {
            *p = [z[0] * c + n[0] * s, z[1] * c + n[1] * s];
        }
        if loglik(&proposal) > log_y {
            return Ok(EssOutcome {
                path: AuxPath::new(proposal),
                shrinks,
            });
        }
        if theta < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        theta = rng.random_range(lo..hi);
    }
    Err(Error::Sampler(format!(
        "elliptical slice bracket for unit {unit} did not close after {MAX_SHRINKS} shrinks"
    )))
}

/// Leapfrog settings for the item-angle HMC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcSettings {
    pub step: f64,
    pub n_leapfrog: usize,
    /// Von Mises momentum concentrations (c₁, c₂).
    pub momentum: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcOutcome {
    pub case: CaseParams,
    pub accepted: bool,
    /// min(1, exp(−ΔH)); zero for a divergent trajectory.
    pub accept_prob: f64,
    pub divergent: bool,
}

/// Kinetic energy K(m) = −c₁ cos m₁ − c₂ cos m₂.
pub fn kinetic(m: [f64; 2], c: [f64; 2]) -> f64 {
    -c[0] * m[0].cos() - c[1] * m[1].cos()
}

/// Integrates `n` leapfrog steps from (q, m). Returns the end point and the
/// log-likelihood there, or `None` if any evaluation is non-finite.
pub fn leapfrog(
    case: &CaseParams,
    votes: &[(f64, bool)],
    q: [f64; 2],
    m: [f64; 2],
    settings: &HmcSettings,
) -> Option<([f64; 2], [f64; 2], f64)> {
    let h = settings.step;
    let c = settings.momentum;
    let eval = |q: [f64; 2]| {
        let (ll, gp, gz) = case_loglik_and_grad(&case.with_angles(q[0], q[1]), votes.iter().copied());
        (ll, [gp, gz])
    };
    let (mut ll, mut g) = eval(q);
    let (mut q, mut m) = (q, m);
    for _ in 0..settings.n_leapfrog {
        for k in 0..2 {
            m[k] += 0.5 * h * g[k];
            q[k] = wrap_angle(q[k] + h * c[k] * m[k].sin());
        }
        (ll, g) = eval(q);
        if !(ll.is_finite() && g[0].is_finite() && g[1].is_finite()) {
            return None;
        }
        for k in 0..2 {
            m[k] += 0.5 * h * g[k];
        }
    }
    Some((q, m, ll))
}

/// One HMC transition of (ψ, ζ) under a flat prior on the torus.
pub fn hmc_transition<R: Rng + ?Sized>(
    case: &CaseParams,
    votes: &[(f64, bool)],
    settings: &HmcSettings,
    rng: &mut R,
) -> HmcOutcome {
    let c = settings.momentum;
    let m0 = [von_mises(rng, 0.0, c[0]), von_mises(rng, 0.0, c[1])];
    let q0 = [case.psi(), case.zeta()];
    let ll0 = case_loglik(case, votes);
    let u: f64 = rng.random();
    let reject = |divergent| HmcOutcome {
        case: *case,
        accepted: false,
        accept_prob: 0.0,
        divergent,
    };
    let Some((q1, m1, ll1)) = leapfrog(case, votes, q0, m0, settings) else {
        return reject(true);
    };
    let log_ratio = (ll1 - kinetic(m1, c)) - (ll0 - kinetic(m0, c));
    if !log_ratio.is_finite() {
        return reject(true);
    }
    let accept_prob = log_ratio.exp().min(1.0);
    if u < accept_prob {
        HmcOutcome {
            case: case.with_angles(q1[0], q1[1]),
            accepted: true,
            accept_prob,
            divergent: false,
        }
    } else {
        HmcOutcome {
            accept_prob,
            ..reject(false)
        }
    }
}

/// HMC update of one case's angles given the current ideal points.
pub fn hmc_update_case<R: Rng + ?Sized>(
    state: &ModelState,
    case: usize,
    data: &VoteDataset,
    settings: &HmcSettings,
    rng: &mut R,
) -> HmcOutcome {
    hmc_transition(state.case(case), &state.case_votes(data, case), settings, rng)
}

/// Random-walk Metropolis step on log κ with an exponential prior of mean λ.
pub fn kappa_transition<R: Rng + ?Sized>(
    case: &CaseParams,
    votes: &[(f64, bool)],
    lambda: f64,
    step: f64,
    rng: &mut R,
) -> (CaseParams, bool) {
    let k0 = case.kappa();
    let e: f64 = StandardNormal.sample(rng);
    let k1 = k0 * (step * e).exp();
    let u: f64 = rng.random();
    if !(k1 > 0.0 && k1.is_finite()) {
        return (*case, false);
    }
    if k1 == k0 {
        return (*case, true);
    }
    let proposal = case.with_link(Link::new(k1));
    let log_ratio = case_loglik(&proposal, votes) - case_loglik(case, votes) - (k1 - k0) / lambda + (k1 / k0).ln();
    if u.ln() < log_ratio {
        (proposal, true)
    } else {
        (*case, false)
    }
}

pub fn mh_update_kappa<R: Rng + ?Sized>(
    state: &ModelState,
    case: usize,
    data: &VoteDataset,
    step: f64,
    rng: &mut R,
) -> (CaseParams, bool) {
    kappa_transition(state.case(case), &state.case_votes(data, case), state.lambda(), step, rng)
}

/// Log prior of (μ, τ², ς) plus the Jacobian of the log transform.
fn hyper_log_prior(prior: &HyperPrior, mu: f64, tau2: f64, varsigma: f64) -> f64 {
    let (shape, rate) = prior.varsigma_shape_rate();
    -0.5 * ((mu - prior.mu_mean) / prior.mu_sd).powi(2) - tau2 / prior.tau2_mean + (shape - 1.0) * varsigma.ln()
        - rate * varsigma
        + mu.ln()
        + tau2.ln()
        + varsigma.ln()
}

/// Log density of all paths at new (μ, τ², ς), holding the uncentred `v` fixed.
fn paths_log_density(paths: &[AuxPath], shift: f64, rho: f64, vars: [f64; 2]) -> f64 {
    let ln_det = (1.0 - rho * rho).ln();
    let mut total = 0.0;
    for p in paths {
        let rows = p.rows();
        let t = rows.len();
        let omega = build_precision(rho, t);
        let q1 = omega.quad_form(|i| rows[i][0] + shift);
        let q2 = omega.quad_form(|i| rows[i][1]);
        total += -0.5 * (q1 / vars[0] + q2 / vars[1]) + ln_det - 0.5 * t as f64 * (TAU * TAU * vars[0] * vars[1]).ln();
    }
    total
}

/// Joint log-scale random-walk proposal for (μ, τ², ς).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperProposal {
    chol: [[f64; 3]; 3],
    log_scale: f64,
}

impl HyperProposal {
    /// Isotropic proposal with SD `step` on each log coordinate.
    pub fn isotropic(step: f64) -> Self {
        let mut chol = [[0.0; 3]; 3];
        for (i, row) in chol.iter_mut().enumerate() {
            row[i] = step;
        }
        HyperProposal { chol, log_scale: 0.0 }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub(crate) fn adapt_scale(&mut self, delta: f64) {
        self.log_scale = (self.log_scale + delta).clamp(-20.0, 5.0);
    }

    /// Replaces the shape with `cov` (scaled by 2.38²/3) and resets the scale
    /// factor to 1. Keeps the old proposal if `cov` is not positive definite.
    pub(crate) fn set_covariance(&mut self, cov: [[f64; 3]; 3]) {
        let mut c = cov;
        for (i, row) in c.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= 2.38 * 2.38 / 3.0;
            }
            row[i] += 1e-10;
        }
        if let Some(l) = cholesky3(c) {
            self.chol = l;
            self.log_scale = 0.0;
        }
    }

    fn propose<R: Rng + ?Sized>(&self, x: [f64; 3], rng: &mut R) -> [f64; 3] {
        let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let s = self.scale();
        std::array::from_fn(|i| x[i] + s * (0..=i).map(|j| self.chol[i][j] * z[j]).sum::<f64>())
    }
}

fn cholesky3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Metropolis update of (μ, τ², ς) given the uncentred paths and ρ.
/// Returns the proposed-or-kept values and whether the move was accepted.
pub fn mh_update_hyper<R: Rng + ?Sized>(
    state: &ModelState,
    prior: &HyperPrior,
    proposal: &HyperProposal,
    rng: &mut R,
) -> (ProcessHyper, bool) {
    let h0 = *state.hyper();
    let x0 = [h0.mu.ln(), h0.tau2.ln(), h0.varsigma.ln()];
    let x1 = proposal.propose(x0, rng);
    let u: f64 = rng.random();
    let [mu, tau2, varsigma] = x1.map(f64::exp);
    let h1 = ProcessHyper { mu, tau2, varsigma, ..h0 };
    if h1.validate().is_err() {
        return (h0, false);
    }
    let paths = state.aux_paths();
    let target = |h: &ProcessHyper| {
        paths_log_density(paths, h0.mu - h.mu, h.rho, h.innovation_vars())
            + hyper_log_prior(prior, h.mu, h.tau2, h.varsigma)
    };
    let log_ratio = target(&h1) - target(&h0);
    if u.ln() < log_ratio {
        (h1, true)
    } else {
        (h0, false)
    }
}

/// Statistics of the paths that determine the conditional of ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoStats {
    /// Σ x_t² / σ² over t < T.
    pub lag_sq: f64,
    /// Σ x_t x_{t+1} / σ².
    pub cross: f64,
    /// Σ x_1² / σ² over initial rows.
    pub initial_sq: f64,
    pub n_paths: usize,
}

pub fn rho_stats(paths: &[AuxPath], hyper: &ProcessHyper) -> RhoStats {
    let vars = hyper.innovation_vars();
    let mut s = RhoStats {
        lag_sq: 0.0,
        cross: 0.0,
        initial_sq: 0.0,
        n_paths: 0,
    };
    for p in paths {
        let rows = p.rows();
        if rows.is_empty() {
            continue;
        }
        s.n_paths += 1;
        for (c, var) in vars.iter().enumerate() {
            s.initial_sq += rows[0][c] * rows[0][c] / var;
            for w in rows.windows(2) {
                s.lag_sq += w[0][c] * w[0][c] / var;
                s.cross += w[0][c] * w[1][c] / var;
            }
        }
    }
    s
}

/// Independence Metropolis–Hastings update of ρ.
///
/// The prior and the AR transition terms form a truncated normal in ρ. The
/// stationary initial-row factor w(ρ) is expanded to second order at that
/// normal's mode and folded into the proposal; the exact w enters the
/// acceptance ratio. Without multi-period paths the base normal is the prior.
pub fn mh_update_rho<R: Rng + ?Sized>(state: &ModelState, prior: &HyperPrior, rng: &mut R) -> (f64, bool) {
    let s = rho_stats(state.aux_paths(), state.hyper());
    let n = s.n_paths as f64;
    let log_w = |r: f64| n * (1.0 - r * r).ln() + 0.5 * r * r * s.initial_sq;

    let base_prec = 1.0 / (prior.rho_sd * prior.rho_sd) + s.lag_sq;
    let base_mean = (prior.rho_mean / (prior.rho_sd * prior.rho_sd) + s.cross) / base_prec;
    let m = base_mean.clamp(1e-3, 1.0 - 1e-3);
    let one_minus = 1.0 - m * m;
    let slope = -2.0 * n * m / one_minus + m * s.initial_sq;
    let curv = (-2.0 * n * (1.0 + m * m) / (one_minus * one_minus) + s.initial_sq).min(0.5 * base_prec);
    let prec = base_prec - curv;
    let mean = base_mean + slope / prec;
    let quad = |r: f64| slope * (r - m) + 0.5 * curv * (r - m) * (r - m);

    let r1 = truncated_normal(rng, mean, prec.sqrt().recip(), 0.0, 1.0);
    let u: f64 = rng.random();
    let r0 = state.hyper().rho;
    if !(r1 > 0.0 && r1 < 1.0) {
        return (r0, false);
    }
    if u.ln() < (log_w(r1) - quad(r1)) - (log_w(r0) - quad(r0)) {
        (r1, true)
    } else {
        (r0, false)
    }
}

/// Draws λ from its conditional: 1/λ ~ Gamma(1 + n, rate 1/m + Σκ).
pub fn draw_lambda<R: Rng + ?Sized>(sum_kappa: f64, n_cases: usize, inv_lambda_mean: f64, rng: &mut R) -> f64 {
    let shape = 1.0 + n_cases as f64;
    let rate = 1.0 / inv_lambda_mean + sum_kappa;
    let eta = Gamma::new(shape, 1.0 / rate).expect("positive shape and rate").sample(rng);
    1.0 / eta
}

pub fn gibbs_update_lambda<R: Rng + ?Sized>(state: &ModelState, prior: &HyperPrior, rng: &mut R) -> f64 {
    let sum: f64 = state.cases().iter().map(|c| c.kappa()).sum();
    draw_lambda(sum, state.cases().len(), prior.inv_lambda_mean, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::stats::{ks_statistic, rayleigh_test};
    use crate::process::simulate_aux_path;
    use crate::votes_io::{parse_votes_str, VoteRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Exp as ExpLaw, Gamma as GammaLaw};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn state_for(data: &VoteDataset, seed: u64) -> ModelState {
        ModelState::initial(data, &HyperPrior::default(), &mut rng(seed)).unwrap()
    }

    /// One unit serving `t` periods, with one item per period but no votes.
    fn silent_design(t: usize) -> VoteDataset {
        let mut rows: Vec<VoteRecord> = (0..t)
            .map(|p| VoteRecord {
                unit: "a".into(),
                period: p.to_string(),
                item: "x".into(),
                vote: None,
            })
            .collect();
        rows.sort_by(|a, b| a.period.cmp(&b.period));
        VoteDataset::from_records(&rows).unwrap()
    }

    #[test]
    fn ess_without_votes_accepts_first_proposal() {
        let data = silent_design(3);
        let state = state_for(&data, 1);
        for s in 0..50 {
            let out = ess_update_unit(&state, 0, &data, &mut rng(s)).unwrap();
            assert_eq!(out.shrinks, 0);
            assert_ne!(out.path, *state.aux(0));
        }
    }

    #[test]
    fn ess_prior_chain_matches_stationary_covariance() {
        let data = silent_design(3);
        let mut state = state_for(&data, 2);
        let h = *state.hyper();
        let mut r = rng(3);
        let n = 40_000;
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..n {
            let out = ess_update_unit(&state, 0, &data, &mut r).unwrap();
            state.set_aux(0, out.path);
            let col: Vec<f64> = state.aux(0).column(0).collect();
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += col[i] * col[j] / n as f64;
                }
            }
        }
        let stationary = h.tau2 / (1.0 - h.rho * h.rho);
        for i in 0..3 {
            for j in 0..3 {
                let expected = stationary * h.rho.powi((i as i32 - j as i32).abs());
                // Successive ESS states are correlated; allow for that.
                assert!((acc[i][j] - expected).abs() < 0.08 * stationary, "{i},{j}: {} vs {expected}", acc[i][j]);
            }
        }
    }

    #[test]
    fn ess_improves_a_bad_start() {
        let text = "unit_id,period,item_id,vote\na,1,x,1\nb,1,x,0\na,1,y,1\nb,1,y,0\na,2,x,1\nb,2,x,0\n";
        let data = parse_votes_str(text).unwrap();
        let mut state = state_for(&data, 4);
        for c in 0..data.n_cases() {
            state.set_case(c, CaseParams::new(1.5, -1.5, 20.0).unwrap());
        }
        let mut r = rng(5);
        let mut lls = Vec::new();
        for _ in 0..2000 {
            for u in 0..2 {
                let out = ess_update_unit(&state, u, &data, &mut r).unwrap();
                state.set_aux(u, out.path);
            }
            lls.push(state.loglik(&data));
        }
        let late: f64 = lls[1000..].iter().sum::<f64>() / 1000.0;
        // Unit a should sit near ψ and b near ζ: each vote then has θ near 1.
        assert!(late > -1.5, "mean log-likelihood {late}");
    }

    #[test]
    fn zero_leapfrog_steps_is_identity() {
        let case = CaseParams::new(0.3, -1.0, 4.0).unwrap();
        let votes = [(0.1, true), (2.0, false)];
        let s = HmcSettings {
            step: 0.3,
            n_leapfrog: 0,
            momentum: [1.0, 1.0],
        };
        for seed in 0..20 {
            let out = hmc_transition(&case, &votes, &s, &mut rng(seed));
            assert_eq!(out.case, case);
            assert_eq!(out.accept_prob, 1.0);
            assert!(out.accepted);
        }
    }

    #[test]
    fn hmc_without_votes_is_uniform_on_torus() {
        let mut case = CaseParams::new(0.5, 0.5, 2.0).unwrap();
        let s = HmcSettings {
            step: 0.5,
            n_leapfrog: 10,
            momentum: [1.0, 1.0],
        };
        let mut r = rng(6);
        let (mut psi, mut zeta) = (Vec::new(), Vec::new());
        for _ in 0..10_000 {
            case = hmc_transition(&case, &[], &s, &mut r).case;
            psi.push(case.psi());
            zeta.push(case.zeta());
        }
        assert!(rayleigh_test(&psi) > 0.01);
        assert!(rayleigh_test(&zeta) > 0.01);
        let unif = |x: f64| (x + std::f64::consts::PI) / TAU;
        assert!(ks_statistic(&psi, unif) < 0.03);
    }

    #[test]
    fn leapfrog_energy_error_is_second_order() {
        let case = CaseParams::new(0.4, -0.9, 6.0).unwrap();
        let votes = [(0.2, true), (0.5, true), (-1.0, false), (2.5, false), (0.0, true)];
        let c = [1.0, 1.0];
        let m0 = [0.3, -0.6];
        let energy = |q: [f64; 2], m: [f64; 2]| -case_loglik(&case.with_angles(q[0], q[1]), &votes) + kinetic(m, c);
        let q0 = [case.psi(), case.zeta()];
        let h0 = energy(q0, m0);
        let err = |h: f64| {
            let s = HmcSettings {
                step: h,
                n_leapfrog: (0.4 / h).round() as usize,
                momentum: c,
            };
            let (q, m, _) = leapfrog(&case, &votes, q0, m0, &s).unwrap();
            (energy(q, m) - h0).abs()
        };
        let (e1, e2, e3) = (err(0.04), err(0.02), err(0.01));
        assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "{e1} {e2} {e3}");
    }

    #[test]
    fn leapfrog_is_reversible() {
        let case = CaseParams::new(1.0, 2.0, 3.0).unwrap();
        let votes = [(0.9, true), (-2.0, false), (2.9, true)];
        let s = HmcSettings {
            step: 0.1,
            n_leapfrog: 15,
            momentum: [1.3, 0.7],
        };
        let (q, m, _) = leapfrog(&case, &votes, [case.psi(), case.zeta()], [0.4, -1.1], &s).unwrap();
        let (q2, m2, _) = leapfrog(&case, &votes, q, [-m[0], -m[1]], &s).unwrap();
        assert!(crate::link::geodesic_dist(q2[0], case.psi()) < 1e-10);
        assert!(crate::link::geodesic_dist(q2[1], case.zeta()) < 1e-10);
        assert!((m2[0] + 0.4).abs() < 1e-10 && (m2[1] - 1.1).abs() < 1e-10);
    }

    #[test]
    fn zero_kappa_step_always_accepts() {
        let case = CaseParams::new(0.1, 0.2, 3.0).unwrap();
        for seed in 0..20 {
            let (c, acc) = kappa_transition(&case, &[(0.0, true)], 1.0, 0.0, &mut rng(seed));
            assert!(acc);
            assert_eq!(c.kappa(), 3.0);
        }
    }

    #[test]
    fn kappa_without_votes_recovers_exponential_prior() {
        let lambda = 2.5;
        let mut case = CaseParams::new(0.1, 0.2, 1.0).unwrap();
        let mut r = rng(7);
        let mut draws = Vec::new();
        for i in 0..100_000 {
            case = kappa_transition(&case, &[], lambda, 1.0, &mut r).0;
            if i % 10 == 0 {
                draws.push(case.kappa());
            }
        }
        let law = ExpLaw::new(1.0 / lambda).unwrap();
        let ks = ks_statistic(&draws, |x| law.cdf(x));
        assert!(ks < 0.02, "ks = {ks}");
    }

    #[test]
    fn lambda_draws_match_gamma_conditional() {
        let mut r = rng(8);
        let draws: Vec<f64> = (0..10_000).map(|_| 1.0 / draw_lambda(6.0, 3, 25.0, &mut r)).collect();
        let law = GammaLaw::new(4.0, 0.04 + 6.0).unwrap();
        assert!(ks_statistic(&draws, |x| law.cdf(x)) < 0.02);
        let prior: Vec<f64> = (0..10_000).map(|_| 1.0 / draw_lambda(0.0, 0, 25.0, &mut r)).collect();
        let law = ExpLaw::new(1.0 / 25.0).unwrap();
        assert!(ks_statistic(&prior, |x| law.cdf(x)) < 0.02);
    }

    #[test]
    fn hyper_proposal_with_tiny_scale_always_accepts() {
        let data = silent_design(4);
        let state = state_for(&data, 9);
        let mut prop = HyperProposal::isotropic(1e-12);
        prop.adapt_scale(-5.0);
        let mut r = rng(10);
        let accepted = (0..500).filter(|_| mh_update_hyper(&state, &HyperPrior::default(), &prop, &mut r).1).count();
        assert!(accepted >= 499, "{accepted}");
    }

    #[test]
    fn paths_density_matches_direct_evaluation() {
        let h = ProcessHyper::new(2.0, 0.7, 0.6, 1.3).unwrap();
        let mut r = rng(11);
        let paths: Vec<AuxPath> = (1..5).map(|t| simulate_aux_path(&h, t, &mut r)).collect();
        let direct: f64 = paths.iter().map(|p| crate::process::aux_log_density(p, &h)).sum();
        let fast = paths_log_density(&paths, 0.0, h.rho, h.innovation_vars());
        assert!((direct - fast).abs() < 1e-10);
    }

    #[test]
    fn rho_conditional_concentrates_near_truth() {
        let h = ProcessHyper::new(3.0, 0.9, 0.5, 1.0).unwrap();
        let mut r = rng(12);
        let aux: Vec<AuxPath> = (0..50).map(|_| simulate_aux_path(&h, 30, &mut r)).collect();
        let state = ModelState::new(aux, vec![], h, 1.0).unwrap();
        let prior = HyperPrior {
            rho_sd: 1.0,
            rho_mean: 0.5,
            ..HyperPrior::default()
        };
        let mut current = state.clone();
        let (mut sum, mut acc) = (0.0, 0);
        let n = 4000;
        for _ in 0..n {
            let (rho, a) = mh_update_rho(&current, &prior, &mut r);
            current.set_rho(rho);
            sum += rho;
            acc += a as usize;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.9).abs() < 0.02, "mean {mean}");
        assert!(acc as f64 / n as f64 > 0.9, "acceptance {}", acc as f64 / n as f64);
    }

    #[test]
    fn rho_without_multi_period_paths_targets_prior_times_stationary_terms() {
        // With single rows only, the proposal is the prior and every path
        // contributes the (1 − ρ²) stationary factor.
        let h = ProcessHyper::new(3.0, 0.9, 0.5, 1.0).unwrap();
        let state = ModelState::new(vec![AuxPath::new(vec![[0.0, 0.0]])], vec![], h, 1.0).unwrap();
        let s = rho_stats(state.aux_paths(), state.hyper());
        assert_eq!(s.lag_sq, 0.0);
        assert_eq!(s.cross, 0.0);
        let mut r = rng(13);
        let mut cur = state;
        let draws: Vec<f64> = (0..20_000)
            .map(|_| {
                let (rho, _) = mh_update_rho(&cur, &HyperPrior::default(), &mut r);
                cur.set_rho(rho);
                rho
            })
            .collect();
        // Target ∝ N(0.9, 0.03²) · (1 − ρ²) on (0, 1); compare with quadrature.
        let dens = |x: f64| (-0.5 * ((x - 0.9) / 0.03f64).powi(2)).exp() * (1.0 - x * x);
        let rule = crate::quadrature::GaussLegendre::new(20);
        let z = rule.integrate(dens, 0.0, 1.0, 50);
        let cdf = |x: f64| rule.integrate(dens, 0.0, x.clamp(0.0, 1.0), 10) / z;
        let thinned: Vec<f64> = draws.iter().step_by(2).copied().collect();
        assert!(ks_statistic(&thinned, cdf) < 0.03);
    }
}
