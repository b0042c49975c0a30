//! Circular spatial-voting likelihood.
//!
//! A unit at angle β votes to reverse item (ψ, ζ) with probability
//! `G_κ(d(ζ, β)² − d(ψ, β)²)`, where `d` is the geodesic distance on the unit
//! circle and `G_κ` is the CDF of a symmetric Beta(κ, κ) law stretched onto
//! `[−π², π²]`.

use std::f64::consts::PI;

use crate::circular::wrap_angle;
use crate::error::{Error, Result};
use crate::special::{beta_reg_with, ln_beta};

/// Half-width of the link support, π².
pub const LINK_HALF_WIDTH: f64 = PI * PI;

/// Vote probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-12;

const LN_TWO_PI_SQ: f64 = 2.982_606_952_258_745_7; // ln(2π²)

/// Smallest arc between two angles, in `[0, π]`.
#[inline]
pub fn geodesic_dist(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Derivative of `geodesic_dist(x, b)²` with respect to `x`.
///
/// At the antipode the distance is maximal and non-smooth; the derivative is
/// taken as 0 there.
#[inline]
pub fn sq_dist_grad(x: f64, b: f64) -> f64 {
    let d = wrap_angle(x - b);
    if d == -PI {
        0.0
    } else {
        2.0 * d
    }
}

/// The link distribution for one precision κ, with `ln B(κ, κ)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    kappa: f64,
    ln_beta: f64,
}

impl Link {
    pub fn new(kappa: f64) -> Self {
        Link {
            kappa,
            ln_beta: ln_beta(kappa, kappa),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `G_κ(z)`; `z` is clamped to the support.
    #[inline]
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= -LINK_HALF_WIDTH {
            return 0.0;
        }
        if z >= LINK_HALF_WIDTH {
            return 1.0;
        }
        let x = (LINK_HALF_WIDTH + z) / (2.0 * LINK_HALF_WIDTH);
        beta_reg_with(self.kappa, self.kappa, x, self.ln_beta)
    }

    /// `g_κ(z)`, zero outside the support.
    #[inline]
    pub fn density(&self, z: f64) -> f64 {
        if !(-LINK_HALF_WIDTH..=LINK_HALF_WIDTH).contains(&z) {
            return 0.0;
        }
        self.ln_density(z).exp()
    }

    #[inline]
    fn ln_density(&self, z: f64) -> f64 {
        let lo = (LINK_HALF_WIDTH + z) / (2.0 * LINK_HALF_WIDTH);
        let hi = (LINK_HALF_WIDTH - z) / (2.0 * LINK_HALF_WIDTH);
        if self.kappa == 1.0 {
            return -LN_TWO_PI_SQ;
        }
        (self.kappa - 1.0) * (lo.ln() + hi.ln()) - self.ln_beta - LN_TWO_PI_SQ
    }

    /// Log-probability of one vote given the utility gap `e`, and its
    /// derivative with respect to `e`.
    #[inline]
    fn vote_term(&self, e: f64, reverse: bool) -> (f64, f64) {
        let (p, sign) = if reverse {
            (self.cdf(e), 1.0)
        } else {
            (self.cdf(-e), -1.0)
        };
        if p <= PROB_EPS {
            (PROB_EPS.ln(), 0.0)
        } else if p >= 1.0 - PROB_EPS {
            ((1.0 - PROB_EPS).ln(), 0.0)
        } else {
            (p.ln(), sign * self.density(e) / p)
        }
    }
}

/// `g_κ(z)` for a one-off evaluation.
pub fn link_density(z: f64, kappa: f64) -> f64 {
    Link::new(kappa).density(z)
}

/// `G_κ(z)` for a one-off evaluation.
pub fn link_cdf(z: f64, kappa: f64) -> f64 {
    Link::new(kappa).cdf(z)
}

/// Reverse/affirm positions and link precision of one item in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams {
    psi: f64,
    zeta: f64,
    link: Link,
}

impl CaseParams {
    /// Angles are wrapped to `[−π, π)`; κ must be positive and finite.
    pub fn new(psi: f64, zeta: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("link precision must be positive, got {kappa}")));
        }
        if !(psi.is_finite() && zeta.is_finite()) {
            return Err(Error::NonFinite(format!("item angles ({psi}, {zeta})")));
        }
        Ok(CaseParams {
            psi: wrap_angle(psi),
            zeta: wrap_angle(zeta),
            link: Link::new(kappa),
        })
    }

    /// Reverse position ψ.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Affirm position ζ.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn kappa(&self) -> f64 {
        self.link.kappa
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub(crate) fn with_angles(&self, psi: f64, zeta: f64) -> Self {
        CaseParams {
            psi: wrap_angle(psi),
            zeta: wrap_angle(zeta),
            link: self.link,
        }
    }

    pub(crate) fn with_link(&self, link: Link) -> Self {
        CaseParams { link, ..*self }
    }

    /// Utility gap `d(ζ, β)² − d(ψ, β)²`.
    #[inline]
    pub fn utility_gap(&self, beta: f64) -> f64 {
        let dz = geodesic_dist(self.zeta, beta);
        let dp = geodesic_dist(self.psi, beta);
        dz * dz - dp * dp
    }
}

/// Probability that a unit at `beta` votes to reverse.
pub fn vote_prob(beta: f64, case: &CaseParams) -> f64 {
    case.link.cdf(case.utility_gap(beta))
}

/// Log-probability of a single vote, clamped as in [`case_loglik`].
#[inline]
pub fn vote_loglik(beta: f64, reverse: bool, case: &CaseParams) -> f64 {
    case.link.vote_term(case.utility_gap(beta), reverse).0
}

/// Bernoulli log-likelihood of the votes cast on one item.
pub fn case_loglik(case: &CaseParams, votes: &[(f64, bool)]) -> f64 {
    votes.iter().map(|&(b, y)| vote_loglik(b, y, case)).sum()
}

/// Gradient of [`case_loglik`] with respect to (ψ, ζ).
pub fn case_loglik_grad(case: &CaseParams, votes: &[(f64, bool)]) -> (f64, f64) {
    let (_, gp, gz) = case_loglik_and_grad(case, votes.iter().copied());
    (gp, gz)
}

/// Log-likelihood and its (ψ, ζ) gradient in one pass.
pub fn case_loglik_and_grad(
    case: &CaseParams,
    votes: impl IntoIterator<Item = (f64, bool)>,
) -> (f64, f64, f64) {
    let mut ll = 0.0;
    let mut gp = 0.0;
    let mut gz = 0.0;
    for (beta, y) in votes {
        let (lp, de) = case.link.vote_term(case.utility_gap(beta), y);
        ll += lp;
        if de != 0.0 {
            gp -= de * sq_dist_grad(case.psi, beta);
            gz += de * sq_dist_grad(case.zeta, beta);
        }
    }
    (ll, gp, gz)
}
