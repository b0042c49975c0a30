//! Samplers for the few laws `rand_distr` does not provide.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::circular::wrap_angle;

/// Draws from N(mean, sd²) restricted to `(lo, hi)`.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(sd > 0.0 && lo < hi);
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    // Work in the lower half so the CDF values keep their relative precision.
    let (a, b, flip) = if a >= 0.0 { (-b, -a, true) } else { (a, b, false) };
    let z = standard_truncated(rng, a, b);
    let z = if flip { -z } else { z };
    (mean + sd * z).clamp(lo, hi)
}

/// Standard normal restricted to `(a, b)` with `a < 0`.
fn standard_truncated<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    if b < -8.0 {
        // Deep lower tail: exponential rejection on the reflected interval.
        let (l, u) = (-b, -a);
        let rate = 0.5 * (l + (l * l + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let x = l + e / rate;
            if x >= u {
                continue;
            }
            let accept = (-0.5 * (x - rate).powi(2)).exp();
            if rng.random::<f64>() < accept {
                return -x;
            }
        }
    }
    if b - a > 1.0 && b > 0.0 {
        // Interval covers a decent chunk of the bulk: plain rejection.
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z > a && z < b {
                return z;
            }
        }
    }
    let unit = Normal::standard();
    let pa = unit.cdf(a);
    let pb = unit.cdf(b);
    let u = pa + (pb - pa) * rng.random::<f64>();
    unit.inverse_cdf(u).clamp(a, b)
}

/// Draws from a von Mises law with mean `mu` and concentration `kappa`
/// (Best and Fisher's wrapped-Cauchy rejection scheme).
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    if kappa > 1e6 {
        let z: f64 = StandardNormal.sample(rng);
        return wrap_angle(mu + z / kappa.sqrt());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            let theta = if u3 > 0.5 { theta } else { -theta };
            return wrap_angle(mu + theta);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::stats::ks_statistic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truncated_cdf(x: f64, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
        let n = Normal::new(mean, sd).unwrap();
        ((n.cdf(x) - n.cdf(lo)) / (n.cdf(hi) - n.cdf(lo))).clamp(0.0, 1.0)
    }

    #[test]
    fn truncated_normal_matches_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(mean, sd, lo, hi) in &[
            (0.9, 0.03, 0.0, 1.0),
            (3.073, 1.588, 0.0, f64::INFINITY),
            (0.0, 1.4, 0.0, f64::INFINITY),
            (1.02, 0.01, 0.0, 1.0),
            (0.2, 0.5, 0.0, 1.0),
        ] {
            let draws: Vec<f64> = (0..20_000).map(|_| truncated_normal(&mut rng, mean, sd, lo, hi)).collect();
            assert!(draws.iter().all(|&x| x >= lo && x <= hi));
            let ks = ks_statistic(&draws, |x| truncated_cdf(x, mean, sd, lo, hi));
            assert!(ks < 0.015, "({mean}, {sd}) ks = {ks}");
        }
    }

    #[test]
    fn truncated_normal_far_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = truncated_normal(&mut rng, 1.5, 0.01, 0.0, 1.0);
            assert!(x > 0.9 && x <= 1.0);
        }
    }

    #[test]
    fn von_mises_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kappa in [0.5, 1.0, 8.0, 200.0] {
            let draws: Vec<f64> = (0..40_000).map(|_| von_mises(&mut rng, 1.0, kappa)).collect();
            let (mean, r) = crate::circular::mean_resultant(&draws);
            assert!(crate::link::geodesic_dist(mean, 1.0) < 0.05, "kappa {kappa}: mean {mean}");
            let expected = crate::special::bessel_ratio(kappa);
            assert!((r - expected).abs() < 0.01, "kappa {kappa}: R {r} vs {expected}");
        }
    }
}
