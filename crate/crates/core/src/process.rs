//! Projected Gaussian AR(1) prior over ideal-point trajectories.
//!
//! Each unit carries two latent AR(1) series, `v` (mean μ, innovation
//! variance τ²) and `w` (mean 0, innovation variance ςτ²), sharing the
//! autocorrelation ρ. The ideal point is the direction of `(v, w)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circular::wrap_angle;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Hyperparameters of the auxiliary processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessHyper {
    /// Mean of the `v` series (the `w` series has mean 0).
    pub mu: f64,
    pub rho: f64,
    /// Innovation variance of `v`.
    pub tau2: f64,
    /// Ratio of the `w` innovation variance to `tau2`.
    pub varsigma: f64,
}

impl ProcessHyper {
    pub fn new(mu: f64, rho: f64, tau2: f64, varsigma: f64) -> Result<Self> {
        let h = ProcessHyper {
            mu,
            rho,
            tau2,
            varsigma,
        };
        h.validate()?;
        Ok(h)
    }

    /// From innovation standard deviations `tau1` (of `v`) and `tau2` (of `w`).
    pub fn from_sds(mu: f64, rho: f64, tau1: f64, tau2: f64) -> Result<Self> {
        Self::new(mu, rho, tau1 * tau1, (tau2 * tau2) / (tau1 * tau1))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu > 0.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.tau2 > 0.0
            && self.varsigma > 0.0
            && [self.mu, self.tau2, self.varsigma].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "process hyperparameters out of range: {self:?}"
            )))
        }
    }

    /// Innovation variances of the two columns, `[τ², ςτ²]`.
    pub fn innovation_vars(&self) -> [f64; 2] {
        [self.tau2, self.varsigma * self.tau2]
    }
}

/// Centred auxiliary path of one unit: rows `(v_t − μ, w_t)` over its served
/// periods.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxPath {
    z: Vec<[f64; 2]>,
}

impl AuxPath {
    pub fn new(z: Vec<[f64; 2]>) -> Self {
        AuxPath { z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.z
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.z
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.z.iter().map(move |r| r[c])
    }

    /// Ideal-point angle of row `t` given the `v` mean.
    #[inline]
    pub fn beta(&self, t: usize, mu: f64) -> f64 {
        let [z1, z2] = self.z[t];
        angle_of(z1 + mu, z2)
    }

    pub fn betas(&self, mu: f64) -> Vec<f64> {
        (0..self.z.len()).map(|t| self.beta(t, mu)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|r| r[0].is_finite() && r[1].is_finite())
    }
}

#[inline]
fn angle_of(v: f64, w: f64) -> f64 {
    wrap_angle(w.atan2(v))
}

/// Direction of `(v, w)` in `[−π, π)`, with `v` along angle 0.
pub fn atan2_angle(v: f64, w: f64) -> Result<f64> {
    if v == 0.0 && w == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    Ok(angle_of(v, w))
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: impl Fn(usize) -> f64) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 0..n {
            let xi = x(i);
            acc += self.diag[i] * xi * xi;
            if i > 0 {
                acc += 2.0 * self.off[i - 1] * prev * xi;
            }
            prev = xi;
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Precision matrix Ω(ρ) of a unit-innovation stationary AR(1) of length `t`.
///
/// For `t == 1` this is the stationary precision `1 − ρ²`.
pub fn build_precision(rho: f64, t: usize) -> Tridiagonal {
    assert!(t >= 1, "precision matrix needs at least one period");
    if t == 1 {
        return Tridiagonal {
            diag: vec![1.0 - rho * rho],
            off: vec![],
        };
    }
    let mut diag = vec![1.0 + rho * rho; t];
    diag[0] = 1.0;
    diag[t - 1] = 1.0;
    Tridiagonal {
        diag,
        off: vec![-rho; t - 1],
    }
}

/// Zero-mean stationary AR(1) series with the given innovation variance.
pub fn ar1_series<R: Rng + ?Sized>(rng: &mut R, rho: f64, innovation_var: f64, t: usize) -> Vec<f64> {
    let sd = innovation_var.sqrt();
    let mut out = Vec::with_capacity(t);
    let mut x = 0.0;
    for i in 0..t {
        let e: f64 = StandardNormal.sample(rng);
        x = if i == 0 {
            e * sd / (1.0 - rho * rho).sqrt()
        } else {
            rho * x + sd * e
        };
        out.push(x);
    }
    out
}

/// Draw from MN(0, Ω⁻¹(ρ), diag(τ², ςτ²)), one AR(1) series per column.
pub fn sample_matrix_normal<R: Rng + ?Sized>(hyper: &ProcessHyper, t: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let [s1, s2] = hyper.innovation_vars();
    let a = ar1_series(rng, hyper.rho, s1, t);
    let b = ar1_series(rng, hyper.rho, s2, t);
    a.into_iter().zip(b).map(|(x, y)| [x, y]).collect()
}

/// Forward simulation of one unit's auxiliary path.
pub fn simulate_aux_path<R: Rng + ?Sized>(hyper: &ProcessHyper, t: usize, rng: &mut R) -> AuxPath {
    AuxPath::new(sample_matrix_normal(hyper, t, rng))
}

/// Matrix-normal log-density of a centred path under the process prior.
pub fn aux_log_density(path: &AuxPath, hyper: &ProcessHyper) -> f64 {
    column_log_densities(path.rows(), hyper.rho, hyper.innovation_vars())
}

/// `Σ_c [−xᵀΩx / 2σ_c² + ½ log|Ω| − (T/2) log(2πσ_c²)]` over both columns.
pub(crate) fn column_log_densities(rows: &[[f64; 2]], rho: f64, vars: [f64; 2]) -> f64 {
    let t = rows.len();
    if t == 0 {
        return 0.0;
    }
    let omega = build_precision(rho, t);
    let ln_det = (1.0 - rho * rho).ln();
    let mut total = 0.0;
    for (c, var) in vars.iter().enumerate() {
        let q = omega.quad_form(|i| rows[i][c]);
        total += -0.5 * q / var + 0.5 * ln_det - 0.5 * t as f64 * (TAU * var).ln();
    }
    total
}

/// Density of the direction of `(X, Y) ~ N((m1, m2), diag(s1², s2²))`.
pub fn projected_normal_density(beta: f64, m1: f64, m2: f64, s1: f64, s2: f64) -> f64 {
    let (c, s) = (beta.cos(), beta.sin());
    // q(r) = A r² − 2 B r + C
    let a = c * c / (s1 * s1) + s * s / (s2 * s2);
    let b = c * m1 / (s1 * s1) + s * m2 / (s2 * s2);
    let cc = m1 * m1 / (s1 * s1) + m2 * m2 / (s2 * s2);
    let centre = b / a;
    let sd = 1.0 / a.sqrt();
    let upper = centre.max(0.0) + 12.0 * sd;
    let rule = GaussLegendre::new(20);
    let radial = rule.integrate(|r| r * (-0.5 * a * (r - centre).powi(2)).exp(), 0.0, upper, 16);
    let outer = (-0.5 * (cc - b * b / a)).exp();
    outer * radial / (2.0 * PI * s1 * s2)
}

/// Stationary marginal density of a single ideal point.
pub fn stationary_density(beta: f64, hyper: &ProcessHyper) -> f64 {
    let scale = (1.0 - hyper.rho * hyper.rho).sqrt();
    let [v1, v2] = hyper.innovation_vars();
    projected_normal_density(beta, hyper.mu, 0.0, v1.sqrt() / scale, v2.sqrt() / scale)
}

/// `n` independent prior draws of the ideal point in the last of `t` periods.
pub fn simulate_prior_betas<R: Rng + ?Sized>(hyper: &ProcessHyper, t: usize, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| simulate_aux_path(hyper, t.max(1), rng).beta(t.max(1) - 1, hyper.mu))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn angle_examples() {
        assert_eq!(atan2_angle(1.0, 0.0).unwrap(), 0.0);
        assert!((atan2_angle(0.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(atan2_angle(-1.0, 0.0).unwrap(), -PI);
        assert!(matches!(atan2_angle(0.0, 0.0), Err(Error::UndefinedAngle)));
    }

    #[test]
    fn angle_matches_piecewise_arctan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let v: f64 = rng.random_range(-3.0..3.0);
            let w: f64 = rng.random_range(-3.0..3.0);
            let expected = if v >= 0.0 {
                (w / v).atan()
            } else if w >= 0.0 {
                (w / v).atan() + PI
            } else {
                (w / v).atan() - PI
            };
            let got = atan2_angle(v, w).unwrap();
            assert!(crate::link::geodesic_dist(got, expected) < 1e-14);
        }
    }

    #[test]
    fn precision_examples() {
        let id = build_precision(0.0, 3);
        assert_eq!(id.to_dense(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let two = build_precision(0.5, 2);
        assert_eq!(two.to_dense(), vec![vec![1.0, -0.5], vec![-0.5, 1.0]]);
        assert_eq!(build_precision(0.6, 1).to_dense(), vec![vec![1.0 - 0.36]]);
    }

    #[test]
    fn stationary_variance_formula() {
        let h = ProcessHyper::new(1.0, 0.95, 0.25, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let first: Vec<f64> = (0..n).map(|_| sample_matrix_normal(&h, 1, &mut rng)[0][0]).collect();
        let var = first.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let expected: f64 = 0.25 / (1.0 - 0.9025);
        assert!((expected - 2.564_102_564).abs() < 1e-8);
        assert!((var - expected).abs() < 4.0 * expected * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn tiny_innovations_give_constant_path() {
        let h = ProcessHyper::new(2.0, 0.5, 1e-24, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = simulate_aux_path(&h, 6, &mut rng);
        assert!(p.rows().iter().all(|r| r[0].abs() < 1e-9 && r[1].abs() < 1e-9));
        assert!(p.betas(h.mu).iter().all(|b| b.abs() < 1e-9));
    }

    #[test]
    fn log_density_matches_transition_factorisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for t in 1..=6 {
            let h = ProcessHyper::new(1.3, 0.83, 0.7, 2.1).unwrap();
            let path = simulate_aux_path(&h, t, &mut rng);
            let via_omega = aux_log_density(&path, &h);
            let normal_ln = |x: f64, var: f64| -0.5 * (TAU * var).ln() - 0.5 * x * x / var;
            let mut direct = 0.0;
            for (c, var) in h.innovation_vars().iter().enumerate() {
                let xs: Vec<f64> = path.column(c).collect();
                direct += normal_ln(xs[0], var / (1.0 - h.rho * h.rho));
                for i in 1..t {
                    direct += normal_ln(xs[i] - h.rho * xs[i - 1], *var);
                }
            }
            assert!((via_omega - direct).abs() < 1e-10, "T = {t}");
        }
    }

    #[test]
    fn uniform_when_isotropic_and_centred() {
        for beta in [-3.0, -1.0, 0.0, 0.7, 2.5] {
            let d = projected_normal_density(beta, 0.0, 0.0, 1.3, 1.3);
            assert!((d - 1.0 / TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_density_integrates_to_one() {
        let h = ProcessHyper::new(3.0, 0.9, 1.0, 1.0).unwrap();
        let rule = GaussLegendre::new(20);
        let total = rule.integrate(|b| stationary_density(b, &h), -PI, PI, 32);
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn stationary_density_matches_closed_form() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let (m1, m2, s1, s2) = (1.2, -0.4, 0.8, 1.9);
        let unit = Normal::standard();
        for beta in [-2.9, -1.0, 0.0, 0.4, 2.2] {
            let (c, s) = (f64::cos(beta), f64::sin(beta));
            let a = c * c / (s1 * s1) + s * s / (s2 * s2);
            let b = c * m1 / (s1 * s1) + s * m2 / (s2 * s2);
            let cc = m1 * m1 / (s1 * s1) + m2 * m2 / (s2 * s2);
            let m = b / a;
            let radial = (-0.5 * a * m * m).exp() / a + m * (TAU / a).sqrt() * unit.cdf(m * a.sqrt());
            let expected = (-0.5 * (cc - b * b / a)).exp() * radial / (TAU * s1 * s2);
            let got = projected_normal_density(beta, m1, m2, s1, s2);
            // the f64 closed form itself is only good to about 1e-11 here
            assert!((got - expected).abs() < 1e-10, "{beta}: {got} vs {expected}");
        }
        // 40-digit reference at β = −1
        let got = projected_normal_density(-1.0, m1, m2, s1, s2);
        assert!((got - 0.460_024_141_150_727_1).abs() < 1e-13);
    }

    #[test]
    fn elongated_process_is_bimodal_at_zero_and_pi() {
        let h = ProcessHyper::from_sds(10.0, 0.95, 8.0, 0.5).unwrap();
        let at = |b: f64| stationary_density(b, &h);
        assert!(at(0.0) > at(0.3) && at(0.0) > at(-0.3));
        let near_pi = PI - 1e-9;
        assert!(at(near_pi) > at(PI - 0.3));
        assert!(at(PI / 2.0) < 0.1 * at(near_pi));
    }
}
