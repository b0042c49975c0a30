//! Special functions used by the link and by the von Mises machinery.

use statrs::function::gamma::ln_gamma;

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function I_x(a, b).
///
/// `x` outside `[0, 1]` is clamped. `a` and `b` must be positive.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_with(a, b, x, ln_beta(a, b))
}

/// I_x(a, b) with a caller-supplied `ln B(a, b)`, so hot loops can cache it.
pub fn beta_reg_with(a: f64, b: f64, x: f64, ln_b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // The continued fraction converges fast below the mean; reflect otherwise.
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_cf_scaled(b, a, 1.0 - x, ln_b)
    } else {
        beta_cf_scaled(a, b, x, ln_b)
    }
}

/// x^a (1-x)^b / (a B(a,b)) times the modified-Lentz continued fraction.
fn beta_cf_scaled(a: f64, b: f64, x: f64, ln_b: f64) -> f64 {
    let ln_prefix = a * x.ln() + b * (-x).ln_1p() - ln_b;
    let prefix = ln_prefix.exp() / a;
    if prefix == 0.0 {
        return 0.0;
    }

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut f = d;

    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        f *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    prefix * f
}

const BESSEL_SERIES_MAX: f64 = 30.0;

/// Power series for I0 and I1, both scaled by e^{-x}.
fn bessel_series_scaled(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let scale = (-x).exp();
    let mut t0 = scale;
    let mut t1 = 0.5 * x * scale;
    let mut s0 = t0;
    let mut s1 = t1;
    let mut k = 1.0;
    loop {
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 <= 1e-17 * s0 && t1 <= 1e-17 * s1.max(f64::MIN_POSITIVE) {
            break;
        }
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    (s0, s1)
}

/// Hankel asymptotic sums: I_nu(x) ~ e^x / sqrt(2 pi x) * S_nu(x).
fn bessel_asymptotic_sums(x: f64) -> (f64, f64) {
    let sum = |mu: f64| {
        let mut term = 1.0;
        let mut s = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let k = k as f64;
            let odd = 2.0 * k - 1.0;
            term *= -(mu - odd * odd) / (k * 8.0 * x);
            if term.abs() >= prev {
                break;
            }
            s += term;
            prev = term.abs();
            if term.abs() < 1e-17 * s.abs() {
                break;
            }
        }
        s
    };
    (sum(0.0), sum(4.0))
}

/// ln I0(x) for x >= 0.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= BESSEL_SERIES_MAX {
        let (s0, _) = bessel_series_scaled(x);
        x + s0.ln()
    } else {
        let (s0, _) = bessel_asymptotic_sums(x);
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + s0.ln()
    }
}

/// Mean resultant length of a von Mises law, A(k) = I1(k) / I0(k).
pub fn bessel_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    if kappa <= BESSEL_SERIES_MAX {
        let (s0, s1) = bessel_series_scaled(kappa);
        s1 / s0
    } else {
        let (s0, s1) = bessel_asymptotic_sums(kappa);
        s1 / s0
    }
}

/// Rational approximation of A^{-1}(r) (Best and Fisher), max relative error
/// well under 1e-3 over (0, 1).
pub fn inv_bessel_ratio_approx(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r < 0.53 {
        2.0 * r + r.powi(3) + 5.0 * r.powi(5) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else if r < 1.0 {
        1.0 / (r.powi(3) - 4.0 * r * r + 3.0 * r)
    } else {
        f64::INFINITY
    }
}

/// A^{-1}(r): the rational approximation polished by Newton steps on A(k) = r.
pub fn inv_bessel_ratio(r: f64) -> f64 {
    let mut kappa = inv_bessel_ratio_approx(r);
    if !(kappa > 0.0) || !kappa.is_finite() {
        return kappa;
    }
    for _ in 0..50 {
        let a = bessel_ratio(kappa);
        let slope = 1.0 - a / kappa - a * a;
        if !(slope > 0.0) {
            break;
        }
        let next = kappa - (a - r) / slope;
        let next = if next <= 0.0 { 0.5 * kappa } else { next };
        let done = ((next - kappa) / kappa).abs() < 1e-14;
        kappa = next;
        if done {
            break;
        }
    }
    kappa
}
