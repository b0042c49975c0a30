//! Small statistical helpers shared by the sampler checks and the CLI.

use std::f64::consts::PI;

use crate::circular::mean_resultant;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n − 1` denominator.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Rayleigh test of circular uniformity; returns the approximate p-value.
pub fn rayleigh_test(angles: &[f64]) -> f64 {
    let n = angles.len() as f64;
    let (_, r) = mean_resultant(angles);
    let z = n * r * r;
    let p = (-z).exp()
        * (1.0 + (2.0 * z - z * z) / (4.0 * n)
            - (24.0 * z - 132.0 * z * z + 76.0 * z.powi(3) - 9.0 * z.powi(4)) / (288.0 * n * n));
    p.clamp(0.0, 1.0)
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_means_se(x: &[f64], n_batches: usize) -> f64 {
    let size = x.len() / n_batches;
    assert!(size >= 1, "series too short for {n_batches} batches");
    let batches: Vec<f64> = (0..n_batches).map(|b| mean(&x[b * size..(b + 1) * size])).collect();
    (sample_variance(&batches) / n_batches as f64).sqrt()
}

/// Local maxima of a von Mises kernel density estimate on a regular grid.
///
/// Peaks lower than `min_rel_height` times the global maximum are dropped.
pub fn circular_kde_modes(angles: &[f64], concentration: f64, grid: usize, min_rel_height: f64) -> Vec<f64> {
    let pts: Vec<f64> = (0..grid).map(|g| -PI + 2.0 * PI * g as f64 / grid as f64).collect();
    let dens: Vec<f64> = pts
        .iter()
        .map(|&x| angles.iter().map(|&a| (concentration * ((x - a).cos() - 1.0)).exp()).sum())
        .collect();
    let top = dens.iter().cloned().fold(0.0, f64::max);
    (0..grid)
        .filter(|&g| {
            let prev = dens[(g + grid - 1) % grid];
            let next = dens[(g + 1) % grid];
            dens[g] > prev && dens[g] >= next && dens[g] >= min_rel_height * top
        })
        .map(|g| pts[g])
        .collect()
}
