//! Angle arithmetic shared by every module.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Maps `x` to `x + 2πk` in `[-π, π)`. NaN and infinities come back as NaN.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let mut r = (x + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// [`wrap_angle`] that rejects non-finite input.
pub fn checked_wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("cannot wrap angle {x}")));
    }
    Ok(wrap_angle(x))
}

/// Mean direction and mean resultant length of a set of angles.
pub fn mean_resultant(angles: &[f64]) -> (f64, f64) {
    if angles.is_empty() {
        return (0.0, 0.0);
    }
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let n = angles.len() as f64;
    let (s, c) = (s / n, c / n);
    (s.atan2(c), s.hypot(c))
}

/// Circular mean, or `None` when the resultant is shorter than `min_resultant`.
pub fn circular_mean(angles: &[f64], min_resultant: f64) -> Option<f64> {
    let (mean, r) = mean_resultant(angles);
    if angles.is_empty() || r < min_resultant {
        None
    } else {
        Some(wrap_angle(mean))
    }
}

/// Jammalamadaka–SenGupta circular correlation between paired angles.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput(
            "circular correlation needs two equal-length samples of size >= 2".into(),
        ));
    }
    let (ma, _) = mean_resultant(a);
    let (mb, _) = mean_resultant(b);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        let sa = (x - ma).sin();
        let sb = (y - mb).sin();
        num += sa * sb;
        da += sa * sa;
        db += sb * sb;
    }
    let denom = (da * db).sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidInput("circular correlation of a constant sample".into()));
    }
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_eq!(wrap_angle(0.3), 0.3);
        assert_eq!(wrap_angle(PI), -PI);
        assert!(checked_wrap_angle(f64::NAN).is_err());
        assert!(checked_wrap_angle(f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent_and_keeps_direction(x in -1e3f64..1e3) {
            let w = wrap_angle(x);
            prop_assert!((-PI..PI).contains(&w));
            prop_assert_eq!(wrap_angle(w), w);
            prop_assert!((w.cos() - x.cos()).abs() < 1e-12);
            prop_assert!((w.sin() - x.sin()).abs() < 1e-12);
        }

        #[test]
        fn wrap_within_range_is_exact(x in -PI..PI) {
            let w = wrap_angle(x);
            prop_assert_eq!(w, x);
            prop_assert!((w.cos() - x.cos()).abs() <= 1e-15);
        }
    }

    #[test]
    fn correlation_of_identical_and_reflected() {
        let a = [0.1, -0.7, 1.3, 2.9, -2.0];
        assert!((circular_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((circular_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let rotated: Vec<f64> = a.iter().map(|x| wrap_angle(x + 2.0)).collect();
        assert!((circular_correlation(&a, &rotated).unwrap() - 1.0).abs() < 1e-12);
    }
}
