use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::CMatrix;
use crate::error::ControlError;
use crate::model::{Point3, RisSpec};

/// Achievable rate of one evaluated channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// bits/s/Hz
    pub rate: f64,
    pub pt_dbm: f64,
    pub noise_dbm: f64,
    pub realization: u64,
    /// Surface whose phases were optimized, if any.
    pub ris_index: Option<usize>,
}

/// `log2 det(I + (Pt/σ²) C Cᴴ)`, evaluated as `Σ_i log2(1 + (Pt/σ²) σ_i²)`
/// over the singular values of `C`.
pub fn achievable_rate(c: &CMatrix, pt_watts: f64, noise_watts: f64) -> Result<f64, ControlError> {
    if !(noise_watts > 0.0) {
        return Err(ControlError::NonPositiveNoise(noise_watts));
    }
    if !pt_watts.is_finite() || pt_watts < 0.0 || c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(ControlError::NonFiniteEntries);
    }
    if c.is_empty() {
        return Ok(0.0);
    }
    let snr = pt_watts / noise_watts;
    let rate: f64 = c.singular_values().iter().map(|s| (snr * s * s).ln_1p() / LN_2).sum();
    Ok(rate.max(0.0))
}

/// Far-field received power after coherent combining over `n` elements:
/// `Pt N² λ⁴ / ((4π)² d1² d2²)`, antenna and element gains ignored.
pub fn far_field_power(pt_watts: f64, n: usize, wavelength: f64, d1: f64, d2: f64) -> f64 {
    let n = n as f64;
    pt_watts * n * n * wavelength.powi(4) / ((4.0 * PI).powi(2) * d1 * d1 * d2 * d2)
}

/// Index of the position closest to `rx`; ties go to the lowest index.
pub fn select_nearest<I>(rx: Point3, positions: I) -> Result<usize, ControlError>
where
    I: IntoIterator<Item = Point3>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in positions.into_iter().enumerate() {
        let d = rx.distance(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(ControlError::EmptyList)
}

/// Surface nearest to the receiver.
pub fn select_ris(rx: Point3, ris_list: &[RisSpec]) -> Result<usize, ControlError> {
    select_nearest(rx, ris_list.iter().map(|r| r.position))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RisPlane;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn rate_examples() {
        assert_eq!(achievable_rate(&CMatrix::zeros(3, 2), 1.0, 1.0).unwrap(), 0.0);
        let one = CMatrix::from_element(1, 1, Complex64::new(0.6, 0.8));
        assert_relative_eq!(achievable_rate(&one, 1.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
        ]));
        assert_relative_eq!(
            achievable_rate(&diag, 1.0, 1.0).unwrap(),
            5f64.log2() + 1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rate_errors() {
        let one = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(
            achievable_rate(&one, 1.0, 0.0),
            Err(ControlError::NonPositiveNoise(_))
        ));
        let bad = CMatrix::from_element(1, 1, Complex64::new(f64::NAN, 0.0));
        assert!(matches!(
            achievable_rate(&bad, 1.0, 1.0),
            Err(ControlError::NonFiniteEntries)
        ));
    }

    #[test]
    fn far_field_examples() {
        let p = far_field_power(1.0, 100, 1.0714e-2, 10.0, 10.0);
        assert_relative_eq!(p, 8.35e-11, max_relative = 1e-3);
        assert_relative_eq!(
            far_field_power(1.0, 200, 0.01, 5.0, 7.0) / far_field_power(1.0, 100, 0.01, 5.0, 7.0),
            4.0
        );
        assert_relative_eq!(
            far_field_power(1.0, 10, 0.01, 5.0, 7.0) / far_field_power(1.0, 10, 0.01, 5.0, 14.0),
            4.0
        );
    }

    #[test]
    fn selection() {
        let rx = Point3::new(45.0, 45.0, 1.0);
        let a = RisSpec::new(64, Point3::new(40.0, 50.0, 2.0), RisPlane::Xz);
        let b = RisSpec::new(64, Point3::new(60.0, 30.0, 2.0), RisPlane::Xz);
        assert_relative_eq!(rx.distance(a.position), 7.1414, epsilon = 1e-4);
        assert_relative_eq!(rx.distance(b.position), 21.2368, epsilon = 1e-4);
        assert_eq!(select_ris(rx, &[a.clone(), b.clone()]).unwrap(), 0);
        assert_eq!(select_ris(rx, &[b.clone(), a.clone()]).unwrap(), 1);
        assert_eq!(select_ris(rx, std::slice::from_ref(&b)).unwrap(), 0);
        assert!(matches!(select_ris(rx, &[]), Err(ControlError::EmptyList)));
        let tie = Point3::new(0.0, 0.0, 0.0);
        let left = RisSpec::new(4, Point3::new(-1.0, 0.0, 0.0), RisPlane::Yz);
        let right = RisSpec::new(4, Point3::new(1.0, 0.0, 0.0), RisPlane::Yz);
        assert_eq!(select_ris(tie, &[right, left]).unwrap(), 0);
    }
}
