//! Newey–West covariance.
//!
//! ```text
//! V = (XᵀX)⁻¹ Ω (XᵀX)⁻¹
//! Ω = Σ_t e_t² x_t x_tᵀ + Σ_{l=1}^{H} w_l Σ_t e_t e_{t−l} (x_t x_{t−l}ᵀ + x_{t−l} x_tᵀ)
//! w_l = 1 − l/(H+1)
//! ```
//!
//! Lags run over row positions of the design, so rows must be in time order.
//! No small-sample scaling is applied.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn bartlett_weight(lag: usize, bandwidth: usize) -> f64 {
    1.0 - lag as f64 / (bandwidth as f64 + 1.0)
}

/// The middle term Ω of the sandwich.
pub fn newey_west_meat(x: &DMatrix<f64>, residuals: &[f64], bandwidth: usize) -> Result<DMatrix<f64>> {
    let (n, k) = x.shape();
    if residuals.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: residuals.len(),
        });
    }
    if bandwidth >= n {
        return Err(Error::BandwidthTooLarge { bandwidth, n });
    }
    let mut scores = x.clone();
    for (mut row, e) in scores.row_iter_mut().zip(residuals) {
        row *= *e;
    }
    let mut meat = scores.transpose() * &scores;
    for lag in 1..=bandwidth {
        let current = scores.rows(lag, n - lag);
        let lagged = scores.rows(0, n - lag);
        let gamma = current.transpose() * lagged;
        meat += (&gamma + gamma.transpose()) * bartlett_weight(lag, bandwidth);
    }
    debug_assert_eq!(meat.shape(), (k, k));
    Ok(meat)
}

/// Sandwich covariance of OLS coefficients with Bartlett-weighted
/// autocovariances up to `bandwidth`. `bandwidth = 0` gives the
/// heteroskedasticity-only sandwich.
pub fn hac_covariance(x: &DMatrix<f64>, residuals: &[f64], bandwidth: usize) -> Result<DMatrix<f64>> {
    let meat = newey_west_meat(x, residuals, bandwidth)?;
    let xtx = x.transpose() * x;
    let bread = xtx
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient(vec!["design".into()]))?;
    let v = &bread * meat * &bread;
    Ok((&v + v.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_must_be_below_n() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(
            hac_covariance(&x, &[0.1, -0.2, 0.1], 3),
            Err(Error::BandwidthTooLarge { .. })
        ));
    }

    #[test]
    fn weights() {
        assert_eq!(bartlett_weight(0, 7), 1.0);
        assert_eq!(bartlett_weight(7, 7), 0.125);
    }
}
