use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{build_design, exposure_label, RegressionSpec};
use super::ols::{ols, RegressionResult};
use crate::error::{Error, Result};
use crate::ingest::ControlMatrix;
use crate::stats;

/// Test of a linear combination `wᵀβ` against zero, normal reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearComboTest {
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

impl LinearComboTest {
    pub fn from_estimate(estimate: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::NonPositiveVariance(variance));
        }
        let se = variance.sqrt();
        let t = estimate / se;
        Ok(Self {
            estimate,
            se,
            t,
            p: stats::normal_two_sided_p(t),
        })
    }

    /// Pointwise 95% interval.
    pub fn interval95(&self) -> (f64, f64) {
        (self.estimate - stats::Z_975 * self.se, self.estimate + stats::Z_975 * self.se)
    }
}

/// Joint Wald test, χ² reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldTest {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

fn hac(result: &RegressionResult) -> Result<&DMatrix<f64>> {
    result
        .hac_cov
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("regression has no HAC covariance".into()))
}

/// `wᵀβ̂` with standard error `√(wᵀ V w)` from the HAC covariance.
pub fn linear_combo(result: &RegressionResult, weights: &[f64]) -> Result<LinearComboTest> {
    if weights.len() != result.coef.len() {
        return Err(Error::DimensionMismatch {
            expected: result.coef.len(),
            found: weights.len(),
        });
    }
    let v = hac(result)?;
    let w = DVector::from_column_slice(weights);
    let estimate = w.dot(&DVector::from_column_slice(&result.coef));
    let variance = (w.transpose() * v * &w)[(0, 0)];
    LinearComboTest::from_estimate(estimate, variance)
}

/// Weight vector with ones on the named columns.
pub fn sum_weights(result: &RegressionResult, labels: &[String]) -> Result<Vec<f64>> {
    let mut w = vec![0.0; result.coef.len()];
    for l in labels {
        let i = result
            .index_of(l)
            .ok_or_else(|| Error::InvalidArgument(format!("no column {l:?} in regression")))?;
        w[i] = 1.0;
    }
    Ok(w)
}

/// HAC Wald test that the named coefficients are jointly zero.
pub fn wald_zero(result: &RegressionResult, labels: &[String]) -> Result<WaldTest> {
    let v = hac(result)?;
    let idx = labels
        .iter()
        .map(|l| {
            result
                .index_of(l)
                .ok_or_else(|| Error::InvalidArgument(format!("no column {l:?} in regression")))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = idx.len();
    let block = DMatrix::from_fn(m, m, |a, b| v[(idx[a], idx[b])]);
    let beta = DVector::from_iterator(m, idx.iter().map(|&i| result.coef[i]));
    let chol = block.cholesky().ok_or(Error::SingularCovariance)?;
    let statistic = beta.dot(&chol.solve(&beta));
    Ok(WaldTest {
        statistic,
        df: m,
        p: stats::chi2_sf(statistic, m),
    })
}

/// ARDL fit with HAC covariance and the cumulative exposure tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ArdlFit {
    pub spec: RegressionSpec,
    pub result: RegressionResult,
    /// Sum of exposure coefficients at lags `0..=q`.
    pub beta_sum: LinearComboTest,
    /// Sum of lead coefficients, when the spec has leads.
    pub delta_sum: Option<LinearComboTest>,
}

pub fn exposure_lag_labels(q: usize) -> Vec<String> {
    (0..=q as i64).map(|j| exposure_label(-j)).collect()
}

pub fn exposure_lead_labels(leads: usize) -> Vec<String> {
    (1..=leads as i64).map(exposure_label).collect()
}

pub fn fit_ardl(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    spec: &RegressionSpec,
) -> Result<ArdlFit> {
    let design = build_design(y, exposure, controls, spec)?;
    let result = ols(&design)?.with_hac(&design, spec.hac_bandwidth)?;
    let beta_sum = linear_combo(&result, &sum_weights(&result, &exposure_lag_labels(spec.q))?)?;
    let delta_sum = if spec.leads > 0 {
        Some(linear_combo(
            &result,
            &sum_weights(&result, &exposure_lead_labels(spec.leads))?,
        )?)
    } else {
        None
    };
    Ok(ArdlFit {
        spec: spec.clone(),
        result,
        beta_sum,
        delta_sum,
    })
}
