//! Local projections: per-horizon regressions of future outcomes on the
//! current exposure, with the same lag and control set as the ARDL models.

use serde::{Deserialize, Serialize};

use super::design::{assemble, exposure_label, Layout};
use super::inference::{wald_zero, LinearComboTest, WaldTest};
use super::ols::ols;
use crate::error::{Error, Result};
use crate::ingest::ControlMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEstimate {
    /// First and last horizon of the outcome window (equal for a single horizon).
    pub window: (i64, i64),
    pub test: LinearComboTest,
    pub n: usize,
    /// The window lies inside the outcome lags `-p..=-1`, so the outcome is a
    /// combination of regressors and the response is zero by construction.
    /// `test` then holds estimate 0, se 0, t 0, p 1.
    pub spanned_by_lags: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub horizons: Vec<i64>,
    pub theta: Vec<f64>,
    pub se: Vec<f64>,
    pub n: Vec<usize>,
    pub spanned_by_lags: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrendTest {
    pub wald: WaldTest,
    pub n: usize,
}

/// `Σ_{j=a}^{b} y_{t+j}`, missing if any term is missing or out of range.
fn window_sum(y: &[Option<f64>], a: i64, b: i64) -> Vec<Option<f64>> {
    (0..y.len() as i64)
        .map(|t| {
            (a..=b)
                .map(|j| {
                    let i = t + j;
                    if i < 0 || i >= y.len() as i64 {
                        None
                    } else {
                        y[i as usize]
                    }
                })
                .sum::<Option<f64>>()
        })
        .collect()
}

fn project(
    outcome: &[Option<f64>],
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    p: usize,
    bandwidth: usize,
    window: (i64, i64),
) -> Result<ProjectionEstimate> {
    let design = assemble(&Layout {
        outcome,
        y,
        y_lags: p,
        exposure,
        exposure_offsets: &[0],
        controls,
        trend: false,
    })
    .map_err(|e| match e {
        Error::Underdetermined { rows, cols } => Error::InvalidArgument(format!(
            "insufficient overlap for projection window {window:?}: {rows} rows for {cols} columns"
        )),
        other => other,
    })?;
    if window.0 >= -(p as i64) && window.1 <= -1 {
        return Ok(ProjectionEstimate {
            window,
            test: LinearComboTest {
                estimate: 0.0,
                se: 0.0,
                t: 0.0,
                p: 1.0,
            },
            n: design.n(),
            spanned_by_lags: true,
        });
    }
    let result = ols(&design)?.with_hac(&design, bandwidth)?;
    let j = result.index_of(&exposure_label(0)).expect("exposure column present");
    let cov = result.hac_cov.as_ref().expect("hac set");
    Ok(ProjectionEstimate {
        window,
        test: LinearComboTest::from_estimate(result.coef[j], cov[(j, j)])?,
        n: result.n,
        spanned_by_lags: false,
    })
}

/// Regression of `y_{t+h}` on `e_t`, `y_{t−1..t−p}` and the controls at `t`.
/// Negative `h` gives pre-trend placebos.
pub fn local_projection(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    h: i64,
    p: usize,
    bandwidth: usize,
) -> Result<ProjectionEstimate> {
    cumulative_lp(y, exposure, controls, h, h, p, bandwidth)
}

/// Single regression of `Σ_{j=a}^{b} y_{t+j}` on the horizon-0 regressor set.
pub fn cumulative_lp(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    a: i64,
    b: i64,
    p: usize,
    bandwidth: usize,
) -> Result<ProjectionEstimate> {
    if a > b {
        return Err(Error::InvalidArgument(format!("window start {a} after end {b}")));
    }
    let outcome = window_sum(y, a, b);
    project(&outcome, y, exposure, controls, p, bandwidth, (a, b))
}

/// Per-horizon local projections.
pub fn impulse_response(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    horizons: &[i64],
    p: usize,
    bandwidth: usize,
) -> Result<IrfResult> {
    let mut out = IrfResult {
        horizons: Vec::new(),
        theta: Vec::new(),
        se: Vec::new(),
        n: Vec::new(),
        spanned_by_lags: Vec::new(),
    };
    for &h in horizons {
        let est = local_projection(y, exposure, controls, h, p, bandwidth)?;
        out.horizons.push(h);
        out.theta.push(est.test.estimate);
        out.se.push(est.test.se);
        out.n.push(est.n);
        out.spanned_by_lags.push(est.spanned_by_lags);
    }
    Ok(out)
}

/// Joint HAC Wald test that the responses at the given negative horizons are
/// zero, from one regression of `y_t` on `e_{t+1} … e_{t+K}` plus outcome
/// lags and controls.
pub fn joint_pretrend_wald(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    horizons: &[i64],
    p: usize,
    bandwidth: usize,
) -> Result<PretrendTest> {
    if horizons.is_empty() || horizons.iter().any(|&h| h >= 0) {
        return Err(Error::InvalidArgument(
            "pre-trend horizons must be non-empty and negative".into(),
        ));
    }
    let offsets: Vec<i64> = horizons.iter().map(|h| -h).collect();
    let design = assemble(&Layout {
        outcome: y,
        y,
        y_lags: p,
        exposure,
        exposure_offsets: &offsets,
        controls,
        trend: false,
    })?;
    let result = ols(&design)?.with_hac(&design, bandwidth)?;
    let labels: Vec<String> = offsets.iter().map(|&k| exposure_label(k)).collect();
    Ok(PretrendTest {
        wald: wald_zero(&result, &labels)?,
        n: result.n,
    })
}
