//! Augmented Dickey–Fuller and KPSS statistics compared against tabulated
//! critical values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hac::bartlett_weight;
use super::ols::least_squares;
use crate::error::{Error, Result};
use crate::stats;

pub const MIN_LENGTH: usize = 25;
pub const ADF_MAX_LAG: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    Constant,
    ConstantTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "1%")]
    One,
    #[serde(rename = "5%")]
    Five,
    #[serde(rename = "10%")]
    Ten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl CriticalValues {
    fn levels(&self) -> [(Significance, f64); 3] {
        [
            (Significance::One, self.one),
            (Significance::Five, self.five),
            (Significance::Ten, self.ten),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lags: usize,
    pub n_obs: usize,
    pub critical: CriticalValues,
    /// Smallest level at which the unit-root null is rejected.
    pub rejects_at: Option<Significance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpssResult {
    pub statistic: f64,
    pub bandwidth: usize,
    pub critical: CriticalValues,
    /// Smallest level at which the stationarity null is rejected.
    pub rejects_at: Option<Significance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub deterministic: Deterministic,
    pub adf: AdfResult,
    pub kpss: KpssResult,
}

/// MacKinnon (2010) response-surface coefficients `b0 + b1/T + b2/T² + b3/T³`
/// for the single-series Dickey–Fuller τ at 1/5/10%.
fn adf_critical(det: Deterministic, n_obs: usize) -> CriticalValues {
    let table: [[f64; 4]; 3] = match det {
        Deterministic::Constant => [
            [-3.43035, -6.5393, -16.786, -79.433],
            [-2.86154, -2.8903, -4.234, -40.040],
            [-2.56677, -1.5384, -2.809, 0.0],
        ],
        Deterministic::ConstantTrend => [
            [-3.95877, -9.0531, -28.428, -134.155],
            [-3.41049, -4.3904, -9.036, -45.374],
            [-3.12705, -2.5856, -3.925, -22.380],
        ],
    };
    let inv = 1.0 / n_obs as f64;
    let eval = |b: &[f64; 4]| b[0] + b[1] * inv + b[2] * inv * inv + b[3] * inv * inv * inv;
    CriticalValues {
        one: eval(&table[0]),
        five: eval(&table[1]),
        ten: eval(&table[2]),
    }
}

fn kpss_critical(det: Deterministic) -> CriticalValues {
    match det {
        Deterministic::Constant => CriticalValues {
            one: 0.739,
            five: 0.463,
            ten: 0.347,
        },
        Deterministic::ConstantTrend => CriticalValues {
            one: 0.216,
            five: 0.146,
            ten: 0.119,
        },
    }
}

fn validate(series: &[f64]) -> Result<()> {
    if series.len() < MIN_LENGTH {
        return Err(Error::InvalidArgument(format!(
            "stationarity tests need at least {MIN_LENGTH} observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series has non-finite values".into()));
    }
    if stats::sample_sd(series) == 0.0 {
        return Err(Error::DegenerateSeries("constant series".into()));
    }
    Ok(())
}

struct AdfFit {
    statistic: f64,
    ssr: f64,
    n_obs: usize,
    k: usize,
}

/// `Δy_t = α [+ δt] + γ y_{t−1} + Σ_{i=1}^{lags} c_i Δy_{t−i}` over `t ∈ start..n`.
fn adf_regression(y: &[f64], det: Deterministic, lags: usize, start: usize) -> Result<AdfFit> {
    let n = y.len();
    let n_obs = n - start;
    let k = 2 + lags + usize::from(det == Deterministic::ConstantTrend);
    let mut labels = vec!["const".to_string(), "y_lag1".to_string()];
    labels.extend((1..=lags).map(|i| format!("dy_lag{i}")));
    if det == Deterministic::ConstantTrend {
        labels.push("trend".into());
    }
    let x = DMatrix::from_fn(n_obs, k, |r, c| {
        let t = start + r;
        match c {
            0 => 1.0,
            1 => y[t - 1],
            c if c < 2 + lags => y[t - (c - 1)] - y[t - c],
            _ => t as f64,
        }
    });
    let dy: Vec<f64> = (start..n).map(|t| y[t] - y[t - 1]).collect();
    let fit = least_squares(&x, &dy, &labels)?;
    let ssr: f64 = fit.residuals.iter().map(|e| e * e).sum();
    let sigma2 = ssr / (n_obs - k) as f64;
    let se = (sigma2 * fit.bread[(1, 1)]).sqrt();
    Ok(AdfFit {
        statistic: fit.coef[1] / se,
        ssr,
        n_obs,
        k,
    })
}

/// Augmented Dickey–Fuller test with the lag order chosen by AIC over
/// `0..=12` on a common sample, then refit on the full sample at that order.
pub fn adf_test(series: &[f64], det: Deterministic) -> Result<AdfResult> {
    validate(series)?;
    let n = series.len();
    let max_lag = ADF_MAX_LAG.min((n - 5) / 3);
    let common_start = max_lag + 1;
    let mut best: Option<(f64, usize)> = None;
    for lags in 0..=max_lag {
        let fit = adf_regression(series, det, lags, common_start)?;
        let m = fit.n_obs as f64;
        let aic = m * (fit.ssr / m).ln() + 2.0 * fit.k as f64;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lags));
        }
    }
    let lags = best.map(|(_, l)| l).unwrap_or(0);
    let fit = adf_regression(series, det, lags, lags + 1)?;
    let critical = adf_critical(det, fit.n_obs);
    let rejects_at = critical
        .levels()
        .into_iter()
        .find(|(_, c)| fit.statistic < *c)
        .map(|(s, _)| s);
    Ok(AdfResult {
        statistic: fit.statistic,
        lags,
        n_obs: fit.n_obs,
        critical,
        rejects_at,
    })
}

/// Bandwidth `⌊4 (n/100)^{1/4}⌋`.
pub fn kpss_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// KPSS statistic with a Bartlett long-run variance.
pub fn kpss_test(series: &[f64], det: Deterministic) -> Result<KpssResult> {
    validate(series)?;
    let n = series.len();
    let resid: Vec<f64> = match det {
        Deterministic::Constant => {
            let m = stats::mean(series);
            series.iter().map(|v| v - m).collect()
        }
        Deterministic::ConstantTrend => {
            let x = DMatrix::from_fn(n, 2, |t, c| if c == 0 { 1.0 } else { t as f64 });
            least_squares(&x, series, &["const".into(), "trend".into()])?.residuals
        }
    };
    let mut partial = 0.0;
    let mut eta = 0.0;
    for e in &resid {
        partial += e;
        eta += partial * partial;
    }
    let nf = n as f64;
    eta /= nf * nf;

    let bandwidth = kpss_bandwidth(n);
    let mut lrv: f64 = resid.iter().map(|e| e * e).sum();
    for lag in 1..=bandwidth {
        let cov: f64 = (lag..n).map(|t| resid[t] * resid[t - lag]).sum();
        lrv += 2.0 * bartlett_weight(lag, bandwidth) * cov;
    }
    lrv /= nf;
    if !(lrv > 0.0) {
        return Err(Error::DegenerateSeries("zero long-run variance".into()));
    }
    let statistic = eta / lrv;
    let critical = kpss_critical(det);
    let rejects_at = critical
        .levels()
        .into_iter()
        .find(|(_, c)| statistic > *c)
        .map(|(s, _)| s);
    Ok(KpssResult {
        statistic,
        bandwidth,
        critical,
        rejects_at,
    })
}

pub fn stationarity_report(series: &[f64], det: Deterministic) -> Result<StationarityReport> {
    Ok(StationarityReport {
        deterministic: det,
        adf: adf_test(series, det)?,
        kpss: kpss_test(series, det)?,
    })
}
