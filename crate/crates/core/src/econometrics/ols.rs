use nalgebra::{DMatrix, DVector};

use super::design::Design;
use super::hac::hac_covariance;
use crate::error::{Error, Result};

/// Relative residual norm below which a column counts as collinear with the
/// columns before it.
pub const COLLINEARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub column_labels: Vec<String>,
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(XᵀX)⁻¹`.
    pub bread: DMatrix<f64>,
    /// Newey–West coefficient covariance, set by [`with_hac`](Self::with_hac).
    pub hac_cov: Option<DMatrix<f64>>,
    pub hac_bandwidth: Option<usize>,
    pub n: usize,
    pub r2: f64,
    /// Daily-index positions of the rows used.
    pub rows: Vec<usize>,
    pub dropped_controls: Vec<String>,
}

impl RegressionResult {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.column_labels.iter().position(|l| l == label)
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.index_of(label).map(|i| self.coef[i])
    }

    /// Classical homoskedastic covariance `σ̂² (XᵀX)⁻¹` with `σ̂² = SSR/(n−k)`.
    pub fn classical_cov(&self) -> DMatrix<f64> {
        let k = self.coef.len();
        let ssr: f64 = self.residuals.iter().map(|e| e * e).sum();
        &self.bread * (ssr / (self.n - k) as f64)
    }

    pub fn with_hac(mut self, design: &Design, bandwidth: usize) -> Result<Self> {
        self.hac_cov = Some(hac_covariance(&design.x, &self.residuals, bandwidth)?);
        self.hac_bandwidth = Some(bandwidth);
        Ok(self)
    }
}

/// Names the columns that are (numerically) linear combinations of earlier
/// columns, using modified Gram–Schmidt.
pub(crate) fn collinear_columns(x: &DMatrix<f64>, labels: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        for q in &basis {
            let proj = q.dot(&v);
            v -= q * proj;
        }
        let rest = v.norm();
        if norm == 0.0 || rest <= COLLINEARITY_TOLERANCE * norm {
            bad.push(labels[j].clone());
        } else {
            basis.push(v / rest);
        }
    }
    bad
}

pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bread: DMatrix<f64>,
}

pub(crate) fn least_squares(x: &DMatrix<f64>, y: &[f64], labels: &[String]) -> Result<LeastSquares> {
    let bad = collinear_columns(x, labels);
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad));
    }
    let k = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(labels.to_vec()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(labels.to_vec()))?;
    let bread = &r_inv * r_inv.transpose();
    let fitted = x * &coef;
    let residuals = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    Ok(LeastSquares {
        coef: coef.iter().copied().collect(),
        residuals,
        bread,
    })
}

/// Ordinary least squares on an aligned design. `r2` is the centered R².
pub fn ols(design: &Design) -> Result<RegressionResult> {
    let fit = least_squares(&design.x, &design.y, &design.labels)?;
    let n = design.n();
    let mean = design.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = design.y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ssr: f64 = fit.residuals.iter().map(|e| e * e).sum();
    Ok(RegressionResult {
        column_labels: design.labels.clone(),
        coef: fit.coef,
        residuals: fit.residuals,
        bread: fit.bread,
        hac_cov: None,
        hac_bandwidth: None,
        n,
        r2: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
        rows: design.rows.clone(),
        dropped_controls: design.dropped_controls.clone(),
    })
}
