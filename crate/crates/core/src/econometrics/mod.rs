//! ARDL regressions with Newey–West inference, local projections, pre-trend
//! tests and unit-root / stationarity diagnostics.
//!
//! P-values use the normal and χ² limiting distributions.

mod design;
mod hac;
mod inference;
mod ols;
mod projection;
mod stationarity;

pub use design::{
    build_design, exposure_label, y_lag_label, ControlSelection, Design, RegressionSpec, INTERCEPT,
    TREND,
};
pub use hac::{bartlett_weight, hac_covariance, newey_west_meat};
pub use inference::{
    exposure_lag_labels, exposure_lead_labels, fit_ardl, linear_combo, sum_weights, wald_zero,
    ArdlFit, LinearComboTest, WaldTest,
};
pub use ols::{ols, RegressionResult, COLLINEARITY_TOLERANCE};
pub use projection::{
    cumulative_lp, impulse_response, joint_pretrend_wald, local_projection, IrfResult,
    PretrendTest, ProjectionEstimate,
};
pub use stationarity::{
    adf_test, kpss_bandwidth, kpss_test, stationarity_report, AdfResult, CriticalValues,
    Deterministic, KpssResult, Significance, StationarityReport, ADF_MAX_LAG, MIN_LENGTH,
};
