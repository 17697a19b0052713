use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ControlMatrix;

/// Which control columns enter a regression.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSelection {
    #[default]
    All,
    None,
    Columns(Vec<String>),
}

/// ARDL specification: `p` outcome lags, exposure lags `0..=q`, `leads`
/// exposure leads and a Newey–West bandwidth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub p: usize,
    pub q: usize,
    #[serde(default)]
    pub leads: usize,
    #[serde(default = "default_bandwidth")]
    pub hac_bandwidth: usize,
    #[serde(default)]
    pub controls: ControlSelection,
    #[serde(default)]
    pub include_trend: bool,
}

fn default_bandwidth() -> usize {
    7
}

impl RegressionSpec {
    pub fn new(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            leads: 0,
            hac_bandwidth: default_bandwidth(),
            controls: ControlSelection::All,
            include_trend: false,
        }
    }

    pub fn with_leads(mut self, leads: usize) -> Self {
        self.leads = leads;
        self
    }

    pub fn with_controls(mut self, controls: ControlSelection) -> Self {
        self.controls = controls;
        self
    }

    /// Short identifier such as `p7_q3_L0_H7`.
    pub fn id(&self) -> String {
        let mut id = format!("p{}_q{}_L{}_H{}", self.p, self.q, self.leads, self.hac_bandwidth);
        if self.include_trend {
            id.push_str("_trend");
        }
        id
    }

    pub(crate) fn exposure_terms(&self) -> Vec<i64> {
        (0..=self.q as i64)
            .map(|j| -j)
            .chain((1..=self.leads as i64).map(|h| h))
            .collect()
    }
}

pub const INTERCEPT: &str = "const";
pub const TREND: &str = "trend";

pub fn y_lag_label(i: usize) -> String {
    format!("y_lag{i}")
}

/// Label for the exposure at `t + offset`.
pub fn exposure_label(offset: i64) -> String {
    if offset <= 0 {
        format!("e_lag{}", -offset)
    } else {
        format!("e_lead{offset}")
    }
}

/// Aligned regression design after listwise deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub labels: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Positions in the daily index of the retained rows, ascending.
    pub rows: Vec<usize>,
    /// Control columns removed because they are constant on the retained rows.
    pub dropped_controls: Vec<String>,
}

impl Design {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Inputs for the general aligned-design builder.
pub(crate) struct Layout<'a> {
    /// Left-hand side indexed by the regressor date `t`.
    pub outcome: &'a [Option<f64>],
    /// Series whose lags `1..=y_lags` enter as regressors.
    pub y: &'a [Option<f64>],
    pub y_lags: usize,
    pub exposure: &'a [Option<f64>],
    /// Offsets `k` for the regressors `E_{t+k}`.
    pub exposure_offsets: &'a [i64],
    pub controls: &'a ControlMatrix,
    pub trend: bool,
}

fn at(series: &[Option<f64>], t: usize, offset: i64) -> Option<f64> {
    let i = t as i64 + offset;
    if i < 0 || i as usize >= series.len() {
        None
    } else {
        series[i as usize]
    }
}

pub(crate) fn assemble(layout: &Layout<'_>) -> Result<Design> {
    let len = layout.outcome.len();
    if layout.y.len() != len || layout.exposure.len() != len || layout.controls.len() != len {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: outcome {len}, y {}, exposure {}, controls {}",
            layout.y.len(),
            layout.exposure.len(),
            layout.controls.len()
        )));
    }

    let mut labels = vec![INTERCEPT.to_string()];
    labels.extend((1..=layout.y_lags).map(y_lag_label));
    labels.extend(layout.exposure_offsets.iter().map(|&k| exposure_label(k)));
    let control_start = labels.len();
    labels.extend(layout.controls.labels.iter().cloned());
    if layout.trend {
        labels.push(TREND.into());
    }

    let mut rows = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    'rows: for t in 0..len {
        let Some(lhs) = layout.outcome[t] else { continue };
        let mut row = Vec::with_capacity(labels.len());
        row.push(1.0);
        for i in 1..=layout.y_lags {
            match at(layout.y, t, -(i as i64)) {
                Some(v) => row.push(v),
                None => continue 'rows,
            }
        }
        for &k in layout.exposure_offsets {
            match at(layout.exposure, t, k) {
                Some(v) => row.push(v),
                None => continue 'rows,
            }
        }
        row.extend_from_slice(layout.controls.row(t));
        if layout.trend {
            row.push(t as f64);
        }
        rows.push(t);
        data.push(row);
        y.push(lhs);
    }

    // Control columns constant over the retained rows duplicate the intercept.
    let control_end = control_start + layout.controls.labels.len();
    let mut keep: Vec<usize> = Vec::with_capacity(labels.len());
    let mut dropped_controls = Vec::new();
    for j in 0..labels.len() {
        let is_control = (control_start..control_end).contains(&j);
        let constant = data.first().is_some_and(|first| data.iter().all(|r| r[j] == first[j]));
        if is_control && constant {
            dropped_controls.push(labels[j].clone());
        } else {
            keep.push(j);
        }
    }

    let n = data.len();
    let k = keep.len();
    if n < k {
        return Err(Error::Underdetermined { rows: n, cols: k });
    }
    let x = DMatrix::from_fn(n, k, |i, c| data[i][keep[c]]);
    Ok(Design {
        labels: keep.iter().map(|&j| labels[j].clone()).collect(),
        x,
        y,
        rows,
        dropped_controls,
    })
}

/// Selects the control columns named by `selection`.
pub(crate) fn select_controls(controls: &ControlMatrix, selection: &ControlSelection) -> Result<ControlMatrix> {
    match selection {
        ControlSelection::All => Ok(controls.clone()),
        ControlSelection::None => Ok(ControlMatrix::empty(&controls.dates)),
        ControlSelection::Columns(cols) => controls.select(cols),
    }
}

/// ARDL design: intercept, outcome lags `1..=p`, exposure lags `0..=q`,
/// exposure leads `1..=L`, controls, optional linear trend.
pub fn build_design(
    y: &[Option<f64>],
    exposure: &[Option<f64>],
    controls: &ControlMatrix,
    spec: &RegressionSpec,
) -> Result<Design> {
    let controls = select_controls(controls, &spec.controls)?;
    assemble(&Layout {
        outcome: y,
        y,
        y_lags: spec.p,
        exposure,
        exposure_offsets: &spec.exposure_terms(),
        controls: &controls,
        trend: spec.include_trend,
    })
}
