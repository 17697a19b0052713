use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::{Error, Result};

const WEEKDAYS: [(Weekday, &str); 6] = [
    (Weekday::Mon, "dow_mon"),
    (Weekday::Tue, "dow_tue"),
    (Weekday::Wed, "dow_wed"),
    (Weekday::Thu, "dow_thu"),
    (Weekday::Fri, "dow_fri"),
    (Weekday::Sat, "dow_sat"),
];

pub const POST_INAUGURATION: &str = "post_inauguration";
pub const POST_COUNT: &str = "post_count";
pub const LOG1P_POST_COUNT: &str = "log1p_post_count";

/// Per-day control columns aligned with the analysis index.
///
/// Sunday and January are the omitted reference categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMatrix {
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ControlMatrix {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Appends same-day posting intensity: the raw count and `ln(1 + count)`.
    pub fn with_intensity(mut self, post_counts: &[usize]) -> Result<Self> {
        if post_counts.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                found: post_counts.len(),
            });
        }
        self.labels.push(POST_COUNT.into());
        self.labels.push(LOG1P_POST_COUNT.into());
        for (row, &c) in self.rows.iter_mut().zip(post_counts) {
            row.push(c as f64);
            row.push((c as f64).ln_1p());
        }
        Ok(self)
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, labels: &[String]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown control column {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dates: self.dates.clone(),
            labels: labels.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }

    /// Builds a matrix from named columns, each one value per date.
    pub fn from_columns(dates: &[NaiveDate], columns: &[(String, Vec<f64>)]) -> Result<Self> {
        for (label, col) in columns {
            if col.len() != dates.len() {
                return Err(Error::InvalidArgument(format!(
                    "control {label:?} has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
        }
        Ok(Self {
            dates: dates.to_vec(),
            labels: columns.iter().map(|(l, _)| l.clone()).collect(),
            rows: (0..dates.len()).map(|t| columns.iter().map(|(_, c)| c[t]).collect()).collect(),
        })
    }

    /// A control matrix with no columns, for regressions without controls.
    pub fn empty(dates: &[NaiveDate]) -> Self {
        Self {
            dates: dates.to_vec(),
            labels: Vec::new(),
            rows: vec![Vec::new(); dates.len()],
        }
    }
}

/// Day-of-week and month-of-year dummies plus the post-inauguration indicator
/// (1 on and after `inauguration`).
pub fn calendar_controls(dates: &[NaiveDate], inauguration: NaiveDate) -> Result<ControlMatrix> {
    for w in dates.windows(2) {
        if w[0].succ_opt() != Some(w[1]) {
            return Err(Error::InvalidArgument(format!(
                "daily index is not contiguous between {} and {}",
                w[0], w[1]
            )));
        }
    }
    let mut labels: Vec<String> = WEEKDAYS.iter().map(|(_, l)| l.to_string()).collect();
    labels.extend((2..=12).map(|m| format!("month_{m:02}")));
    labels.push(POST_INAUGURATION.into());

    let rows = dates
        .iter()
        .map(|d| {
            let mut row = Vec::with_capacity(labels.len());
            row.extend(WEEKDAYS.iter().map(|(w, _)| f64::from(u8::from(d.weekday() == *w))));
            row.extend((2..=12).map(|m| f64::from(u8::from(d.month() == m))));
            row.push(f64::from(u8::from(*d >= inauguration)));
            row
        })
        .collect();
    Ok(ControlMatrix {
        dates: dates.to_vec(),
        labels,
        rows,
    })
}
