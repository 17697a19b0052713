use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{
    energy_distance_with, median_heuristic_gamma, mmd2_with_gamma, GammaRule, WithinSample,
};
use super::matrix::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::ingest::DailyBucket;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Energy,
    Mmd2,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Energy => "energy",
            Metric::Mmd2 => "mmd2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PartialNoveltyConfig")]
pub struct NoveltyConfig {
    pub metric: Metric,
    /// Trailing reference window: days `t-W ..= t-1`.
    pub window_days: usize,
    pub min_day_posts: usize,
    pub min_ref_posts: usize,
    pub within: WithinSample,
    pub gamma_rule: GammaRule,
}

/// Omitted fields take the defaults of the chosen metric.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialNoveltyConfig {
    #[serde(default)]
    metric: Option<Metric>,
    window_days: Option<usize>,
    min_day_posts: Option<usize>,
    min_ref_posts: Option<usize>,
    within: Option<WithinSample>,
    gamma_rule: Option<GammaRule>,
}

impl From<PartialNoveltyConfig> for NoveltyConfig {
    fn from(p: PartialNoveltyConfig) -> Self {
        let base = match p.metric.unwrap_or(Metric::Energy) {
            Metric::Energy => Self::energy(),
            Metric::Mmd2 => Self::mmd2(),
        };
        Self {
            metric: base.metric,
            window_days: p.window_days.unwrap_or(base.window_days),
            min_day_posts: p.min_day_posts.unwrap_or(base.min_day_posts),
            min_ref_posts: p.min_ref_posts.unwrap_or(base.min_ref_posts),
            within: p.within.unwrap_or(base.within),
            gamma_rule: p.gamma_rule.unwrap_or(base.gamma_rule),
        }
    }
}

impl NoveltyConfig {
    pub fn energy() -> Self {
        Self {
            metric: Metric::Energy,
            window_days: 7,
            min_day_posts: 3,
            min_ref_posts: 10,
            within: WithinSample::default(),
            gamma_rule: GammaRule::default(),
        }
    }

    pub fn mmd2() -> Self {
        Self {
            metric: Metric::Mmd2,
            window_days: 30,
            ..Self::energy()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 || self.min_day_posts == 0 || self.min_ref_posts == 0 {
            return Err(Error::Config(
                "novelty window and thresholds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Ok,
    LowSample,
    ZeroPost,
}

impl Gate {
    pub fn as_str(self) -> &'static str {
        match self {
            Gate::Ok => "ok",
            Gate::LowSample => "low_sample",
            Gate::ZeroPost => "zero_post",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyDay {
    pub date: NaiveDate,
    pub value: Option<f64>,
    pub z: Option<f64>,
    pub day_posts: usize,
    pub ref_posts: usize,
    pub gate: Gate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltySeries {
    pub metric: Metric,
    pub days: Vec<NoveltyDay>,
}

impl NoveltySeries {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.days.iter().map(|d| d.date).collect()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.days.iter().map(|d| d.value).collect()
    }

    pub fn z_values(&self) -> Vec<Option<f64>> {
        self.days.iter().map(|d| d.z).collect()
    }

    pub fn post_counts(&self) -> Vec<usize> {
        self.days.iter().map(|d| d.day_posts).collect()
    }
}

/// Gate for a day given its own and its reference window's post counts.
pub fn gate_for(day_posts: usize, ref_posts: usize, config: &NoveltyConfig) -> Gate {
    if day_posts == 0 {
        Gate::ZeroPost
    } else if day_posts < config.min_day_posts || ref_posts < config.min_ref_posts {
        Gate::LowSample
    } else {
        Gate::Ok
    }
}

/// Day-level distributional distance between each day's posts and the posts
/// of the trailing window.
///
/// `embeddings` should be whitened and unit-normalized. Days are evaluated in
/// parallel; the result order follows `buckets`.
pub fn daily_novelty(
    buckets: &[DailyBucket],
    embeddings: &EmbeddingMatrix,
    config: &NoveltyConfig,
) -> Result<NoveltySeries> {
    config.validate()?;
    if let Some(bad) = buckets
        .iter()
        .flat_map(|b| &b.embedding_rows)
        .find(|&&r| r >= embeddings.rows())
    {
        return Err(Error::InvalidArgument(format!(
            "bucket references embedding row {bad} but the matrix has {} rows",
            embeddings.rows()
        )));
    }

    let days = (0..buckets.len())
        .into_par_iter()
        .map(|t| {
            let bucket = &buckets[t];
            let window = &buckets[t.saturating_sub(config.window_days)..t];
            let ref_posts: usize = window.iter().map(|b| b.post_count).sum();
            let gate = gate_for(bucket.post_count, ref_posts, config);
            let value = if gate == Gate::Ok {
                let a: Vec<&[f64]> = bucket.embedding_rows.iter().map(|&r| embeddings.row(r)).collect();
                let b: Vec<&[f64]> = window
                    .iter()
                    .flat_map(|w| &w.embedding_rows)
                    .map(|&r| embeddings.row(r))
                    .collect();
                Some(distance(&a, &b, config)?)
            } else {
                None
            };
            Ok(NoveltyDay {
                date: bucket.date,
                value,
                z: None,
                day_posts: bucket.post_count,
                ref_posts,
                gate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoveltySeries {
        metric: config.metric,
        days,
    })
}

fn distance(a: &[&[f64]], b: &[&[f64]], config: &NoveltyConfig) -> Result<f64> {
    match config.metric {
        Metric::Energy => energy_distance_with(a, b, config.within),
        Metric::Mmd2 => {
            let pooled: Vec<&[f64]> = a.iter().chain(b).copied().collect();
            match median_heuristic_gamma(&pooled, config.gamma_rule) {
                Ok(gamma) => mmd2_with_gamma(a, b, gamma, config.within),
                // Every pooled point coincides, so the two samples are identical.
                Err(Error::DegenerateBandwidth) => Ok(0.0),
                Err(e) => Err(e),
            }
        }
    }
}

/// Z-scores the novelty values over gated-ok days.
pub fn standardize_novelty(series: &mut NoveltySeries) -> Result<()> {
    let z = stats::zscore(&series.values())?;
    for (day, z) in series.days.iter_mut().zip(z) {
        day.z = z;
    }
    Ok(())
}
