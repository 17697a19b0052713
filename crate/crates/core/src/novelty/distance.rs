//! Two-sample distances between sets of embedding vectors.
//!
//! Both statistics are built from three pairwise means: within the first
//! sample, within the second, and across. How the within-sample means treat
//! self-pairs is set by [`WithinSample`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Convention for within-sample pair means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithinSample {
    /// Mean over all ordered pairs including self-pairs. Energy distance is
    /// then nonnegative and identical samples score exactly zero.
    #[default]
    VStatistic,
    /// Mean over distinct unordered pairs. A singleton's within term is
    /// `0` for energy distance and `k(x, x) = 1` for MMD².
    UStatistic,
}

/// Mapping from the median pairwise distance `m` to the RBF `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// `γ = 1 / (2 m²)`
    #[default]
    HalfInverseSquare,
    /// `γ = 1 / m²`
    InverseSquare,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check(a: &[&[f64]], b: &[&[f64]]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    Ok(())
}

/// Within-sample mean of `f`; `self_value` is `f(x, x)`.
fn within_mean(xs: &[&[f64]], f: impl Fn(&[f64], &[f64]) -> f64, self_value: f64, conv: WithinSample) -> f64 {
    let n = xs.len();
    let mut off_diagonal = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            off_diagonal += f(xs[i], xs[j]);
        }
    }
    let nf = n as f64;
    match conv {
        WithinSample::VStatistic => (nf * self_value + 2.0 * off_diagonal) / (nf * nf),
        WithinSample::UStatistic if n < 2 => self_value,
        WithinSample::UStatistic => off_diagonal / (nf * (nf - 1.0) / 2.0),
    }
}

fn cross_mean(a: &[&[f64]], b: &[&[f64]], f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += f(x, y);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Energy distance `2 E‖a−b‖ − E‖a−a'‖ − E‖b−b'‖` with the default
/// (V-statistic) within-sample convention.
pub fn energy_distance(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    energy_distance_with(a, b, WithinSample::default())
}

pub fn energy_distance_with(a: &[&[f64]], b: &[&[f64]], conv: WithinSample) -> Result<f64> {
    check(a, b)?;
    let cross = cross_mean(a, b, euclidean);
    let wa = within_mean(a, euclidean, 0.0, conv);
    let wb = within_mean(b, euclidean, 0.0, conv);
    Ok(2.0 * cross - wa - wb)
}

/// Median of pairwise distances over distinct unordered pairs of `points`.
pub fn median_pairwise_distance(points: &[&[f64]]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("median heuristic needs at least 2 points".into()));
    }
    let mut d = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d.push(euclidean(points[i], points[j]));
        }
    }
    Ok(stats::median(&mut d))
}

/// RBF bandwidth from the median pairwise distance of the pooled sample.
pub fn median_heuristic_gamma(points: &[&[f64]], rule: GammaRule) -> Result<f64> {
    let m = median_pairwise_distance(points)?;
    if !(m > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(match rule {
        GammaRule::HalfInverseSquare => 1.0 / (2.0 * m * m),
        GammaRule::InverseSquare => 1.0 / (m * m),
    })
}

/// MMD² with an RBF kernel of fixed `gamma`.
pub fn mmd2_with_gamma(a: &[&[f64]], b: &[&[f64]], gamma: f64, conv: WithinSample) -> Result<f64> {
    check(a, b)?;
    let k = |x: &[f64], y: &[f64]| (-gamma * squared(x, y)).exp();
    let cross = cross_mean(a, b, k);
    let wa = within_mean(a, k, 1.0, conv);
    let wb = within_mean(b, k, 1.0, conv);
    Ok(wa + wb - 2.0 * cross)
}

/// MMD² with `γ` set per call by the median heuristic on `a ∪ b`.
pub fn mmd2(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    mmd2_with(a, b, WithinSample::default(), GammaRule::default())
}

pub fn mmd2_with(a: &[&[f64]], b: &[&[f64]], conv: WithinSample, rule: GammaRule) -> Result<f64> {
    check(a, b)?;
    let pooled: Vec<&[f64]> = a.iter().chain(b).copied().collect();
    let gamma = median_heuristic_gamma(&pooled, rule)?;
    mmd2_with_gamma(a, b, gamma, conv)
}
