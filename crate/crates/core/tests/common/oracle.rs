//! Brute-force reference computations, kept independent of the library code.

use nalgebra::DMatrix;
use novelty_core::novelty::{EmbeddingMatrix, WithinSample};

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean of `f` over ordered pairs; the diagonal is included for the
/// V-statistic and excluded for the U-statistic.
pub fn ordered_mean(xs: &[Vec<f64>], f: &dyn Fn(&[f64], &[f64]) -> f64, conv: WithinSample) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j && conv == WithinSample::UStatistic {
                continue;
            }
            total += f(&xs[i], &xs[j]);
            count += 1;
        }
    }
    if count == 0 {
        f(&xs[0], &xs[0])
    } else {
        total / count as f64
    }
}

pub fn cross_mean(a: &[Vec<f64>], b: &[Vec<f64>], f: &dyn Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += f(x, y);
        }
    }
    total / (a.len() * b.len()) as f64
}

pub fn energy(a: &[Vec<f64>], b: &[Vec<f64>], conv: WithinSample) -> f64 {
    2.0 * cross_mean(a, b, &dist) - ordered_mean(a, &dist, conv) - ordered_mean(b, &dist, conv)
}

/// Median over distinct unordered pairs; even counts average the middle two.
pub fn median_distance(points: &[Vec<f64>]) -> f64 {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in 0..i {
            d.push(dist(&points[i], &points[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2]
    } else {
        (d[n / 2 - 1] + d[n / 2]) / 2.0
    }
}

/// MMD² with γ = 1/(2m²) from the pooled sample; `None` when m = 0.
pub fn mmd2(a: &[Vec<f64>], b: &[Vec<f64>], conv: WithinSample) -> Option<f64> {
    let pooled: Vec<Vec<f64>> = a.iter().chain(b).cloned().collect();
    if pooled.len() < 2 {
        return None;
    }
    let m = median_distance(&pooled);
    if m == 0.0 {
        return None;
    }
    let gamma = 1.0 / (2.0 * m * m);
    let k = move |x: &[f64], y: &[f64]| (-gamma * dist(x, y).powi(2)).exp();
    Some(ordered_mean(a, &k, conv) + ordered_mean(b, &k, conv) - 2.0 * cross_mean(a, b, &k))
}

/// Newey–West covariance for a two-column design: Ω as an unrestricted
/// double sum over (t, s) with weight w(|t−s|), bread by the 2×2 closed form.
pub fn hac_2col(x: &DMatrix<f64>, e: &[f64], h: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    assert_eq!(k, 2);
    let mut omega = DMatrix::zeros(2, 2);
    for t in 0..n {
        for s in 0..n {
            let lag = t.abs_diff(s);
            if lag > h {
                continue;
            }
            let w = 1.0 - lag as f64 / (h as f64 + 1.0);
            for i in 0..2 {
                for j in 0..2 {
                    omega[(i, j)] += w * e[t] * e[s] * x[(t, i)] * x[(s, j)];
                }
            }
        }
    }
    let xtx = x.transpose() * x;
    let det = xtx[(0, 0)] * xtx[(1, 1)] - xtx[(0, 1)] * xtx[(1, 0)];
    let inv = DMatrix::from_row_slice(
        2,
        2,
        &[xtx[(1, 1)] / det, -xtx[(0, 1)] / det, -xtx[(1, 0)] / det, xtx[(0, 0)] / det],
    );
    &inv * omega * &inv
}

/// The heteroskedasticity-only sandwich built row by row.
pub fn hc0(x: &DMatrix<f64>, e: &[f64]) -> DMatrix<f64> {
    let k = x.ncols();
    let mut meat = DMatrix::zeros(k, k);
    for t in 0..x.nrows() {
        let row = x.row(t).transpose();
        meat += &row * row.transpose() * (e[t] * e[t]);
    }
    let bread = (x.transpose() * x).try_inverse().unwrap();
    &bread * meat * &bread
}

/// Sample covariance with the n − 1 divisor.
pub fn covariance(m: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (m.rows(), m.dim());
    let mean: Vec<f64> = (0..d).map(|j| m.iter_rows().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| m.iter_rows().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}
