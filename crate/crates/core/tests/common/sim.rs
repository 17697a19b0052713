//! Seeded data-generating processes for the simulation suites.

use chrono::{Days, NaiveDate};
use novelty_core::ingest::{ControlMatrix, DailyBucket};
use novelty_core::novelty::{unit_normalize, EmbeddingMatrix, Stage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    (0..n).map(|i| start + chrono::Duration::days(i as i64)).collect()
}

pub fn no_controls(n: usize) -> ControlMatrix {
    ControlMatrix::empty(&dates(n))
}

pub fn some(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

pub const BURN_IN: usize = 50;

/// `E` is AR(1) with coefficient `rho`; `Y_t = a·Y_{t−1} + Σ_j b_j E_{t−j} + ε`.
pub fn ardl_dgp(seed: u64, n: usize, a: f64, b: &[f64], rho: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let total = n + BURN_IN;
    let u = normals(&mut r, total);
    let eps = normals(&mut r, total);
    let mut e = vec![0.0; total];
    for t in 1..total {
        e[t] = rho * e[t - 1] + u[t];
    }
    let mut y = vec![0.0; total];
    for t in 1..total {
        let mut v = a * y[t - 1] + eps[t];
        for (j, bj) in b.iter().enumerate() {
            if t >= j {
                v += bj * e[t - j];
            }
        }
        y[t] = v;
    }
    (y[BURN_IN..].to_vec(), e[BURN_IN..].to_vec())
}

/// The headline recovery design: true β_sum = 0.28.
pub const RECOVERY_B: [f64; 4] = [0.10, 0.08, 0.06, 0.04];

pub fn recovery_dgp(seed: u64) -> (Vec<f64>, Vec<f64>) {
    recovery_dgp_n(seed, 300)
}

pub fn recovery_dgp_n(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    ardl_dgp(seed, n, 0.3, &RECOVERY_B, 0.0)
}

pub fn random_walk(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    normals(&mut r, n)
        .into_iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

pub fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let mut r = rng(seed);
    let v = normals(&mut r, n + BURN_IN);
    let mut x = vec![0.0; n + BURN_IN];
    for t in 1..x.len() {
        x[t] = phi * x[t - 1] + v[t];
    }
    x[BURN_IN..].to_vec()
}

/// Correlated Gaussian rows with a shared offset, for whitening checks.
pub fn random_matrix(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mix: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|_| {
            let z = normals(&mut r, d);
            (0..d)
                .map(|j| 3.0 + (0..d).map(|k| z[k] * mix[k][j]).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Consecutive daily buckets from 2025-03-01 holding `counts[i]` rows each.
pub fn buckets(counts: &[usize]) -> Vec<DailyBucket> {
    let d0 = NaiveDate::from_ymd_opt(2025, 3, 1).unwrap();
    let mut next = 0;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let rows: Vec<usize> = (next..next + c).collect();
            next += c;
            DailyBucket {
                date: d0 + Days::new(i as u64),
                post_count: c,
                embedding_rows: rows,
            }
        })
        .collect()
}

pub fn unit_cloud(seed: u64, n: usize, d: usize) -> EmbeddingMatrix {
    let raw = EmbeddingMatrix::from_rows(&random_matrix(seed, n, d), Stage::Raw).unwrap();
    unit_normalize(&raw).unwrap()
}
