//! Deterministic synthetic corpora shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;
pub mod sim;

use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use novelty_core::ingest::{write_embeddings, EmbeddingFile, EmbeddingFormat};
use novelty_core::novelty::{EmbeddingMatrix, Stage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

pub const TOY_DIM: usize = 6;

pub const TOY_CONFIG: &str = r#"timezone = "America/New_York"
inauguration_date = "2025-01-20"
output_dir = "out"
seed = 7

[inputs]
posts = "posts.jsonl"
embeddings = "embeddings.tsv"

[novelty.primary]
metric = "energy"
window_days = 5

[novelty.alternative]
metric = "mmd2"
window_days = 10

[[exposures]]
name = "fox"
role = "primary"
kind = "transcript_density"
path = "fox.csv"

[[exposures]]
name = "cnn"
role = "alternative"
kind = "transcript_density"
path = "cnn.csv"

[[exposures]]
name = "cable"
role = "alternative"
kind = "mean"
of = ["fox", "cnn"]

[[exposures]]
name = "weather"
role = "placebo"
kind = "external"
path = "weather.csv"

[[exposures]]
name = "sports"
role = "placebo"
kind = "external"
path = "sports_missing.csv"

[regression]
p = 1
q_grid = [0, 1]
main_q = 1
leads = 1
hac_bandwidth = 2
controls = { columns = ["post_inauguration", "log1p_post_count"] }

[irf]
min_horizon = -2
max_horizon = 3
windows = [[0, 1], [0, 3]]
pretrend_horizons = [-2, -1]

[falsification]
shuffle_placebo = true
"#;

/// Files of a synthetic corpus, in write order.
pub struct ToyCorpus {
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub start: NaiveDate,
    pub days: usize,
}

impl ToyCorpus {
    pub fn write_to(&self, dir: &Path) {
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes).unwrap();
        }
    }

    pub fn file(&self, name: &str) -> &[u8] {
        &self.files.iter().find(|(n, _)| *n == name).unwrap().1
    }
}

/// Posts whose embeddings drift with the previous days' primary exposure.
///
/// Day 5 has no posts, and one post per week lands after midnight UTC but
/// before midnight Eastern, so it belongs to the previous local day.
pub fn toy_corpus(days: usize, start: NaiveDate, seed: u64, config: &str) -> ToyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();

    let fox: Vec<f64> = (0..days).map(|_| rng.random_range(0.5..4.0)).collect();
    let cnn: Vec<f64> = fox.iter().map(|f| 0.6 * f + rng.random_range(0.0..1.5)).collect();

    let mut posts = String::new();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut drift = vec![0.0; TOY_DIM];
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let lagged = if d > 0 { fox[d - 1] } else { fox[0] };
        for (k, x) in drift.iter_mut().enumerate() {
            *x = 0.7 * *x + 0.15 * lagged * if k % 2 == 0 { 1.0 } else { -1.0 } + 0.1 * noise.sample(&mut rng);
        }
        let count = if d == 5 { 0 } else { rng.random_range(2..=8) };
        for j in 0..count {
            let id = format!("p{:05}", ids.len());
            let midday = Utc.from_utc_datetime(&date.and_hms_opt(14, 0, 0).unwrap());
            let ts = if j == 0 && d % 7 == 3 {
                // 03:30 UTC next day is still `date` in New York.
                midday + Duration::minutes(13 * 60 + 30)
            } else {
                midday + Duration::minutes(37 * j as i64)
            };
            posts.push_str(&format!(
                "{{\"id\":\"{id}\",\"created_at\":\"{}\",\"content\":\"post {j} on day {d}\"}}\n",
                ts.format("%Y-%m-%dT%H:%M:%SZ")
            ));
            rows.push(
                drift
                    .iter()
                    .map(|m| m + noise.sample(&mut rng))
                    .map(|v| (v * 1e6_f64).round() / 1e6)
                    .collect::<Vec<f64>>(),
            );
            ids.push(id);
        }
    }

    let corpus_hash = hex::encode(Sha256::digest(posts.as_bytes()));
    let file = EmbeddingFile {
        ids,
        corpus_hash,
        model: Some("toy-gaussian".into()),
        matrix: EmbeddingMatrix::from_rows(&rows, Stage::Raw).unwrap(),
    };
    let tmp = tempfile::tempdir().unwrap();
    let emb_path = tmp.path().join("e.tsv");
    write_embeddings(&emb_path, &file, EmbeddingFormat::Text).unwrap();
    let embeddings = fs::read(&emb_path).unwrap();

    let transcripts = |density: &[f64], words_base: u64| {
        let mut s = String::from("date,hits,words,shows,shows_with_hits\n");
        for (d, dens) in density.iter().enumerate() {
            let words = words_base + 100 * (d as u64 % 5);
            let hits = (dens * words as f64 / 1000.0).round() as u64;
            s.push_str(&format!(
                "{},{hits},{words},12,{}\n",
                start + Duration::days(d as i64),
                hits.min(12)
            ));
        }
        s.into_bytes()
    };
    let fox_csv = transcripts(&fox, 20_000);
    let cnn_csv = transcripts(&cnn, 18_000);

    let mut weather = String::from("date,value\n");
    for d in 0..days {
        let v: f64 = rng.random_range(-10.0..25.0);
        weather.push_str(&format!("{},{v:.3}\n", start + Duration::days(d as i64)));
    }

    ToyCorpus {
        files: vec![
            ("config.toml", config.as_bytes().to_vec()),
            ("posts.jsonl", posts.into_bytes()),
            ("embeddings.tsv", embeddings),
            ("fox.csv", fox_csv),
            ("cnn.csv", cnn_csv),
            ("weather.csv", weather.into_bytes()),
        ],
        start,
        days,
    }
}

pub fn toy40() -> ToyCorpus {
    toy_corpus(40, NaiveDate::from_ymd_opt(2024, 12, 28).unwrap(), 40, TOY_CONFIG)
}

pub fn fixture_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy40")
}

/// Copies the committed golden fixture into a fresh directory.
pub fn copy_fixture(dest: &Path) {
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), dest.join(entry.file_name())).unwrap();
        }
    }
}
