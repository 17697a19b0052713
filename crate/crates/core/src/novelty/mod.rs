//! Embedding preprocessing and the daily distributional-novelty series.

mod daily;
mod distance;
mod matrix;
mod whitening;

pub use daily::{
    daily_novelty, gate_for, standardize_novelty, Gate, Metric, NoveltyConfig, NoveltyDay,
    NoveltySeries,
};
pub use distance::{
    energy_distance, energy_distance_with, euclidean, median_heuristic_gamma,
    median_pairwise_distance, mmd2, mmd2_with, mmd2_with_gamma, GammaRule, WithinSample,
};
pub use matrix::{EmbeddingMatrix, Stage};
pub use whitening::{
    apply_whitener, fit_whitener, prepare_embeddings, unit_normalize, WhiteningModel,
    RELATIVE_SINGULAR_CUTOFF,
};
