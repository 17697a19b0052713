//! Day-level distributional novelty of an embedded text corpus and the
//! dynamic response of that novelty to media-attention exposure.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ingest`]: posts, embeddings, transcripts and external series from local
//!   files; daily buckets, exposure series and calendar controls.
//! - [`novelty`]: whitening, unit normalization, energy distance / MMD², and
//!   the gated daily novelty series.
//! - [`econometrics`]: ARDL regressions with Newey–West inference, local
//!   projections, pre-trend Wald tests and stationarity diagnostics.
//! - [`pipeline`]: config-driven orchestration producing result bundles.

pub mod econometrics;
pub mod error;
pub mod ingest;
pub mod novelty;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};
