//! Loading posts, embeddings, transcripts and external series from local
//! files, and building the daily index, exposure series and controls.

mod controls;
mod embeddings;
mod exposure;
mod posts;

pub use controls::{
    calendar_controls, ControlMatrix, LOG1P_POST_COUNT, POST_COUNT, POST_INAUGURATION,
};
pub use embeddings::{
    corpus_hash, join_embeddings, load_embeddings, verify_embedding_file, write_embeddings,
    EmbeddingFile, EmbeddingFormat, VerifyReport,
};
pub use exposure::{
    load_external_series, load_transcripts, mean_exposure, transcript_density, transcript_hits,
    zscore_full_sample, ExposureSeries, TranscriptDay,
};
pub use posts::{bucket_daily, load_posts, parse_timezone, DailyBucket, PostRecord};
