//! Config-driven runs that write a provenance-stamped output bundle.

mod analysis;
mod bundle;
mod config;
mod stages;

pub use analysis::{
    load_corpus, load_exposure, novelty_series, shuffled_exposure, Analysis, Corpus, Diagnostics,
    EffectRow, Estimand, IrfBundle, PostsPerDay, ReportOrError, RowOutcome, TopDay,
};
pub use bundle::{
    fmt_num, fmt_p, BundleWriter, Cell, Provenance, ResultBundle, Table, SOFTWARE_VERSION,
};
pub use config::{
    input_hashes, ExposureConfig, ExposureRole, ExposureSource, FalsificationSection, Inputs,
    IrfSection, NoveltySection, RegressionSection, RunConfig, ValidationReport,
};
pub use stages::{
    novelty_table, run, run_diagnostics, run_exposure_grid, run_falsification, run_main,
    spec_record, Command,
};
