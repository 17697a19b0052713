//! In-memory analyses behind each pipeline command.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ExposureRole, ExposureSource, RunConfig};
use crate::econometrics::{
    cumulative_lp, fit_ardl, impulse_response, joint_pretrend_wald, stationarity_report, ArdlFit,
    ControlSelection, Deterministic, IrfResult, LinearComboTest, PretrendTest, ProjectionEstimate,
    RegressionSpec, StationarityReport,
};
use crate::error::{Error, Result};
use crate::ingest::{
    bucket_daily, calendar_controls, corpus_hash, join_embeddings, load_embeddings,
    load_external_series, load_posts, load_transcripts, mean_exposure, transcript_density,
    transcript_hits, ControlMatrix, DailyBucket, ExposureSeries,
};
use crate::novelty::{
    daily_novelty, prepare_embeddings, standardize_novelty, EmbeddingMatrix, Gate, NoveltyConfig,
    NoveltySeries,
};
use crate::stats;

/// Posts joined to whitened, unit-normalized embeddings on a daily index.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub buckets: Vec<DailyBucket>,
    pub embeddings: EmbeddingMatrix,
    pub raw_dim: usize,
    pub whitened_components: usize,
    pub post_total: usize,
    pub index: Vec<NaiveDate>,
    /// Calendar dummies, post-inauguration indicator and posting intensity.
    pub controls: ControlMatrix,
}

pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let posts_path = cfg.resolve(&cfg.inputs.posts);
    let mut posts = load_posts(&posts_path, &cfg.timezone)?;
    let file = load_embeddings(cfg.resolve(&cfg.inputs.embeddings))?;
    let expected = if cfg.inputs.verify_corpus_hash {
        Some(corpus_hash(&posts_path)?)
    } else {
        None
    };
    join_embeddings(&mut posts, &file, expected.as_deref())?;
    let buckets = bucket_daily(&posts, &cfg.timezone)?;
    let (model, embeddings) = prepare_embeddings(&file.matrix)?;
    let index: Vec<NaiveDate> = buckets.iter().map(|b| b.date).collect();
    let counts: Vec<usize> = buckets.iter().map(|b| b.post_count).collect();
    let controls = calendar_controls(&index, cfg.inauguration_date)?.with_intensity(&counts)?;
    info!(
        "corpus: {} posts over {} days, {} of {} whitened components kept",
        posts.len(),
        index.len(),
        model.components(),
        model.dim()
    );
    Ok(Corpus {
        buckets,
        embeddings,
        raw_dim: model.dim(),
        whitened_components: model.components(),
        post_total: posts.len(),
        index,
        controls,
    })
}

/// Gated and standardized novelty series for one configuration.
pub fn novelty_series(corpus: &Corpus, config: &NoveltyConfig) -> Result<NoveltySeries> {
    let mut series = daily_novelty(&corpus.buckets, &corpus.embeddings, config)?;
    standardize_novelty(&mut series)?;
    Ok(series)
}

/// Loads an exposure's raw series, following `mean` references.
pub fn load_exposure(cfg: &RunConfig, name: &str) -> Result<ExposureSeries> {
    // Also rejects reference cycles.
    cfg.exposure_files(name)?;
    let exposure = cfg.exposure(name)?;
    match &exposure.source {
        ExposureSource::TranscriptDensity { path } => {
            transcript_density(name, &load_transcripts(cfg.resolve(path))?)
        }
        ExposureSource::TranscriptHits { path } => {
            transcript_hits(name, &load_transcripts(cfg.resolve(path))?)
        }
        ExposureSource::External { path } => load_external_series(cfg.resolve(path), name),
        ExposureSource::Mean { of } => {
            let parts = of
                .iter()
                .map(|p| load_exposure(cfg, p))
                .collect::<Result<Vec<_>>>()?;
            mean_exposure(name, &parts.iter().collect::<Vec<_>>())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    BetaSum,
    DeltaSum,
}

impl Estimand {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimand::BetaSum => "beta_sum",
            Estimand::DeltaSum => "delta_sum",
        }
    }
}

/// One row of an effect table: a fitted ARDL or a skipped entry.
#[derive(Debug, Clone)]
pub struct EffectRow {
    pub label: String,
    pub outcome: String,
    pub exposure: String,
    pub estimand: Estimand,
    pub outcome_kind: RowOutcome,
}

#[derive(Debug, Clone)]
pub enum RowOutcome {
    Fitted(Box<ArdlFit>),
    Skipped(String),
}

impl EffectRow {
    pub fn fit(&self) -> Option<&ArdlFit> {
        match &self.outcome_kind {
            RowOutcome::Fitted(f) => Some(f),
            RowOutcome::Skipped(_) => None,
        }
    }

    pub fn test(&self) -> Option<LinearComboTest> {
        let fit = self.fit()?;
        match self.estimand {
            Estimand::BetaSum => Some(fit.beta_sum),
            Estimand::DeltaSum => fit.delta_sum,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PostsPerDay {
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopDay {
    pub date: NaiveDate,
    pub z: f64,
    pub posts: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ReportOrError {
    Report(StationarityReport),
    Error { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub novelty_metric: &'static str,
    pub days_total: usize,
    pub missing_days: usize,
    pub missing_share: f64,
    /// Days without a novelty value (includes zero-post days).
    pub low_sample_days: usize,
    pub zero_post_days: usize,
    pub posts_per_day: PostsPerDay,
    /// Pearson correlation of standardized novelty with same-day post count;
    /// `None` when either side has zero variance.
    pub corr_novelty_posts: Option<f64>,
    pub corr_degenerate: bool,
    pub top_novelty: Vec<TopDay>,
    /// Series name → deterministic case → report.
    pub stationarity: BTreeMap<String, BTreeMap<&'static str, ReportOrError>>,
}

#[derive(Debug, Clone)]
pub struct IrfBundle {
    pub levels: IrfResult,
    pub cumulative: Vec<ProjectionEstimate>,
    pub windows: Vec<ProjectionEstimate>,
    pub pretrend: PretrendTest,
}

/// Loaded corpus plus the standardized novelty outcome(s).
pub struct Analysis<'a> {
    pub cfg: &'a RunConfig,
    pub corpus: Corpus,
    pub primary: NoveltySeries,
    pub alternative: Option<NoveltySeries>,
}

impl<'a> Analysis<'a> {
    pub fn new(cfg: &'a RunConfig, with_alternative: bool) -> Result<Self> {
        let corpus = load_corpus(cfg).map_err(|e| e.in_stage("ingest"))?;
        let primary = novelty_series(&corpus, &cfg.novelty.primary).map_err(|e| e.in_stage("novelty"))?;
        let alternative = match (&cfg.novelty.alternative, with_alternative) {
            (Some(alt), true) => {
                Some(novelty_series(&corpus, alt).map_err(|e| e.in_stage("novelty"))?)
            }
            _ => None,
        };
        Ok(Self {
            cfg,
            corpus,
            primary,
            alternative,
        })
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &NoveltySeries> {
        std::iter::once(&self.primary).chain(self.alternative.as_ref())
    }

    pub fn controls(&self) -> Result<ControlMatrix> {
        match &self.cfg.regression.controls {
            ControlSelection::All => Ok(self.corpus.controls.clone()),
            ControlSelection::None => Ok(ControlMatrix::empty(&self.corpus.index)),
            ControlSelection::Columns(c) => self.corpus.controls.select(c),
        }
    }

    /// Exposure z-scored over its overlap with the analysis index.
    pub fn exposure(&self, name: &str) -> Result<ExposureSeries> {
        load_exposure(self.cfg, name)?.aligned(&self.corpus.index)
    }

    pub fn primary_exposure(&self) -> Result<ExposureSeries> {
        self.exposure(&self.cfg.primary_exposure()?.name)
    }

    fn fit(&self, outcome: &NoveltySeries, exposure: &ExposureSeries, spec: &RegressionSpec) -> Result<ArdlFit> {
        fit_ardl(&outcome.z_values(), &exposure.z, &self.corpus.controls, spec)
    }

    fn row(
        &self,
        label: String,
        outcome: &NoveltySeries,
        exposure: &ExposureSeries,
        spec: &RegressionSpec,
        estimand: Estimand,
    ) -> Result<EffectRow> {
        let fit = self.fit(outcome, exposure, spec)?;
        Ok(EffectRow {
            label,
            outcome: outcome.metric.name().to_string(),
            exposure: exposure.name.clone(),
            estimand,
            outcome_kind: RowOutcome::Fitted(Box::new(fit)),
        })
    }

    /// The lag-order grid plus the leads row for one outcome and the primary exposure.
    pub fn main_table(&self, outcome: &NoveltySeries) -> Result<Vec<EffectRow>> {
        let exposure = self.primary_exposure()?;
        self.cfg
            .regression
            .spec_grid()
            .iter()
            .map(|spec| {
                if spec.leads > 0 {
                    let label = format!("leads (L={})", spec.leads);
                    self.row(label, outcome, &exposure, spec, Estimand::DeltaSum)
                } else {
                    self.row(format!("q={}", spec.q), outcome, &exposure, spec, Estimand::BetaSum)
                }
            })
            .collect()
    }

    /// Leads placebo for every configured outcome.
    pub fn leads_table(&self) -> Result<Vec<EffectRow>> {
        let r = &self.cfg.regression;
        if r.leads == 0 {
            return Err(Error::Config("regression.leads must be positive for the leads table".into()));
        }
        let exposure = self.primary_exposure()?;
        let spec = r.spec(r.main_q, r.leads);
        self.outcomes()
            .map(|o| {
                let label = format!("{} / {} (q={})", exposure.name, o.metric.name(), r.main_q);
                self.row(label, o, &exposure, &spec, Estimand::DeltaSum)
            })
            .collect()
    }

    fn grid_for_role(&self, role: ExposureRole, include_primary: bool) -> Result<Vec<EffectRow>> {
        let spec = self.cfg.regression.main_spec();
        let mut names: Vec<&str> = Vec::new();
        if include_primary {
            names.push(&self.cfg.primary_exposure()?.name);
        }
        names.extend(self.cfg.exposures_with_role(role).map(|e| e.name.as_str()));
        let mut rows = Vec::new();
        for name in names {
            let missing: Vec<String> = self
                .cfg
                .exposure_files(name)?
                .into_iter()
                .filter(|f| !f.is_file())
                .map(|f| f.strip_prefix(&self.cfg.base_dir).unwrap_or(&f).display().to_string())
                .collect();
            if !missing.is_empty() {
                rows.push(EffectRow {
                    label: name.to_string(),
                    outcome: self.primary.metric.name().to_string(),
                    exposure: name.to_string(),
                    estimand: Estimand::BetaSum,
                    outcome_kind: RowOutcome::Skipped(format!("missing file {}", missing.join(", "))),
                });
                continue;
            }
            let exposure = self.exposure(name)?;
            rows.push(self.row(name.to_string(), &self.primary, &exposure, &spec, Estimand::BetaSum)?);
        }
        Ok(rows)
    }

    /// β_sum for each placebo exposure under the main specification.
    pub fn falsification_table(&self) -> Result<Vec<EffectRow>> {
        let mut rows = self.grid_for_role(ExposureRole::Placebo, false)?;
        if self.cfg.falsification.shuffle_placebo {
            let primary = self.primary_exposure()?;
            let shuffled = shuffled_exposure(&primary, self.cfg.seed)?;
            let spec = self.cfg.regression.main_spec();
            rows.push(self.row(shuffled.name.clone(), &self.primary, &shuffled, &spec, Estimand::BetaSum)?);
        }
        Ok(rows)
    }

    /// β_sum for the primary and each alternative exposure.
    pub fn exposure_table(&self) -> Result<Vec<EffectRow>> {
        self.grid_for_role(ExposureRole::Alternative, true)
    }

    pub fn irf(&self) -> Result<IrfBundle> {
        let exposure = self.primary_exposure()?;
        let y = self.primary.z_values();
        let controls = self.controls()?;
        let (p, h) = (self.cfg.regression.p, self.cfg.regression.hac_bandwidth);
        let irf = &self.cfg.irf;
        let horizons: Vec<i64> = (irf.min_horizon..=irf.max_horizon).collect();
        let levels = impulse_response(&y, &exposure.z, &controls, &horizons, p, h)?;
        let cumulative = (0..=irf.max_horizon.max(0))
            .map(|end| cumulative_lp(&y, &exposure.z, &controls, 0, end, p, h))
            .collect::<Result<Vec<_>>>()?;
        let windows = irf
            .windows
            .iter()
            .map(|&(a, b)| cumulative_lp(&y, &exposure.z, &controls, a, b, p, h))
            .collect::<Result<Vec<_>>>()?;
        let pretrend = joint_pretrend_wald(&y, &exposure.z, &controls, &irf.pretrend_horizons, p, h)?;
        Ok(IrfBundle {
            levels,
            cumulative,
            windows,
            pretrend,
        })
    }

    pub fn diagnostics(&self) -> Result<Diagnostics> {
        let days = &self.primary.days;
        let days_total = days.len();
        let missing_days = days.iter().filter(|d| d.value.is_none()).count();
        let zero_post_days = days.iter().filter(|d| d.gate == Gate::ZeroPost).count();
        let low_sample_days = days.iter().filter(|d| d.gate != Gate::Ok).count();

        let mut counts: Vec<f64> = days.iter().map(|d| d.day_posts as f64).collect();
        counts.sort_by(f64::total_cmp);
        let posts_per_day = PostsPerDay {
            median: stats::quantile_sorted(&counts, 0.5),
            p10: stats::quantile_sorted(&counts, 0.1),
            p90: stats::quantile_sorted(&counts, 0.9),
        };

        let (zs, posts): (Vec<f64>, Vec<f64>) = days
            .iter()
            .filter_map(|d| d.z.map(|z| (z, d.day_posts as f64)))
            .unzip();
        let corr = stats::pearson(&zs, &posts);

        let mut ranked: Vec<TopDay> = days
            .iter()
            .filter_map(|d| {
                d.z.map(|z| TopDay {
                    date: d.date,
                    z,
                    posts: d.day_posts,
                })
            })
            .collect();
        ranked.sort_by(|a, b| b.z.total_cmp(&a.z).then(a.date.cmp(&b.date)));
        ranked.truncate(5);

        let mut stationarity = BTreeMap::new();
        stationarity.insert(format!("{}_z", self.primary.metric.name()), stationarity_pair(&zs));
        match self.primary_exposure() {
            Ok(e) => {
                let values: Vec<f64> = e.z.iter().flatten().copied().collect();
                stationarity.insert(format!("{}_z", e.name), stationarity_pair(&values));
            }
            Err(err) => {
                let mut m = BTreeMap::new();
                m.insert("constant", ReportOrError::Error { error: err.to_string() });
                stationarity.insert("exposure".into(), m);
            }
        }

        Ok(Diagnostics {
            novelty_metric: self.primary.metric.name(),
            days_total,
            missing_days,
            missing_share: missing_days as f64 / days_total as f64,
            low_sample_days,
            zero_post_days,
            posts_per_day,
            corr_novelty_posts: corr,
            corr_degenerate: corr.is_none(),
            top_novelty: ranked,
            stationarity,
        })
    }
}

fn stationarity_pair(values: &[f64]) -> BTreeMap<&'static str, ReportOrError> {
    [("constant", Deterministic::Constant), ("constant_trend", Deterministic::ConstantTrend)]
        .into_iter()
        .map(|(name, det)| {
            let r = match stationarity_report(values, det) {
                Ok(r) => ReportOrError::Report(r),
                Err(e) => ReportOrError::Error { error: e.to_string() },
            };
            (name, r)
        })
        .collect()
}

/// The exposure's standardized values permuted across the days that have one.
pub fn shuffled_exposure(exposure: &ExposureSeries, seed: u64) -> Result<ExposureSeries> {
    let mut values: Vec<f64> = exposure.z.iter().flatten().copied().collect();
    if values.is_empty() {
        return Err(Error::DegenerateSeries(format!("exposure {:?} is empty", exposure.name)));
    }
    values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut it = values.into_iter();
    let z: Vec<Option<f64>> = exposure.z.iter().map(|v| v.and_then(|_| it.next())).collect();
    let mut out = exposure.clone().renamed(&format!("shuffled:{}", exposure.name));
    out.raw = z.clone();
    out.z = z;
    Ok(out)
}
