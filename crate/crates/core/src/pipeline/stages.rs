//! Command dispatch: each stage renders analysis results into the bundle.

use std::fmt;
use std::str::FromStr;

use log::info;
use serde_json::{json, Value};

use super::analysis::{Analysis, EffectRow, IrfBundle, RowOutcome};
use super::bundle::{fmt_p, BundleWriter, Cell, Provenance, ResultBundle, Table};
use super::config::{input_hashes, ExposureRole, RunConfig};
use crate::econometrics::{exposure_label, ArdlFit, LinearComboTest};
use crate::error::{Error, Result};
use crate::ingest::verify_embedding_file;
use crate::novelty::NoveltySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Novelty,
    MainTable,
    Leads,
    Falsify,
    Exposures,
    Irf,
    Diagnostics,
    All,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Validate,
        Command::Novelty,
        Command::MainTable,
        Command::Leads,
        Command::Falsify,
        Command::Exposures,
        Command::Irf,
        Command::Diagnostics,
        Command::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Novelty => "novelty",
            Command::MainTable => "main-table",
            Command::Leads => "leads",
            Command::Falsify => "falsify",
            Command::Exposures => "exposures",
            Command::Irf => "irf",
            Command::Diagnostics => "diagnostics",
            Command::All => "all",
        }
    }

    /// Exposures whose files this command may read.
    fn exposure_names(self, cfg: &RunConfig) -> Result<Vec<&str>> {
        let mut names = Vec::new();
        if self == Command::Novelty || self == Command::Validate {
            return Ok(names);
        }
        names.push(cfg.primary_exposure()?.name.as_str());
        let roles: &[ExposureRole] = match self {
            Command::Falsify => &[ExposureRole::Placebo],
            Command::Exposures => &[ExposureRole::Alternative],
            Command::All => &[ExposureRole::Alternative, ExposureRole::Placebo],
            _ => &[],
        };
        for role in roles {
            for e in cfg.exposures_with_role(*role) {
                // Mean exposures pull in their parts, which may be of any role.
                names.push(e.name.as_str());
            }
        }
        Ok(names)
    }

    fn needs_alternative(self) -> bool {
        matches!(self, Command::Novelty | Command::MainTable | Command::Leads | Command::All)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command {s:?}")))
    }
}

/// Runs one command and moves its outputs into the configured directory.
/// Nothing is written unless every stage succeeds.
pub fn run(cfg: &RunConfig, command: Command) -> Result<ResultBundle> {
    let report = cfg.validate().map_err(|e| e.in_stage("validate"))?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let names = command.exposure_names(cfg)?;
    let hashes = input_hashes(cfg, &names).map_err(|e| e.in_stage("provenance"))?;
    let provenance = Provenance::new(hashes, cfg.echo());
    let mut out = BundleWriter::new(&cfg.output_path(), provenance)?;
    if command == Command::Validate {
        let mut warnings = report.warnings;
        let mut embeddings =
            verify_embedding_file(cfg.resolve(&cfg.inputs.embeddings), cfg.resolve(&cfg.inputs.posts))
                .map_err(|e| e.in_stage("validate"))?;
        if !cfg.inputs.verify_corpus_hash {
            let (hash, rest): (Vec<_>, Vec<_>) =
                embeddings.problems.drain(..).partition(|p| p.starts_with("hash mismatch"));
            warnings.extend(hash);
            embeddings.problems = rest;
        }
        if !embeddings.is_ok() {
            return Err(Error::EmbeddingMismatch(embeddings.to_string()).in_stage("validate"));
        }
        out.write_json("validation.json", &json!({ "warnings": warnings, "embeddings": embeddings }))?;
        return out.finish(command.name());
    }

    let analysis = Analysis::new(cfg, command.needs_alternative())?;
    let stages: &[Command] = match command {
        Command::All => &Command::ALL[1..8],
        _ => std::slice::from_ref(&command),
    };
    for &stage in stages {
        info!("stage {stage}");
        run_stage(&analysis, stage, &mut out).map_err(|e| e.in_stage(stage.name()))?;
    }
    out.finish(command.name())
}

/// Runs the main table.
pub fn run_main(cfg: &RunConfig) -> Result<ResultBundle> {
    run(cfg, Command::MainTable)
}

pub fn run_falsification(cfg: &RunConfig) -> Result<ResultBundle> {
    run(cfg, Command::Falsify)
}

pub fn run_exposure_grid(cfg: &RunConfig) -> Result<ResultBundle> {
    run(cfg, Command::Exposures)
}

pub fn run_diagnostics(cfg: &RunConfig) -> Result<ResultBundle> {
    run(cfg, Command::Diagnostics)
}

fn run_stage(a: &Analysis, stage: Command, out: &mut BundleWriter) -> Result<()> {
    match stage {
        Command::Novelty => write_novelty(a, out),
        Command::MainTable => write_main_table(a, out),
        Command::Leads => {
            let rows = a.leads_table()?;
            out.write_table("leads", &effect_table(a, &rows))
        }
        Command::Falsify => {
            let rows = a.falsification_table()?;
            out.write_table("falsification", &effect_table(a, &rows))
        }
        Command::Exposures => {
            let rows = a.exposure_table()?;
            out.write_table("exposures", &effect_table(a, &rows))
        }
        Command::Irf => write_irf(a, &a.irf()?, out),
        Command::Diagnostics => write_diagnostics(a, out),
        Command::Validate | Command::All => unreachable!("not a stage"),
    }
}

fn write_novelty(a: &Analysis, out: &mut BundleWriter) -> Result<()> {
    for series in a.outcomes() {
        out.write_csv(&format!("novelty_{}.csv", series.metric.name()), &novelty_table(series))?;
    }
    let c = &a.corpus;
    out.write_json(
        "novelty_summary.json",
        &json!({
            "posts": c.post_total,
            "days": c.index.len(),
            "embedding_dim": c.raw_dim,
            "whitened_components": c.whitened_components,
            "primary": a.cfg.novelty.primary,
            "alternative": a.cfg.novelty.alternative,
        }),
    )
}

pub fn novelty_table(series: &NoveltySeries) -> Table {
    let mut t = Table::new(&["date", "N_t", "N_tz", "day_posts", "ref_posts", "gate_flag"]);
    for d in &series.days {
        t.push(vec![
            Cell::text(d.date.to_string()),
            Cell::opt(d.value),
            Cell::opt(d.z),
            Cell::int(d.day_posts),
            Cell::int(d.ref_posts),
            Cell::text(d.gate.as_str()),
        ]);
    }
    t
}

const EFFECT_COLUMNS: [&str; 15] = [
    "row", "outcome", "exposure", "spec_id", "estimand", "estimate", "se", "t", "p", "p_display",
    "sample_start", "sample_end", "n", "r2", "status",
];

fn effect_table(a: &Analysis, rows: &[EffectRow]) -> Table {
    let mut t = Table::new(&EFFECT_COLUMNS);
    for row in rows {
        let head = |spec_id: &str| {
            vec![
                Cell::text(&row.label),
                Cell::text(&row.outcome),
                Cell::text(&row.exposure),
                Cell::text(spec_id),
                Cell::text(row.estimand.as_str()),
            ]
        };
        match (row.fit(), row.test()) {
            (Some(fit), Some(test)) => {
                let id = fit.spec.id();
                let src = row.estimand.as_str();
                let mut cells = head(&id);
                let (start, end) = sample_span(a, fit);
                cells.extend([
                    Cell::num(test.estimate).traced(&id, src),
                    Cell::num(test.se).traced(&id, src),
                    Cell::num(test.t).traced(&id, src),
                    Cell::num(test.p).traced(&id, src),
                    Cell::text(fmt_p(test.p)).traced(&id, src),
                    Cell::text(start),
                    Cell::text(end),
                    Cell::int(fit.result.n).traced(&id, "n"),
                    Cell::num(fit.result.r2).traced(&id, "r2"),
                    Cell::text("ok"),
                ]);
                t.push(cells);
            }
            _ => {
                let reason = match &row.outcome_kind {
                    RowOutcome::Skipped(r) => r.as_str(),
                    RowOutcome::Fitted(_) => "estimand not in spec",
                };
                let mut cells = head("");
                cells.extend((0..9).map(|_| Cell::missing()));
                cells.push(Cell::text(format!("skipped: {reason}")));
                t.push(cells);
            }
        }
    }
    t
}

fn sample_span(a: &Analysis, fit: &ArdlFit) -> (String, String) {
    let rows = &fit.result.rows;
    match (rows.first(), rows.last()) {
        (Some(&s), Some(&e)) => (a.corpus.index[s].to_string(), a.corpus.index[e].to_string()),
        _ => (String::new(), String::new()),
    }
}

fn combo_json(t: &LinearComboTest) -> Value {
    let (lo, hi) = t.interval95();
    json!({ "estimate": t.estimate, "se": t.se, "t": t.t, "p": t.p, "ci95": [lo, hi] })
}

/// Full record of one fit, enough to recompute every reported number.
pub fn spec_record(a: &Analysis, row: &EffectRow, fit: &ArdlFit) -> Value {
    let r = &fit.result;
    let lower: Vec<Vec<f64>> = r
        .hac_cov
        .as_ref()
        .map(|v| (0..v.nrows()).map(|i| (0..=i).map(|j| v[(i, j)]).collect()).collect())
        .unwrap_or_default();
    let (start, end) = sample_span(a, fit);
    json!({
        "spec_id": fit.spec.id(),
        "spec": fit.spec,
        "outcome": row.outcome,
        "exposure": row.exposure,
        "column_labels": r.column_labels,
        "coefficients": r.coef,
        "hac_cov_lower": lower,
        "hac": {
            "kernel": "bartlett",
            "bandwidth": r.hac_bandwidth,
            "small_sample_correction": false,
        },
        "beta_sum": combo_json(&fit.beta_sum),
        "delta_sum": fit.delta_sum.as_ref().map(combo_json),
        "n": r.n,
        "r2": r.r2,
        "sample_start": start,
        "sample_end": end,
        "dropped_controls": r.dropped_controls,
    })
}

fn write_main_table(a: &Analysis, out: &mut BundleWriter) -> Result<()> {
    let mut perlag = Table::new(&[
        "outcome", "exposure", "spec_id", "term", "offset", "coef", "se", "ci_low", "ci_high",
    ]);
    for (i, outcome) in a.outcomes().enumerate() {
        let rows = a.main_table(outcome)?;
        let stem = if i == 0 {
            "main_table".to_string()
        } else {
            format!("main_table_{}", outcome.metric.name())
        };
        out.write_table(&stem, &effect_table(a, &rows))?;
        for row in &rows {
            let Some(fit) = row.fit() else { continue };
            let id = fit.spec.id();
            out.write_json(
                &format!("specs/{}__{}__{}.json", row.outcome, row.exposure, id),
                &spec_record(a, row, fit),
            )?;
            let cov = fit.result.hac_cov.as_ref().expect("fit_ardl attaches HAC");
            let offsets = (0..=fit.spec.q as i64).map(|j| -j).chain(1..=fit.spec.leads as i64);
            for k in offsets {
                let label = exposure_label(k);
                let Some(c) = fit.result.index_of(&label) else { continue };
                let se = cov[(c, c)].sqrt();
                let z = crate::stats::Z_975;
                let coef = fit.result.coef[c];
                perlag.push(vec![
                    Cell::text(&row.outcome),
                    Cell::text(&row.exposure),
                    Cell::text(&id),
                    Cell::text(&label),
                    Cell::text(k.to_string()),
                    Cell::num(coef).traced(&id, &label),
                    Cell::num(se).traced(&id, &label),
                    Cell::num(coef - z * se).traced(&id, &label),
                    Cell::num(coef + z * se).traced(&id, &label),
                ]);
            }
        }
    }
    out.write_csv("perlag.csv", &perlag)
}

fn write_irf(a: &Analysis, irf: &IrfBundle, out: &mut BundleWriter) -> Result<()> {
    let z = crate::stats::Z_975;
    let cols = ["horizon", "theta", "se", "ci_low", "ci_high", "n", "status"];
    let mut levels = Table::new(&cols);
    let l = &irf.levels;
    for i in 0..l.horizons.len() {
        levels.push(vec![
            Cell::text(l.horizons[i].to_string()),
            Cell::num(l.theta[i]),
            Cell::num(l.se[i]),
            Cell::num(l.theta[i] - z * l.se[i]),
            Cell::num(l.theta[i] + z * l.se[i]),
            Cell::int(l.n[i]),
            Cell::text(lp_status(l.spanned_by_lags[i])),
        ]);
    }
    out.write_csv("irf.csv", &levels)?;

    let mut cumulative = Table::new(&cols);
    for est in &irf.cumulative {
        let (lo, hi) = est.test.interval95();
        cumulative.push(vec![
            Cell::text(est.window.1.to_string()),
            Cell::num(est.test.estimate),
            Cell::num(est.test.se),
            Cell::num(lo),
            Cell::num(hi),
            Cell::int(est.n),
            Cell::text(lp_status(est.spanned_by_lags)),
        ]);
    }
    out.write_csv("irf_cumulative.csv", &cumulative)?;

    let mut windows = Table::new(&["window", "estimate", "se", "t", "p", "p_display", "n", "status"]);
    for est in &irf.windows {
        windows.push(vec![
            Cell::text(format!("[{},{}]", est.window.0, est.window.1)),
            Cell::num(est.test.estimate),
            Cell::num(est.test.se),
            Cell::num(est.test.t),
            Cell::num(est.test.p),
            Cell::text(fmt_p(est.test.p)),
            Cell::int(est.n),
            Cell::text(lp_status(est.spanned_by_lags)),
        ]);
    }
    out.write_csv("lp_windows.csv", &windows)?;

    let w = &irf.pretrend.wald;
    out.write_json(
        "pretrend.json",
        &json!({
            "horizons": a.cfg.irf.pretrend_horizons,
            "statistic": w.statistic,
            "df": w.df,
            "p": w.p,
            "n": irf.pretrend.n,
            "hac_bandwidth": a.cfg.regression.hac_bandwidth,
        }),
    )
}

fn lp_status(spanned_by_lags: bool) -> &'static str {
    if spanned_by_lags {
        "zero_by_construction"
    } else {
        "ok"
    }
}

fn write_diagnostics(a: &Analysis, out: &mut BundleWriter) -> Result<()> {
    let d = a.diagnostics()?;
    let mut top = Table::new(&["rank", "date", "N_tz", "day_posts"]);
    for (i, day) in d.top_novelty.iter().enumerate() {
        top.push(vec![
            Cell::int(i + 1),
            Cell::text(day.date.to_string()),
            Cell::num(day.z),
            Cell::int(day.posts),
        ]);
    }
    out.write_csv("top_novelty.csv", &top)?;
    out.write_json("diagnostics.json", &serde_json::to_value(&d).expect("diagnostics serialize"))
}
