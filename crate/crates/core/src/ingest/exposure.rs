use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;

use crate::error::{Error, Result};
use crate::stats;

/// Pre-aggregated keyword counts for one day of transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptDay {
    pub date: NaiveDate,
    pub hits: u64,
    pub words: u64,
    pub shows: u64,
    pub shows_with_hits: u64,
}

/// A daily attention measure with its coverage window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureSeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub raw: Vec<Option<f64>>,
    /// Standardized values; empty until [`ExposureSeries::standardize`] runs.
    pub z: Vec<Option<f64>>,
    pub coverage_start: NaiveDate,
    pub coverage_end: NaiveDate,
}

impl ExposureSeries {
    fn from_points(name: &str, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let (Some(first), Some(last)) = (points.first(), points.last()) else {
            return Err(Error::DegenerateSeries(format!("exposure {name:?} has no rows")));
        };
        let (coverage_start, coverage_end) = (first.0, last.0);
        let (dates, raw) = points.into_iter().map(|(d, v)| (d, Some(v))).unzip();
        Ok(Self {
            name: name.to_string(),
            dates,
            raw,
            z: Vec::new(),
            coverage_start,
            coverage_end,
        })
    }

    /// Raw values on `index`, missing where the series has no entry.
    pub fn raw_on(&self, index: &[NaiveDate]) -> Vec<Option<f64>> {
        let lookup: BTreeMap<NaiveDate, Option<f64>> =
            self.dates.iter().copied().zip(self.raw.iter().copied()).collect();
        index
            .iter()
            .map(|d| lookup.get(d).copied().flatten())
            .collect()
    }

    /// Restricts the series to `index` and z-scores it over the entries that
    /// remain. Coverage is narrowed to the dates actually present.
    pub fn aligned(&self, index: &[NaiveDate]) -> Result<Self> {
        let raw = self.raw_on(index);
        let present: Vec<NaiveDate> = index
            .iter()
            .zip(&raw)
            .filter_map(|(d, v)| v.map(|_| *d))
            .collect();
        let (Some(&start), Some(&end)) = (present.first(), present.last()) else {
            return Err(Error::DegenerateSeries(format!(
                "exposure {:?} does not overlap the analysis index",
                self.name
            )));
        };
        let mut out = Self {
            name: self.name.clone(),
            dates: index.to_vec(),
            raw,
            z: Vec::new(),
            coverage_start: start,
            coverage_end: end,
        };
        out.standardize()?;
        Ok(out)
    }

    pub fn standardize(&mut self) -> Result<()> {
        self.z = zscore_full_sample(&self.raw)
            .map_err(|e| Error::DegenerateSeries(format!("exposure {:?}: {e}", self.name)))?;
        Ok(())
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

/// Z-scores over all non-missing entries (sample sd, n-1 denominator).
pub fn zscore_full_sample(values: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    stats::zscore(values)
}

/// Keyword density per 1,000 transcript words.
///
/// Days without transcript words get density 0 (with a warning) so that the
/// daily index stays contiguous.
pub fn transcript_density(name: &str, days: &[TranscriptDay]) -> Result<ExposureSeries> {
    let points = days
        .iter()
        .map(|d| {
            let density = if d.words == 0 {
                warn!("{name}: no transcript words on {}, density set to 0", d.date);
                0.0
            } else {
                1000.0 * d.hits as f64 / d.words as f64
            };
            (d.date, density)
        })
        .collect();
    ExposureSeries::from_points(name, points)
}

/// Raw daily keyword hit counts.
pub fn transcript_hits(name: &str, days: &[TranscriptDay]) -> Result<ExposureSeries> {
    let points = days.iter().map(|d| (d.date, d.hits as f64)).collect();
    ExposureSeries::from_points(name, points)
}

/// Day-wise mean of several raw series, defined where every input has a value.
pub fn mean_exposure(name: &str, parts: &[&ExposureSeries]) -> Result<ExposureSeries> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument(format!("{name}: mean of no series")));
    }
    let mut acc: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for s in parts {
        for (d, v) in s.dates.iter().zip(&s.raw) {
            if let Some(v) = v {
                let e = acc.entry(*d).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    let points = acc
        .into_iter()
        .filter(|(_, (_, c))| *c == parts.len())
        .map(|(d, (s, c))| (d, s / c as f64))
        .collect();
    ExposureSeries::from_points(name, points)
}

fn read_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_date(path: &Path, line: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::parse(path, line, format!("bad date {s:?}")))
}

fn parse_count(path: &Path, line: usize, field: &str, s: &str) -> Result<u64> {
    let v: i64 = s
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{field}: not an integer: {s:?}")))?;
    u64::try_from(v).map_err(|_| Error::parse(path, line, format!("{field} is negative: {v}")))
}

/// Reads `date,hits,words,shows,shows_with_hits` rows.
pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<TranscriptDay>> {
    let path = path.as_ref();
    let mut reader = read_csv(path)?;
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, 1, format!("missing column {name:?}")))
    };
    let (ci_date, ci_hits, ci_words, ci_shows, ci_swh) = (
        col("date")?,
        col("hits")?,
        col("words")?,
        col("shows")?,
        col("shows_with_hits")?,
    );
    let mut days = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let day = TranscriptDay {
            date: parse_date(path, line, get(ci_date))?,
            hits: parse_count(path, line, "hits", get(ci_hits))?,
            words: parse_count(path, line, "words", get(ci_words))?,
            shows: parse_count(path, line, "shows", get(ci_shows))?,
            shows_with_hits: parse_count(path, line, "shows_with_hits", get(ci_swh))?,
        };
        if day.shows_with_hits > day.shows {
            return Err(Error::parse(path, line, "shows_with_hits exceeds shows"));
        }
        if day.words == 0 && day.hits > 0 {
            return Err(Error::parse(path, line, "hits on a day without words"));
        }
        if !seen.insert(day.date) {
            return Err(Error::DuplicateDate(day.date));
        }
        days.push(day);
    }
    days.sort_by_key(|d| d.date);
    Ok(days)
}

/// Reads a `date,value` series; values must be numeric.
pub fn load_external_series(path: impl AsRef<Path>, name: &str) -> Result<ExposureSeries> {
    let path = path.as_ref();
    let mut reader = read_csv(path)?;
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let date = parse_date(path, line, rec.get(0).unwrap_or(""))?;
        let raw = rec.get(1).unwrap_or("");
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(path, line, format!("non-numeric value {raw:?}")))?;
        if !seen.insert(date) {
            return Err(Error::DuplicateDate(date));
        }
        points.push((date, value));
    }
    points.sort_by_key(|p| p.0);
    ExposureSeries::from_points(name, points)
}
