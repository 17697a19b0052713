//! Python bindings: distances, embedding preprocessing, ARDL / local-projection
//! inference, stationarity tests, embedding-file verification and pipeline runs.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use novelty_core::econometrics::{self as econ, Deterministic, RegressionSpec, Significance};
use novelty_core::ingest::{self, ControlMatrix};
use novelty_core::novelty::{self as nov, EmbeddingMatrix, GammaRule, Stage, WithinSample};
use novelty_core::pipeline::{self, Command, RunConfig};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: novelty_core::Error) -> PyErr {
    match e {
        novelty_core::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

fn convention(u_statistic: bool) -> WithinSample {
    if u_statistic {
        WithinSample::UStatistic
    } else {
        WithinSample::VStatistic
    }
}

fn matrix(rows: &[Vec<f64>], stage: Stage) -> PyResult<EmbeddingMatrix> {
    EmbeddingMatrix::from_rows(rows, stage).map_err(err)
}

fn to_rows(m: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn dense(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

fn to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Synthetic consecutive dates; regressions only need the row count.
fn controls(n: usize, columns: Option<Vec<(String, Vec<f64>)>>) -> PyResult<ControlMatrix> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..n).map(|i| start + chrono::Days::new(i as u64)).collect();
    ControlMatrix::from_columns(&dates, &columns.unwrap_or_default()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, b, u_statistic = false))]
fn energy_distance(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, u_statistic: bool) -> PyResult<f64> {
    nov::energy_distance_with(&refs(&a), &refs(&b), convention(u_statistic)).map_err(err)
}

/// MMD² with an RBF kernel; `gamma` defaults to the median heuristic 1/(2m²).
#[pyfunction]
#[pyo3(signature = (a, b, u_statistic = false, gamma = None))]
fn mmd2(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, u_statistic: bool, gamma: Option<f64>) -> PyResult<f64> {
    let conv = convention(u_statistic);
    match gamma {
        Some(g) => nov::mmd2_with_gamma(&refs(&a), &refs(&b), g, conv),
        None => nov::mmd2_with(&refs(&a), &refs(&b), conv, GammaRule::HalfInverseSquare),
    }
    .map_err(err)
}

#[pyfunction]
fn median_heuristic_gamma(points: Vec<Vec<f64>>) -> PyResult<f64> {
    nov::median_heuristic_gamma(&refs(&points), GammaRule::HalfInverseSquare).map_err(err)
}

/// PCA-whitens the rows; returns `(rows, kept_components)`.
#[pyfunction]
fn whiten(rows: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, usize)> {
    let raw = matrix(&rows, Stage::Raw)?;
    let model = nov::fit_whitener(&raw).map_err(err)?;
    let w = nov::apply_whitener(&model, &raw).map_err(err)?;
    Ok((to_rows(&w), model.components()))
}

#[pyfunction]
fn unit_normalize(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&nov::unit_normalize(&matrix(&rows, Stage::Raw)?).map_err(err)?))
}

/// Whiten, then scale each row to unit length.
#[pyfunction]
fn prepare_embeddings(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let (_, unit) = nov::prepare_embeddings(&matrix(&rows, Stage::Raw)?).map_err(err)?;
    Ok(to_rows(&unit))
}

/// Sample-sd z-score; `None` entries stay `None`.
#[pyfunction]
fn zscore(values: Vec<Option<f64>>) -> PyResult<Vec<Option<f64>>> {
    ingest::zscore_full_sample(&values).map_err(err)
}

#[pyfunction]
fn hac_covariance(x: Vec<Vec<f64>>, residuals: Vec<f64>, bandwidth: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_nested(&econ::hac_covariance(&dense(&x)?, &residuals, bandwidth).map_err(err)?))
}

#[pyclass(name = "LinearComboTest", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCombo {
    estimate: f64,
    se: f64,
    t: f64,
    p: f64,
}

#[pymethods]
impl PyCombo {
    fn interval95(&self) -> (f64, f64) {
        econ::LinearComboTest {
            estimate: self.estimate,
            se: self.se,
            t: self.t,
            p: self.p,
        }
        .interval95()
    }

    fn __repr__(&self) -> String {
        format!("LinearComboTest(estimate={}, se={}, p={})", self.estimate, self.se, self.p)
    }
}

impl From<econ::LinearComboTest> for PyCombo {
    fn from(t: econ::LinearComboTest) -> Self {
        Self {
            estimate: t.estimate,
            se: t.se,
            t: t.t,
            p: t.p,
        }
    }
}

#[pyclass(name = "ArdlFit", frozen, get_all)]
struct PyArdlFit {
    spec_id: String,
    column_labels: Vec<String>,
    coefficients: Vec<f64>,
    hac_cov: Vec<Vec<f64>>,
    beta_sum: PyCombo,
    delta_sum: Option<PyCombo>,
    n: usize,
    r2: f64,
}

#[pymethods]
impl PyArdlFit {
    fn __repr__(&self) -> String {
        format!("ArdlFit({}, n={}, beta_sum={})", self.spec_id, self.n, self.beta_sum.estimate)
    }
}

/// ARDL of `y` on its lags `1..=p`, exposure lags `0..=q`, leads `1..=leads`
/// and optional named controls, with Newey–West inference.
#[pyfunction]
#[pyo3(signature = (y, e, p, q, leads = 0, bandwidth = 7, controls = None, trend = false))]
#[allow(clippy::too_many_arguments)]
fn fit_ardl(
    y: Vec<Option<f64>>,
    e: Vec<Option<f64>>,
    p: usize,
    q: usize,
    leads: usize,
    bandwidth: usize,
    controls: Option<Vec<(String, Vec<f64>)>>,
    trend: bool,
) -> PyResult<PyArdlFit> {
    let c = self::controls(y.len(), controls)?;
    let mut spec = RegressionSpec::new(p, q).with_leads(leads);
    spec.hac_bandwidth = bandwidth;
    spec.include_trend = trend;
    let fit = econ::fit_ardl(&y, &e, &c, &spec).map_err(err)?;
    Ok(PyArdlFit {
        spec_id: fit.spec.id(),
        column_labels: fit.result.column_labels.clone(),
        coefficients: fit.result.coef.clone(),
        hac_cov: fit.result.hac_cov.as_ref().map(to_nested).unwrap_or_default(),
        beta_sum: fit.beta_sum.into(),
        delta_sum: fit.delta_sum.map(Into::into),
        n: fit.result.n,
        r2: fit.result.r2,
    })
}

#[pyclass(name = "ProjectionEstimate", frozen, get_all)]
struct PyProjection {
    window: (i64, i64),
    test: PyCombo,
    n: usize,
    spanned_by_lags: bool,
}

impl From<econ::ProjectionEstimate> for PyProjection {
    fn from(p: econ::ProjectionEstimate) -> Self {
        Self {
            window: p.window,
            test: p.test.into(),
            n: p.n,
            spanned_by_lags: p.spanned_by_lags,
        }
    }
}

#[pyfunction]
#[pyo3(signature = (y, e, h, p = 7, bandwidth = 7, controls = None))]
fn local_projection(
    y: Vec<Option<f64>>,
    e: Vec<Option<f64>>,
    h: i64,
    p: usize,
    bandwidth: usize,
    controls: Option<Vec<(String, Vec<f64>)>>,
) -> PyResult<PyProjection> {
    let c = self::controls(y.len(), controls)?;
    Ok(econ::local_projection(&y, &e, &c, h, p, bandwidth).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (y, e, a, b, p = 7, bandwidth = 7, controls = None))]
#[allow(clippy::too_many_arguments)]
fn cumulative_lp(
    y: Vec<Option<f64>>,
    e: Vec<Option<f64>>,
    a: i64,
    b: i64,
    p: usize,
    bandwidth: usize,
    controls: Option<Vec<(String, Vec<f64>)>>,
) -> PyResult<PyProjection> {
    let c = self::controls(y.len(), controls)?;
    Ok(econ::cumulative_lp(&y, &e, &c, a, b, p, bandwidth).map_err(err)?.into())
}

/// Joint Wald test on exposure leads; returns `(statistic, df, p, n)`.
#[pyfunction]
#[pyo3(signature = (y, e, horizons = vec![-5, -4, -3, -2, -1], p = 7, bandwidth = 7, controls = None))]
fn joint_pretrend_wald(
    y: Vec<Option<f64>>,
    e: Vec<Option<f64>>,
    horizons: Vec<i64>,
    p: usize,
    bandwidth: usize,
    controls: Option<Vec<(String, Vec<f64>)>>,
) -> PyResult<(f64, usize, f64, usize)> {
    let c = self::controls(y.len(), controls)?;
    let t = econ::joint_pretrend_wald(&y, &e, &c, &horizons, p, bandwidth).map_err(err)?;
    Ok((t.wald.statistic, t.wald.df, t.wald.p, t.n))
}

fn level(s: Option<Significance>) -> Option<&'static str> {
    s.map(|s| match s {
        Significance::One => "1%",
        Significance::Five => "5%",
        Significance::Ten => "10%",
    })
}

fn deterministic(trend: bool) -> Deterministic {
    if trend {
        Deterministic::ConstantTrend
    } else {
        Deterministic::Constant
    }
}

/// ADF test; returns `(statistic, lags, (cv1, cv5, cv10), rejects_at)`.
#[pyfunction]
#[pyo3(signature = (series, trend = false))]
fn adf_test(series: Vec<f64>, trend: bool) -> PyResult<(f64, usize, (f64, f64, f64), Option<&'static str>)> {
    let r = econ::adf_test(&series, deterministic(trend)).map_err(err)?;
    Ok((r.statistic, r.lags, (r.critical.one, r.critical.five, r.critical.ten), level(r.rejects_at)))
}

/// KPSS test; returns `(statistic, bandwidth, (cv1, cv5, cv10), rejects_at)`.
#[pyfunction]
#[pyo3(signature = (series, trend = false))]
fn kpss_test(series: Vec<f64>, trend: bool) -> PyResult<(f64, usize, (f64, f64, f64), Option<&'static str>)> {
    let r = econ::kpss_test(&series, deterministic(trend)).map_err(err)?;
    Ok((r.statistic, r.bandwidth, (r.critical.one, r.critical.five, r.critical.ten), level(r.rejects_at)))
}

/// Returns the list of problems; empty when the files match.
#[pyfunction]
fn verify_embedding_file(path: std::path::PathBuf, posts_path: std::path::PathBuf) -> PyResult<Vec<String>> {
    Ok(ingest::verify_embedding_file(path, posts_path).map_err(err)?.problems)
}

/// Runs a pipeline command; returns `(output_dir, {file: sha256}, provenance_hash)`.
#[pyfunction]
#[pyo3(signature = (config, command = "all", overrides = vec![]))]
fn run(
    config: std::path::PathBuf,
    command: &str,
    overrides: Vec<String>,
) -> PyResult<(String, std::collections::BTreeMap<String, String>, String)> {
    let cmd: Command = command.parse().map_err(err)?;
    let cfg = RunConfig::load(config, &overrides).map_err(err)?;
    let b = pipeline::run(&cfg, cmd).map_err(err)?;
    Ok((b.output_dir.display().to_string(), b.files, b.provenance.hash))
}

#[pymodule]
fn novelty_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCombo>()?;
    m.add_class::<PyArdlFit>()?;
    m.add_class::<PyProjection>()?;
    m.add_function(wrap_pyfunction!(energy_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mmd2, m)?)?;
    m.add_function(wrap_pyfunction!(median_heuristic_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(whiten, m)?)?;
    m.add_function(wrap_pyfunction!(unit_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(zscore, m)?)?;
    m.add_function(wrap_pyfunction!(hac_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ardl, m)?)?;
    m.add_function(wrap_pyfunction!(local_projection, m)?)?;
    m.add_function(wrap_pyfunction!(cumulative_lp, m)?)?;
    m.add_function(wrap_pyfunction!(joint_pretrend_wald, m)?)?;
    m.add_function(wrap_pyfunction!(adf_test, m)?)?;
    m.add_function(wrap_pyfunction!(kpss_test, m)?)?;
    m.add_function(wrap_pyfunction!(verify_embedding_file, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
