//! Python bindings for `incdist`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use incdist::calibrate::{self, GridAxis};
use incdist::config;
use incdist::datasets;
use incdist::demography::{self, AgePyramid, PyramidShape};
use incdist::economy::{self, FactorKind};
use incdist::empirical::{self, BinIncomeMode, OpenBinPolicy, RescaleIncome, Units};
use incdist::inequality::{self, Convention, OpenBinMode};
use incdist::synthesis::{self, Anchor, RunOptions, ScaleFactor, TailMode};
use incdist::trajectory::{self, StateIndex};

fn err(e: incdist::Error) -> PyErr {
    match e {
        incdist::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = incdist::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn units(s: &str) -> PyResult<Units> {
    match s {
        "dimensionless" => Ok(Units::Dimensionless),
        "dollars" => Ok(Units::Dollars),
        _ => Err(PyValueError::new_err(format!("unknown units `{s}`"))),
    }
}

fn tail_mode(s: &str) -> PyResult<TailMode> {
    match s {
        "quantile" => Ok(TailMode::Quantile),
        "rescale" => Ok(TailMode::Rescale),
        _ => s
            .strip_prefix("sampled:")
            .and_then(|seed| seed.parse().ok())
            .map(|seed| TailMode::Sampled { seed })
            .ok_or_else(|| PyValueError::new_err(format!("unknown tail mode `{s}`"))),
    }
}

/// Model parameters. Start from a preset and adjust with `set`.
#[pyclass(name = "Params", module = "pyincdist")]
struct Params {
    inner: trajectory::ModelParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (preset = 1960))]
    fn new(preset: i32) -> PyResult<Self> {
        trajectory::ModelParams::preset(preset)
            .map(|inner| Params { inner })
            .ok_or_else(|| PyValueError::new_err(format!("no preset for {preset}")))
    }

    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        config::parse_config(text)
            .map(|inner| Params { inner })
            .map_err(err)
    }

    fn to_config(&self) -> String {
        config::to_config(&self.inner)
    }

    /// Sets one field by its config key; the result is validated.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        config::apply_setting(&mut next, key, value).map_err(err)?;
        next.validate().map_err(err)?;
        self.inner = next;
        Ok(())
    }

    #[getter]
    fn t0(&self) -> i32 {
        self.inner.t0
    }

    #[getter]
    fn alpha0(&self) -> f64 {
        self.inner.alpha0
    }

    #[getter]
    fn tcr0(&self) -> f64 {
        self.inner.tcr0
    }

    #[getter]
    fn mp0(&self) -> f64 {
        self.inner.mp0
    }

    #[getter]
    fn pareto_k(&self) -> f64 {
        self.inner.pareto_k
    }

    fn standard_pareto_index(&self) -> f64 {
        self.inner.standard_pareto_index()
    }

    /// Income of state `(i, j)` at `experience` for a cohort starting in `start_year`.
    fn income(
        &self,
        series: &GrowthSeries,
        i: u32,
        j: u32,
        start_year: i32,
        experience: f64,
    ) -> PyResult<f64> {
        let end = start_year + experience.ceil() as i32;
        let ctx = trajectory::build_context(&self.inner, &series.inner, end.max(self.inner.t0))
            .map_err(err)?;
        let state = StateIndex::new(i, j);
        state.check(&self.inner).map_err(err)?;
        trajectory::cohort_income(&self.inner, &ctx, state, start_year, experience).map_err(err)
    }

    /// `(tcr, mp)` for `year`.
    fn calendar(&self, series: &GrowthSeries, year: i32) -> PyResult<(f64, f64)> {
        let ctx = trajectory::build_context(&self.inner, &series.inner, year).map_err(err)?;
        Ok((ctx.tcr(year).map_err(err)?, ctx.mp(year).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(t0={}, alpha0={}, tcr0={}, mp0={})",
            self.inner.t0, self.inner.alpha0, self.inner.tcr0, self.inner.mp0
        )
    }
}

/// Annual growth factors.
#[pyclass(name = "GrowthSeries", module = "pyincdist")]
struct GrowthSeries {
    inner: economy::GrowthSeries,
}

#[pymethods]
impl GrowthSeries {
    /// The bundled 1950-2002 table.
    #[staticmethod]
    fn bundled() -> Self {
        GrowthSeries {
            inner: datasets::gdp_table(),
        }
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        economy::GrowthSeries::parse_csv(text)
            .map(|inner| GrowthSeries { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn constant(first: i32, last: i32, real: f64, nominal: f64) -> PyResult<Self> {
        economy::GrowthSeries::constant(first, last, real, nominal)
            .map(|inner| GrowthSeries { inner })
            .map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn first_year(&self) -> i32 {
        self.inner.first_year()
    }

    #[getter]
    fn last_year(&self) -> i32 {
        self.inner.last_year()
    }

    /// Product of column `kind` over rows `first..=last`.
    fn cumulative_factor(&self, kind: &str, first: i32, last: i32) -> PyResult<f64> {
        let kind: FactorKind = parse(kind)?;
        self.inner.cumulative_factor(kind, first, last).map_err(err)
    }

    fn growth_between(&self, kind: &str, from: i32, to: i32) -> PyResult<f64> {
        let kind: FactorKind = parse(kind)?;
        self.inner.growth_between(kind, from, to).map_err(err)
    }
}

/// Population by year and age.
#[pyclass(name = "Pyramids", module = "pyincdist")]
struct Pyramids {
    inner: demography::Pyramids,
}

#[pymethods]
impl Pyramids {
    /// The smoothed US-like shape for every year.
    #[staticmethod]
    fn us_like() -> PyResult<Self> {
        let p = AgePyramid::synthetic(1960, PyramidShape::US_LIKE, demography::DEFAULT_AGES)
            .map_err(err)?;
        Ok(Pyramids {
            inner: demography::Pyramids::stationary(p),
        })
    }

    /// Same counts every year; `counts[0]` is age `first_age`.
    #[staticmethod]
    fn stationary(first_age: u32, counts: Vec<f64>) -> PyResult<Self> {
        let p = AgePyramid::new(1960, first_age, counts).map_err(err)?;
        Ok(Pyramids {
            inner: demography::Pyramids::stationary(p),
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        demography::Pyramids::parse_csv(text)
            .map(|inner| Pyramids { inner })
            .map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Income table with `[lower, upper)` bins.
#[pyclass(name = "BinnedPid", module = "pyincdist", from_py_object)]
#[derive(Clone)]
struct BinnedPid {
    inner: empirical::BinnedPid,
}

#[pymethods]
impl BinnedPid {
    #[staticmethod]
    #[pyo3(signature = (text, units = "dollars"))]
    fn from_csv(text: &str, units: &str) -> PyResult<Self> {
        empirical::BinnedPid::parse_csv(text, self::units(units)?)
            .map(|inner| BinnedPid { inner })
            .map_err(err)
    }

    /// Bundled IRS table for 1990 or 2004.
    #[staticmethod]
    fn irs(year: i32) -> PyResult<Self> {
        datasets::irs_pid(year)
            .map(|inner| BinnedPid { inner })
            .ok_or_else(|| PyValueError::new_err(format!("no bundled table for {year}")))
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn total_count(&self) -> f64 {
        self.inner.total_count()
    }

    fn __len__(&self) -> usize {
        self.inner.bins().len()
    }

    /// `(lower, upper, count)` per bin; `upper` is None for the open bin.
    fn bins(&self) -> Vec<(f64, Option<f64>, f64)> {
        self.inner
            .bins()
            .iter()
            .map(|b| (b.lower, b.upper, b.count))
            .collect()
    }

    fn rescale_income(&self, factor: f64) -> PyResult<Self> {
        self.inner
            .rescale_income(factor)
            .map(|inner| BinnedPid { inner })
            .map_err(err)
    }

    /// `(income, density, width)` points with the open bin dropped.
    #[pyo3(signature = (per_person = true, rescale = 1.0))]
    fn density(&self, per_person: bool, rescale: f64) -> PyResult<Vec<(f64, f64, f64)>> {
        let mut d = empirical::to_density(&self.inner, OpenBinPolicy::Drop).map_err(err)?;
        if per_person {
            d = d.per_person().map_err(err)?;
        }
        let d = d.rescale_income(rescale).map_err(err)?;
        Ok(d.points
            .iter()
            .map(|p| (p.income, p.density, p.width))
            .collect())
    }

    /// Trapezoid Gini. `open_bin` is `drop`, `mean` or `pareto`, the last using `k`.
    #[pyo3(signature = (open_bin = "drop", k = None, convention = "paper", bin_income = "center"))]
    fn gini(
        &self,
        open_bin: &str,
        k: Option<f64>,
        convention: &str,
        bin_income: &str,
    ) -> PyResult<f64> {
        let convention: Convention = parse(convention)?;
        let open = match (open_bin, k) {
            ("drop", _) => OpenBinMode::Drop,
            ("mean", _) => OpenBinMode::ReportedMean,
            ("pareto", Some(k)) => OpenBinMode::Pareto { k, convention },
            _ => {
                return Err(PyValueError::new_err(format!(
                    "bad open-bin mode `{open_bin}`"
                )))
            }
        };
        let income = match bin_income {
            "center" => BinIncomeMode::Center,
            "mean" => BinIncomeMode::ReportedMean,
            "offset" => BinIncomeMode::OffsetCorrected(empirical::DEFAULT_BIN_OFFSET),
            _ => {
                return Err(PyValueError::new_err(format!(
                    "bad bin income `{bin_income}`"
                )))
            }
        };
        let lorenz = inequality::lorenz_from_bins(&self.inner, income, open).map_err(err)?;
        Ok(inequality::gini_trapezoid(&lorenz))
    }
}

/// One simulated year.
#[pyclass(name = "Population", module = "pyincdist")]
struct Population {
    inner: synthesis::SyntheticPopulation,
}

#[pymethods]
impl Population {
    #[getter]
    fn year(&self) -> i32 {
        self.inner.year
    }

    fn __len__(&self) -> usize {
        self.inner.entries.len()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights()
    }

    fn incomes(&self) -> Vec<f64> {
        self.inner.incomes()
    }

    fn ages(&self) -> Vec<u32> {
        self.inner.entries.iter().map(|e| e.age).collect()
    }

    fn gini(&self) -> PyResult<f64> {
        self.inner.gini().map_err(err)
    }

    fn portion_above(&self, threshold: f64) -> PyResult<f64> {
        synthesis::portion_above(&self.inner, threshold, 10)
            .map(|p| p.overall)
            .map_err(err)
    }

    #[pyo3(signature = (width, scale = 1.0))]
    fn to_binned(&self, width: f64, scale: f64) -> PyResult<BinnedPid> {
        let scale = ScaleFactor {
            year: self.inner.year,
            value: scale,
        };
        synthesis::to_binned(&self.inner, width, scale)
            .map(|inner| BinnedPid { inner })
            .map_err(err)
    }
}

/// Summary of one year from `run_years`.
#[pyclass(name = "YearSummary", module = "pyincdist", get_all)]
struct YearSummary {
    year: i32,
    gini: f64,
    tail_share: f64,
    extra_income_ratio: f64,
    tcr: f64,
    mp: f64,
    scale: Option<f64>,
}

#[pymethods]
impl YearSummary {
    fn __repr__(&self) -> String {
        format!(
            "YearSummary(year={}, gini={:.4}, tail_share={:.4}, extra_income_ratio={:.4})",
            self.year, self.gini, self.tail_share, self.extra_income_ratio
        )
    }
}

/// Populations for `years` without the Pareto tail.
#[pyfunction]
fn simulate(
    params: &Params,
    series: &GrowthSeries,
    pyramids: &Pyramids,
    years: Vec<i32>,
) -> PyResult<Vec<Population>> {
    let last = *years
        .iter()
        .max()
        .ok_or_else(|| PyValueError::new_err("no years"))?;
    let ctx = trajectory::build_context(&params.inner, &series.inner, last).map_err(err)?;
    let pops =
        synthesis::simulate_years(&params.inner, &ctx, &pyramids.inner, &years).map_err(err)?;
    Ok(pops.into_iter().map(|inner| Population { inner }).collect())
}

/// Years `first..=last` with the tail attached.
#[pyfunction]
#[pyo3(signature = (params, series, pyramids, first, last, tail = "quantile", anchor = None))]
fn run_years(
    params: &Params,
    series: &GrowthSeries,
    pyramids: &Pyramids,
    first: i32,
    last: i32,
    tail: &str,
    anchor: Option<(i32, f64)>,
) -> PyResult<Vec<YearSummary>> {
    let options = RunOptions {
        tail: tail_mode(tail)?,
        anchor: anchor.map(|(y, d)| Anchor::new(y, d)),
    };
    let runs = synthesis::run_years(
        &params.inner,
        &series.inner,
        &pyramids.inner,
        first..=last,
        options,
    )
    .map_err(err)?;
    Ok(runs
        .into_iter()
        .map(|r| {
            let s = r.summary;
            YearSummary {
                year: s.year,
                gini: s.gini,
                tail_share: s.tail_share,
                extra_income_ratio: s.extra_income_ratio,
                tcr: s.tcr,
                mp: s.mp,
                scale: s.scale,
            }
        })
        .collect())
}

/// Dollars per income unit in `year` given `anchor = (year, dollars)`.
#[pyfunction]
fn scale_factor(
    params: &Params,
    series: &GrowthSeries,
    year: i32,
    anchor: (i32, f64),
) -> PyResult<f64> {
    synthesis::scale_factor(
        &params.inner,
        &series.inner,
        year,
        Anchor::new(anchor.0, anchor.1),
    )
    .map(|s| s.value)
    .map_err(err)
}

#[pyfunction]
fn gini_exact(weights: Vec<f64>, incomes: Vec<f64>) -> PyResult<f64> {
    inequality::gini_exact(&weights, &incomes)
        .map(|g| g.value)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x_m, x_av, convention = "paper"))]
fn pareto_k_from_mean(x_m: f64, x_av: f64, convention: &str) -> PyResult<f64> {
    inequality::pareto_k_from_mean(x_m, x_av, parse(convention)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (slope, convention = "paper"))]
fn pareto_k_from_slope(slope: f64, convention: &str) -> PyResult<f64> {
    Ok(inequality::pareto_k_from_slope(slope, parse(convention)?))
}

#[pyfunction]
#[pyo3(signature = (points, convention = "paper"))]
fn pareto_k_from_regression(points: Vec<(f64, f64)>, convention: &str) -> PyResult<f64> {
    inequality::pareto_k_from_regression(&points, parse(convention)?).map_err(err)
}

/// Grid search over `alpha0 x tcr0`; axes are `(lo, hi, step)`.
/// Returns `(alpha0, tcr0, misfit)` of the best point.
#[pyfunction]
fn fit_model(
    params: &Params,
    alpha: (f64, f64, f64),
    tcr: (f64, f64, f64),
    observations: Vec<(i32, BinnedPid)>,
    series: &GrowthSeries,
    pyramids: &Pyramids,
) -> PyResult<(f64, f64, f64)> {
    let alpha = GridAxis::new(alpha.0, alpha.1, alpha.2).map_err(err)?;
    let tcr = GridAxis::new(tcr.0, tcr.1, tcr.2).map_err(err)?;
    let obs: Vec<_> = observations
        .into_iter()
        .map(|(y, p)| (y, p.inner))
        .collect();
    let fit = calibrate::fit_model(
        &params.inner,
        alpha,
        tcr,
        &obs,
        &series.inner,
        &pyramids.inner,
    )
    .map_err(err)?;
    Ok((fit.best.alpha0, fit.best.tcr0, fit.best_misfit))
}

#[pyfunction]
fn fit_scale(predicted: Vec<(u32, f64)>, observed: Vec<(u32, f64)>) -> PyResult<f64> {
    calibrate::fit_scale(&predicted, &observed).map_err(err)
}

#[pymodule]
fn pyincdist(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<GrowthSeries>()?;
    m.add_class::<Pyramids>()?;
    m.add_class::<BinnedPid>()?;
    m.add_class::<Population>()?;
    m.add_class::<YearSummary>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_years, m)?)?;
    m.add_function(wrap_pyfunction!(scale_factor, m)?)?;
    m.add_function(wrap_pyfunction!(gini_exact, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_k_from_mean, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_k_from_slope, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_k_from_regression, m)?)?;
    m.add_function(wrap_pyfunction!(fit_model, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scale, m)?)?;
    m.add("IRS_GPI_1990", datasets::IRS_GPI_1990)?;
    m.add("IRS_GPI_2004", datasets::IRS_GPI_2004)?;
    Ok(())
}
