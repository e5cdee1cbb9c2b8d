//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::calibrate::{fit_model, GridAxis};
use crate::config::{apply_setting, load_config};
use crate::demography::{Fallback, Pyramids};
use crate::economy::GrowthSeries;
use crate::empirical::{
    to_density, BinIncomeMode, BinnedPid, OpenBinPolicy, RescaleIncome, Units, DEFAULT_BIN_OFFSET,
};
use crate::error::{Error, Result};
use crate::inequality::{
    gini_trapezoid, lorenz_from_bins, pareto_k_from_mean, pareto_k_from_regression,
    with_zero_income_mass, Convention, OpenBinMode,
};
use crate::synthesis::{
    bands_to_csv, mean_median_by_experience, project_forward, run_years, scale_factor, to_binned,
    Anchor, RunOptions, ScaleFactor, TailMode, YearRun,
};
use crate::trajectory::ModelParams;

#[derive(Debug, Parser)]
#[command(
    name = "incdist",
    version,
    about = "Personal income distribution model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate distributions for a range of years.
    Simulate(SimulateArgs),
    /// Lorenz curve and Gini coefficient of a binned table.
    Gini(GiniArgs),
    /// Density conversion and income-axis rescaling of a binned table.
    Normalize(NormalizeArgs),
    /// Estimate the Pareto index above a threshold.
    ParetoFit(ParetoFitArgs),
    /// Grid search for alpha0 and tcr0.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Flat `key = value` parameter file; defaults to the 1960 preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Growth table; defaults to the bundled 1950-2002 table.
    #[arg(long)]
    gdp: Option<PathBuf>,
    /// Age pyramid CSV. A single year is used for every year; otherwise
    /// missing years carry the previous pyramid forward.
    #[arg(long)]
    pyramid: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// `A..B` or a single year.
    #[arg(long)]
    years: String,
    /// Bin width, in dollars with --anchor and dimensionless otherwise.
    #[arg(long)]
    bins: Option<f64>,
    /// `YEAR:DOLLARS` value of one dimensionless income unit.
    #[arg(long)]
    anchor: Option<Anchor>,
    /// `RATE:UNTIL` constant real growth after the table ends.
    #[arg(long)]
    project: Option<String>,
    /// Experience band width for bands.csv.
    #[arg(long, default_value_t = 10)]
    band_width: u32,
    /// `quantile`, `rescale` or `sampled:SEED`.
    #[arg(long, default_value = "quantile")]
    tail: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GiniArgs {
    #[arg(long)]
    pid: PathBuf,
    /// Persons with no income to add in a zero-width first bin.
    #[arg(long, default_value_t = 0.0)]
    zero_count: f64,
    /// `pareto:K`, `mean` or `drop`.
    #[arg(long, default_value = "drop")]
    open_bin: String,
    /// `center`, `mean` or `offset[:X]`.
    #[arg(long, default_value = "offset")]
    bin_income: String,
    /// Convention of K in `--open-bin pareto:K`.
    #[arg(long, default_value = "paper")]
    convention: Convention,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    #[arg(long)]
    pid: PathBuf,
    /// Divide densities by the total number of persons.
    #[arg(long)]
    per_person: bool,
    /// Divide the income axis by this factor.
    #[arg(long, conflicts_with = "gpi")]
    rescale: Option<f64>,
    /// Divide the income axis by this total income.
    #[arg(long)]
    gpi: Option<f64>,
    /// Write density.csv instead of a rescaled pid.csv.
    #[arg(long)]
    density: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ParetoFitArgs {
    #[arg(long)]
    pid: PathBuf,
    /// Lowest income of the tail; bins starting below it are ignored.
    #[arg(long)]
    threshold: f64,
    /// `mean` or `regression`.
    #[arg(long, default_value = "regression")]
    method: String,
    #[arg(long, default_value = "paper")]
    convention: Convention,
    /// Mean income of the open bin, when the table does not report it.
    #[arg(long)]
    open_mean: Option<f64>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Directory of `pid_YEAR.csv` observations.
    #[arg(long)]
    obs: PathBuf,
    /// `LO:HI:STEP` for alpha0.
    #[arg(long)]
    alpha: GridAxis,
    /// `LO:HI:STEP` for tcr0.
    #[arg(long)]
    tcr: GridAxis,
    /// Units of the observations: `dimensionless` or `dollars`.
    #[arg(long, default_value = "dimensionless")]
    units: String,
    /// `YEAR:DOLLARS` used to convert dollar observations.
    #[arg(long)]
    anchor: Option<Anchor>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Runs the command line `argv` (program name first) and returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Gini(a) => gini(a),
        Command::Normalize(a) => normalize(a),
        Command::ParetoFit(a) => pareto_fit(a),
        Command::Calibrate(a) => calibrate(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_model(args: &ModelArgs) -> Result<(ModelParams, GrowthSeries, Pyramids)> {
    let mut params = match &args.config {
        Some(path) => load_config(path)?,
        None => ModelParams::default(),
    };
    for setting in &args.set {
        let (k, v) = setting
            .split_once('=')
            .ok_or_else(|| Error::param(format!("--set `{setting}` is not KEY=VALUE")))?;
        apply_setting(&mut params, k.trim(), v.trim())?;
    }
    params.validate()?;
    let series = match &args.gdp {
        Some(path) => GrowthSeries::load(path)?,
        None => crate::datasets::gdp_table(),
    };
    let pyramids = Pyramids::load(&args.pyramid)?;
    let fallback = if pyramids.len() == 1 {
        Fallback::Stationary
    } else {
        Fallback::CarryForward
    };
    Ok((params, series, pyramids.with_fallback(fallback)))
}

fn parse_years(s: &str) -> Result<(i32, i32)> {
    let bad = || Error::param(format!("years `{s}` is not A..B"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_tail(s: &str) -> Result<TailMode> {
    match s {
        "quantile" => Ok(TailMode::Quantile),
        "rescale" => Ok(TailMode::Rescale),
        _ => match s.strip_prefix("sampled:") {
            Some(seed) => seed
                .parse()
                .map(|seed| TailMode::Sampled { seed })
                .map_err(|_| Error::param(format!("bad seed in `{s}`"))),
            None => Err(Error::param(format!("unknown tail mode `{s}`"))),
        },
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (params, series, pyramids) = load_model(&args.model)?;
    let (first, last) = parse_years(&args.years)?;
    let options = RunOptions {
        tail: parse_tail(&args.tail)?,
        anchor: args.anchor,
    };
    let mut runs: Vec<YearRun> = Vec::new();
    let projection = args
        .project
        .as_deref()
        .map(|p| {
            let bad = || Error::param(format!("--project `{p}` is not RATE:UNTIL"));
            let (rate, until) = p.split_once(':').ok_or_else(bad)?;
            Ok::<_, Error>((
                rate.trim().parse::<f64>().map_err(|_| bad())?,
                until.trim().parse::<i32>().map_err(|_| bad())?,
            ))
        })
        .transpose()?;
    let historic_last = last.min(series.last_year());
    if first <= historic_last {
        runs.extend(run_years(
            &params,
            &series,
            &pyramids,
            first..=historic_last,
            options,
        )?);
    }
    let mut scale_series = series.clone();
    if last > series.last_year() {
        let (rate, until) = projection.ok_or_else(|| {
            Error::range(format!(
                "year {last} is beyond the growth table; pass --project RATE:UNTIL"
            ))
        })?;
        let horizon = until.max(last);
        let projected = project_forward(&params, &series, &pyramids, rate, 0.0, horizon, options)?;
        runs.extend(
            projected
                .into_iter()
                .filter(|r| r.summary.year >= first && r.summary.year <= last),
        );
        scale_series = series.extended(horizon, rate, 0.0)?;
    }
    let width = args.bins.unwrap_or(if args.anchor.is_some() {
        2500.0
    } else {
        0.0025
    });
    let mut summaries = Vec::with_capacity(runs.len());
    for run in &runs {
        let year = run.summary.year;
        let scale = match args.anchor {
            Some(anchor) => scale_factor(&params, &scale_series, year, anchor)?,
            None => ScaleFactor::unit(year),
        };
        let dir = args.out.join(year.to_string());
        write(
            &dir,
            "pid.csv",
            &to_binned(&run.population, width, scale)?.to_csv(),
        )?;
        let bands = mean_median_by_experience(&run.population, args.band_width)?;
        write(&dir, "bands.csv", &bands_to_csv(&bands))?;
        let mut summary = run.summary;
        summary.scale = args.anchor.map(|_| scale.value);
        write(&dir, "summary.json", &pretty(&summary))?;
        summaries.push(summary);
    }
    write(&args.out, "summary.json", &pretty(&summaries))?;
    for s in &summaries {
        println!("{}", serde_json::to_string(s).expect("serializable"));
    }
    Ok(())
}

fn parse_bin_income(s: &str) -> Result<BinIncomeMode> {
    match s {
        "center" => Ok(BinIncomeMode::Center),
        "mean" => Ok(BinIncomeMode::ReportedMean),
        "offset" => Ok(BinIncomeMode::OffsetCorrected(DEFAULT_BIN_OFFSET)),
        _ => match s.strip_prefix("offset:") {
            Some(x) => x
                .parse()
                .map(BinIncomeMode::OffsetCorrected)
                .map_err(|_| Error::param(format!("bad offset in `{s}`"))),
            None => Err(Error::param(format!("unknown bin income mode `{s}`"))),
        },
    }
}

fn parse_open_bin(s: &str, convention: Convention) -> Result<OpenBinMode> {
    match s {
        "drop" => Ok(OpenBinMode::Drop),
        "mean" => Ok(OpenBinMode::ReportedMean),
        _ => match s.strip_prefix("pareto:") {
            Some(k) => k
                .parse()
                .map(|k| OpenBinMode::Pareto { k, convention })
                .map_err(|_| Error::param(format!("bad index in `{s}`"))),
            None => Err(Error::param(format!("unknown open-bin mode `{s}`"))),
        },
    }
}

fn gini(args: GiniArgs) -> Result<()> {
    let pid = BinnedPid::load(&args.pid, Units::Dollars)?;
    let pid = with_zero_income_mass(&pid, args.zero_count)?;
    let open = parse_open_bin(&args.open_bin, args.convention)?;
    let lorenz = lorenz_from_bins(&pid, parse_bin_income(&args.bin_income)?, open)?;
    let g = gini_trapezoid(&lorenz);
    let (k, x_m) = match open {
        OpenBinMode::Pareto { k, .. } => (Some(k), pid.open_bin().map(|b| b.lower)),
        _ => (None, None),
    };
    let record = json!({
        "gini": g,
        "convention": args.convention,
        "open_bin_mode": open.name(),
        "k": k,
        "x_m": x_m,
    });
    write(&args.out, "lorenz.csv", &lorenz.to_csv())?;
    write(&args.out, "gini.json", &pretty(&record))?;
    println!("{}", record);
    Ok(())
}

fn normalize(args: NormalizeArgs) -> Result<()> {
    let pid = BinnedPid::load(&args.pid, Units::Dollars)?;
    let factor = args.rescale.or(args.gpi).unwrap_or(1.0);
    if !args.density {
        if args.per_person {
            return Err(Error::param("--per-person applies to --density output"));
        }
        write(&args.out, "pid.csv", &pid.rescale_income(factor)?.to_csv())?;
        return Ok(());
    }
    let mut density = to_density(&pid, OpenBinPolicy::Drop)?;
    if args.per_person {
        density = density.per_person()?;
    }
    let density = density.rescale_income(factor)?;
    write(&args.out, "density.csv", &density.to_csv())
}

fn pareto_fit(args: ParetoFitArgs) -> Result<()> {
    let pid = BinnedPid::load(&args.pid, Units::Dollars)?;
    let tail: Vec<_> = pid
        .bins()
        .iter()
        .filter(|b| b.lower >= args.threshold && !b.is_zero_mass())
        .collect();
    let k = match args.method.as_str() {
        "regression" => {
            let points: Vec<(f64, f64)> = tail
                .iter()
                .filter_map(|b| Some((b.center()?, b.count / b.width()?)))
                .filter(|p| p.1 > 0.0)
                .collect();
            pareto_k_from_regression(&points, args.convention)?
        }
        "mean" => {
            let (mut persons, mut income) = (0.0, 0.0);
            for b in &tail {
                let mean = match (b.mean_income, b.center()) {
                    (Some(m), _) => m,
                    (None, Some(c)) => c,
                    (None, None) => args.open_mean.ok_or_else(|| {
                        Error::bins(format!(
                            "open bin from {} has no mean; pass --open-mean",
                            b.lower
                        ))
                    })?,
                };
                persons += b.count;
                income += b.count * mean;
            }
            if persons <= 0.0 {
                return Err(Error::bins(format!("no persons above {}", args.threshold)));
            }
            pareto_k_from_mean(args.threshold, income / persons, args.convention)?
        }
        other => return Err(Error::param(format!("unknown method `{other}`"))),
    };
    let record = json!({
        "k": k,
        "x_m": args.threshold,
        "method": args.method,
        "convention": args.convention,
        "bins": tail.len(),
    });
    println!("{}", record);
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let (params, series, pyramids) = load_model(&args.model)?;
    let dollars = match args.units.as_str() {
        "dimensionless" => false,
        "dollars" => true,
        other => return Err(Error::param(format!("unknown units `{other}`"))),
    };
    let mut observations = Vec::new();
    let entries = fs::read_dir(&args.obs).map_err(|e| Error::io(&args.obs, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    for path in paths {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let Some(year) = stem
            .strip_prefix("pid_")
            .and_then(|y| y.parse::<i32>().ok())
        else {
            continue;
        };
        let units = if dollars {
            Units::Dollars
        } else {
            Units::Dimensionless
        };
        let mut pid = BinnedPid::load(&path, units)?;
        if dollars {
            if let Some(anchor) = args.anchor {
                let scale = scale_factor(&params, &series, year, anchor)?;
                pid = pid
                    .rescale_income(scale.value)?
                    .with_units(Units::Dimensionless);
            }
        }
        observations.push((year, pid));
    }
    if observations.is_empty() {
        return Err(Error::range(format!(
            "no pid_YEAR.csv files in {}",
            args.obs.display()
        )));
    }
    let fit = fit_model(
        &params,
        args.alpha,
        args.tcr,
        &observations,
        &series,
        &pyramids,
    )?;
    write(&args.out, "misfit.csv", &fit.misfit_csv())?;
    let record = json!({
        "alpha0": fit.best.alpha0,
        "tcr0": fit.best.tcr0,
        "misfit": fit.best_misfit,
        "misfit_kind": fit.misfit_kind,
        "years": observations.iter().map(|o| o.0).collect::<Vec<_>>(),
    });
    write(&args.out, "best.json", &pretty(&record))?;
    println!("{}", record);
    Ok(())
}
