//! Grid-search recovery of model parameters from observed distributions.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::demography::Pyramids;
use crate::economy::GrowthSeries;
use crate::empirical::{BinnedPid, Units};
use crate::error::{Error, Result};
use crate::synthesis::{simulate_years, SyntheticPopulation};
use crate::trajectory::{build_context, ModelParams};

pub const MISFIT_CSV_HEADER: [&str; 3] = ["alpha0", "tcr0", "misfit"];

/// Description of the misfit, recorded with every fit.
pub const MISFIT_KIND: &str =
    "sum over closed observed bins below mp of (model - observed per-person density)^2 * width";

/// Evenly spaced values `lo, lo + step, ..., hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || hi < lo || step <= 0.0 {
            return Err(Error::param(format!("degenerate grid {lo}:{hi}:{step}")));
        }
        Ok(GridAxis { lo, hi, step })
    }

    pub fn single(value: f64) -> Self {
        GridAxis {
            lo: value,
            hi: value,
            step: 1.0,
        }
    }

    /// Grid values rounded to 12 decimals so that `0.08 + 7 * 0.001` is `0.087`.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    /// `LO:HI:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::param(format!("grid `{s}` is not LO:HI:STEP"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        GridAxis::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MisfitPoint {
    pub alpha0: f64,
    pub tcr0: f64,
    /// Infinite where the parameters are invalid.
    pub misfit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub best: ModelParams,
    pub best_misfit: f64,
    /// Every grid point, alpha0 outer, tcr0 inner.
    pub surface: Vec<MisfitPoint>,
    pub misfit_kind: &'static str,
}

impl FitResult {
    pub fn misfit_csv(&self) -> String {
        let mut out = MISFIT_CSV_HEADER.join(",");
        out.push('\n');
        for p in &self.surface {
            let _ = writeln!(out, "{},{},{:.12e}", p.alpha0, p.tcr0, p.misfit);
        }
        out
    }
}

/// Misfit of one simulated population against one observed table.
pub fn misfit(pop: &SyntheticPopulation, observed: &BinnedPid, threshold: f64) -> Result<f64> {
    if observed.units() != Units::Dimensionless {
        return Err(Error::Units(format!(
            "observations are {:?}; convert them to dimensionless incomes first",
            observed.units()
        )));
    }
    let model_total = pop.total_weight();
    let obs_total = observed.total_count();
    if model_total <= 0.0 || obs_total <= 0.0 {
        return Err(Error::param("empty population"));
    }
    let mut incomes: Vec<(f64, f64)> = pop.entries.iter().map(|e| (e.income, e.weight)).collect();
    incomes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let prefix: Vec<f64> = incomes
        .iter()
        .scan(0.0, |acc, &(_, w)| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let weight_below = |x: f64| {
        let n = incomes.partition_point(|p| p.0 < x);
        if n == 0 {
            0.0
        } else {
            prefix[n - 1]
        }
    };
    let mut sum = 0.0;
    for bin in observed.bins() {
        let Some(upper) = bin.upper else { continue };
        let width = upper - bin.lower;
        if width <= 0.0 || upper > threshold {
            continue;
        }
        let model = (weight_below(upper) - weight_below(bin.lower)) / (model_total * width);
        let obs = bin.count / (obs_total * width);
        sum += (model - obs).powi(2) * width;
    }
    Ok(sum)
}

fn evaluate(
    params: &ModelParams,
    observations: &[(i32, BinnedPid)],
    series: &GrowthSeries,
    pyramids: &Pyramids,
) -> Result<f64> {
    let last = observations.iter().map(|o| o.0).max().expect("non-empty");
    let context = build_context(params, series, last)?;
    let years: Vec<i32> = observations.iter().map(|o| o.0).collect();
    let pops = simulate_years(params, &context, pyramids, &years)?;
    let mut total = 0.0;
    for (pop, (year, obs)) in pops.iter().zip(observations) {
        total += misfit(pop, obs, context.mp(*year)?)?;
    }
    Ok(total)
}

/// Exhaustive search over `alpha0 x tcr0`; ties go to the smaller alpha0,
/// then the smaller tcr0.
pub fn fit_model(
    base: &ModelParams,
    alpha: GridAxis,
    tcr: GridAxis,
    observations: &[(i32, BinnedPid)],
    series: &GrowthSeries,
    pyramids: &Pyramids,
) -> Result<FitResult> {
    if observations.is_empty() {
        return Err(Error::param("no observations"));
    }
    for (year, obs) in observations {
        if obs.units() != Units::Dimensionless {
            return Err(Error::Units(format!(
                "observations for {year} are {:?}; apply a scale first",
                obs.units()
            )));
        }
        if *year < base.t0 || !series.contains(*year) {
            return Err(Error::range(format!(
                "observation year {year} (model covers {}..={})",
                base.t0,
                series.last_year()
            )));
        }
    }
    let grid: Vec<(f64, f64)> = alpha
        .values()
        .into_iter()
        .flat_map(|a| tcr.values().into_iter().map(move |t| (a, t)))
        .collect();
    let misfits: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&(alpha0, tcr0)| {
            let params = ModelParams {
                alpha0,
                tcr0,
                ..base.clone()
            };
            match params.validate() {
                Err(_) => Ok(f64::INFINITY),
                Ok(()) => evaluate(&params, observations, series, pyramids),
            }
        })
        .collect();
    let mut surface = Vec::with_capacity(grid.len());
    for (&(alpha0, tcr0), m) in grid.iter().zip(misfits) {
        surface.push(MisfitPoint {
            alpha0,
            tcr0,
            misfit: m?,
        });
    }
    // grid order is ascending alpha0 then tcr0, so the first minimum wins ties
    let best = surface
        .iter()
        .copied()
        .reduce(|a, b| if b.misfit < a.misfit { b } else { a })
        .expect("grid is non-empty");
    if !best.misfit.is_finite() {
        return Err(Error::param("no valid parameters in the grid"));
    }
    Ok(FitResult {
        best: ModelParams {
            alpha0: best.alpha0,
            tcr0: best.tcr0,
            ..base.clone()
        },
        best_misfit: best.misfit,
        surface,
        misfit_kind: MISFIT_KIND,
    })
}

/// Least-squares scale `sum p o / sum p p` over the bands present in both inputs.
pub fn fit_scale(predicted: &[(u32, f64)], observed: &[(u32, f64)]) -> Result<f64> {
    let unit: Vec<(u32, f64)> = predicted.iter().map(|&(b, _)| (b, 1.0)).collect();
    fit_scale_weighted(predicted, observed, &unit)
}

/// As [`fit_scale`] with a weight per band.
pub fn fit_scale_weighted(
    predicted: &[(u32, f64)],
    observed: &[(u32, f64)],
    weights: &[(u32, f64)],
) -> Result<f64> {
    let (mut po, mut pp, mut shared) = (0.0, 0.0, 0);
    for &(band, p) in predicted {
        let Some(&(_, o)) = observed.iter().find(|x| x.0 == band) else {
            continue;
        };
        let w = weights.iter().find(|x| x.0 == band).map_or(0.0, |x| x.1);
        po += w * p * o;
        pp += w * p * p;
        shared += 1;
    }
    if shared == 0 {
        return Err(Error::param("no bands in common"));
    }
    if pp <= 0.0 {
        return Err(Error::param("predicted values are all zero"));
    }
    Ok(po / pp)
}
