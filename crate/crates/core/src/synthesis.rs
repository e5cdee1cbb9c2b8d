//! Synthetic populations assembled from trajectories and age pyramids.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demography::Pyramids;
use crate::economy::GrowthSeries;
use crate::empirical::{Bin, BinnedPid, Units};
use crate::error::{Error, Result};
use crate::inequality::{gini_exact, pareto_quantile};
use crate::trajectory::{build_context, income_path, CalendarContext, ModelParams, StateIndex};

pub const BANDS_CSV_HEADER: [&str; 6] = [
    "band_lo",
    "band_hi",
    "mean",
    "median",
    "norm_mean",
    "norm_median",
];

/// Upper limit on the number of bins produced by [`to_binned`].
pub const MAX_BINS: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub age: u32,
    pub state: StateIndex,
    /// Persons represented: the age's population divided by the state count.
    pub weight: f64,
    pub income: f64,
    pub in_tail: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyntheticPopulation {
    pub year: i32,
    pub work_start_age: u32,
    pub entries: Vec<Entry>,
}

impl SyntheticPopulation {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn incomes(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.income).collect()
    }

    pub fn experience(&self, entry: &Entry) -> u32 {
        entry.age - self.work_start_age
    }

    pub fn max_income(&self) -> f64 {
        self.entries.iter().map(|e| e.income).fold(0.0, f64::max)
    }

    pub fn gini(&self) -> Result<f64> {
        Ok(gini_exact(&self.weights(), &self.incomes())?.value)
    }
}

/// Dimensionless population for `year`, before the Pareto tail is attached.
pub fn simulate_year(
    params: &ModelParams,
    context: &CalendarContext,
    pyramids: &Pyramids,
    year: i32,
) -> Result<SyntheticPopulation> {
    Ok(simulate_years(params, context, pyramids, &[year])?.remove(0))
}

/// [`simulate_year`] for several years, following each cohort trajectory once.
pub fn simulate_years(
    params: &ModelParams,
    context: &CalendarContext,
    pyramids: &Pyramids,
    years: &[i32],
) -> Result<Vec<SyntheticPopulation>> {
    let (Some(&lo), Some(&hi)) = (years.iter().min(), years.iter().max()) else {
        return Ok(Vec::new());
    };
    for &year in [lo, hi].iter() {
        if !context.covers(year) {
            return Err(Error::range(format!(
                "year {year} (context covers {}..={})",
                context.t0(),
                context.last_year()
            )));
        }
    }
    let ages: Vec<u32> = params.ages().collect();
    let weights = years
        .iter()
        .map(|&year| {
            let pyramid = pyramids.get(year)?;
            ages.iter()
                .map(|&age| {
                    pyramid
                        .population(age)
                        .map(|p| p / params.state_count() as f64)
                        .ok_or_else(|| Error::range(format!("age {age} in the {year} pyramid")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let ws = params.work_start_age;
    let min_exp = params.first_age - ws;
    let max_exp = params.last_age - ws;
    let first_start = lo - max_exp as i32;
    let last_start = hi - min_exp as i32;
    let states: Vec<StateIndex> = params.states().collect();
    let n_ages = ages.len();
    // incomes[state][year_idx * n_ages + age_idx]
    let incomes: Vec<Vec<f64>> = states
        .par_iter()
        .map(|&state| {
            let mut out = vec![0.0; years.len() * n_ages];
            for start in first_start..=last_start {
                let reach = ((hi - start) as u32).min(max_exp);
                let path = income_path(params, context, state, start, reach)?;
                for (y, &year) in years.iter().enumerate() {
                    let exp = year - start;
                    if exp >= min_exp as i32 && exp <= max_exp as i32 {
                        let a = (exp as u32 - min_exp) as usize;
                        out[y * n_ages + a] = path[exp as usize];
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(years
        .iter()
        .enumerate()
        .map(|(y, &year)| {
            let mut entries = Vec::with_capacity(n_ages * states.len());
            for (a, &age) in ages.iter().enumerate() {
                for (k, &state) in states.iter().enumerate() {
                    entries.push(Entry {
                        age,
                        state,
                        weight: weights[y][a],
                        income: incomes[k][y * n_ages + a],
                        in_tail: false,
                    });
                }
            }
            SyntheticPopulation {
                year,
                work_start_age: ws,
                entries,
            }
        })
        .collect())
}

/// How incomes above the threshold are replaced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum TailMode {
    /// Deterministic weighted midpoint quantiles of the Pareto law.
    #[default]
    Quantile,
    /// Multiply tail incomes by `params.tail_factor`.
    Rescale,
    /// Rank-ordered random Pareto draws from a seeded generator.
    Sampled { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailOutcome {
    pub population: SyntheticPopulation,
    /// Tail income after replacement over tail income before.
    pub extra_income_ratio: f64,
    pub threshold: f64,
    pub tail_entries: usize,
    pub tail_weight: f64,
    /// No entry reached the threshold; the population is unchanged.
    pub empty: bool,
}

/// `(W_before + w_r / 2) / W` for weights in ascending income order.
pub fn midpoint_probabilities(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut before = 0.0;
    weights
        .iter()
        .map(|&w| {
            let p = (before + 0.5 * w) / total;
            before += w;
            p
        })
        .collect()
}

/// Replaces incomes at or above `mp(year)` with Pareto-distributed incomes,
/// keeping the rank order and the number of tail entries.
pub fn attach_pareto_tail(
    pop: &SyntheticPopulation,
    params: &ModelParams,
    context: &CalendarContext,
    mode: TailMode,
) -> Result<TailOutcome> {
    let threshold = context.mp(pop.year)?;
    let a = params.standard_pareto_index();
    if a <= 1.0 {
        return Err(Error::param(format!("Pareto index {a} must exceed 1")));
    }
    let mut tail: Vec<usize> = (0..pop.entries.len())
        .filter(|&i| pop.entries[i].income >= threshold)
        .collect();
    let mut population = pop.clone();
    if tail.is_empty() {
        log::warn!("no incomes reach the threshold {threshold} in {}", pop.year);
        return Ok(TailOutcome {
            population,
            extra_income_ratio: 1.0,
            threshold,
            tail_entries: 0,
            tail_weight: 0.0,
            empty: true,
        });
    }
    let entries = &pop.entries;
    tail.sort_by(|&x, &y| {
        let (ex, ey) = (&entries[x], &entries[y]);
        ex.income
            .total_cmp(&ey.income)
            .then((ex.age, ex.state).cmp(&(ey.age, ey.state)))
    });
    let weights: Vec<f64> = tail.iter().map(|&i| entries[i].weight).collect();
    let new_incomes: Vec<f64> = match mode {
        TailMode::Quantile => midpoint_probabilities(&weights)
            .into_iter()
            .map(|p| pareto_quantile(threshold, a, p))
            .collect(),
        TailMode::Rescale => tail
            .iter()
            .map(|&i| entries[i].income * params.tail_factor)
            .collect(),
        TailMode::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draws: Vec<f64> = (0..tail.len())
                .map(|_| pareto_quantile(threshold, a, rng.random::<f64>()))
                .collect();
            draws.sort_by(f64::total_cmp);
            draws
        }
    };
    let (mut before, mut after, mut tail_weight) = (0.0, 0.0, 0.0);
    for (&i, &income) in tail.iter().zip(&new_incomes) {
        let e = &mut population.entries[i];
        before += e.weight * e.income;
        after += e.weight * income;
        tail_weight += e.weight;
        e.income = income;
        e.in_tail = true;
    }
    Ok(TailOutcome {
        population,
        extra_income_ratio: if before > 0.0 { after / before } else { 1.0 },
        threshold,
        tail_entries: tail.len(),
        tail_weight,
        empty: false,
    })
}

/// Dollars per dimensionless income unit, `anchor` carried by nominal per-capita growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactor {
    pub year: i32,
    pub value: f64,
}

impl ScaleFactor {
    /// Leaves incomes dimensionless.
    pub fn unit(year: i32) -> Self {
        ScaleFactor { year, value: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub year: i32,
    pub dollars: f64,
}

impl Anchor {
    pub const fn new(year: i32, dollars: f64) -> Self {
        Anchor { year, dollars }
    }
}

pub const ANCHOR_1990: Anchor = Anchor::new(1990, 70_000.0);
pub const ANCHOR_1960: Anchor = Anchor::new(1960, 10_500.0);
pub const ANCHOR_2000: Anchor = Anchor::new(2000, 120_000.0);

impl std::str::FromStr for Anchor {
    type Err = Error;

    /// `YEAR:DOLLARS`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("anchor `{s}` is not YEAR:DOLLARS"));
        let (y, d) = s.split_once(':').ok_or_else(bad)?;
        let year = y.trim().parse().map_err(|_| bad())?;
        let dollars: f64 = d.trim().parse().map_err(|_| bad())?;
        if !(dollars > 0.0 && dollars.is_finite()) {
            return Err(bad());
        }
        Ok(Anchor { year, dollars })
    }
}

pub fn scale_factor(
    params: &ModelParams,
    series: &GrowthSeries,
    year: i32,
    anchor: Anchor,
) -> Result<ScaleFactor> {
    let growth = series.growth_between(params.driver.nominal(), anchor.year, year)?;
    Ok(ScaleFactor {
        year,
        value: anchor.dollars * growth,
    })
}

/// Bins `[k w, (k + 1) w)` from zero to the largest scaled income.
pub fn to_binned(
    pop: &SyntheticPopulation,
    bin_width: f64,
    scale: ScaleFactor,
) -> Result<BinnedPid> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::param(format!("bin width {bin_width} must be > 0")));
    }
    if !(scale.value > 0.0 && scale.value.is_finite()) {
        return Err(Error::param(format!("scale {} must be > 0", scale.value)));
    }
    let top = (pop.max_income() * scale.value / bin_width).floor();
    if top >= MAX_BINS as f64 {
        return Err(Error::param(format!(
            "bin width {bin_width} needs more than {MAX_BINS} bins"
        )));
    }
    let n = top as usize + 1;
    let mut counts = vec![0.0; n];
    let mut mass = vec![0.0; n];
    for e in &pop.entries {
        let x = e.income * scale.value;
        let mut k = ((x / bin_width).floor() as usize).min(n - 1);
        // agree with the edges as written, not the rounded quotient
        while k > 0 && x < k as f64 * bin_width {
            k -= 1;
        }
        while k + 1 < n && x >= (k + 1) as f64 * bin_width {
            k += 1;
        }
        counts[k] += e.weight;
        mass[k] += e.weight * x;
    }
    let bins = (0..n)
        .map(|k| Bin {
            lower: k as f64 * bin_width,
            upper: Some((k + 1) as f64 * bin_width),
            count: counts[k],
            mean_income: (counts[k] > 0.0).then(|| mass[k] / counts[k]),
        })
        .collect();
    let units = if scale.value == 1.0 {
        Units::Dimensionless
    } else {
        Units::Dollars
    };
    BinnedPid::new(bins, units)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandStats {
    /// First experience year in the band.
    pub band_lo: u32,
    /// First experience year after the band.
    pub band_hi: u32,
    pub weight: f64,
    pub mean: f64,
    pub median: f64,
    pub norm_mean: f64,
    pub norm_median: f64,
}

/// Smallest income whose cumulative weight reaches half the total.
pub fn weighted_median(mut pairs: Vec<(f64, f64)>) -> Option<f64> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return None;
    }
    let mut cum = 0.0;
    for &(x, w) in &pairs {
        cum += w;
        if cum >= 0.5 * total {
            return Some(x);
        }
    }
    pairs.last().map(|p| p.0)
}

fn band_members(pop: &SyntheticPopulation, band_width: u32) -> Vec<(u32, Vec<(f64, f64)>)> {
    let mut bands: std::collections::BTreeMap<u32, Vec<(f64, f64)>> = Default::default();
    for e in &pop.entries {
        let band = pop.experience(e) / band_width;
        bands.entry(band).or_default().push((e.income, e.weight));
    }
    bands.into_iter().collect()
}

/// Mean and median income by work-experience band; empty bands are omitted.
pub fn mean_median_by_experience(
    pop: &SyntheticPopulation,
    band_width: u32,
) -> Result<Vec<BandStats>> {
    if band_width == 0 {
        return Err(Error::param("band width must be > 0"));
    }
    if pop.entries.is_empty() {
        return Err(Error::param("empty population"));
    }
    let mut stats = Vec::new();
    for (band, members) in band_members(pop, band_width) {
        let weight: f64 = members.iter().map(|m| m.1).sum();
        if weight <= 0.0 {
            continue;
        }
        let mean = members.iter().map(|m| m.0 * m.1).sum::<f64>() / weight;
        let median = weighted_median(members).expect("band has weight");
        stats.push(BandStats {
            band_lo: band * band_width,
            band_hi: (band + 1) * band_width,
            weight,
            mean,
            median,
            norm_mean: 0.0,
            norm_median: 0.0,
        });
    }
    let peak_mean = stats.iter().map(|s| s.mean).fold(0.0, f64::max);
    let peak_median = stats.iter().map(|s| s.median).fold(0.0, f64::max);
    for s in &mut stats {
        s.norm_mean = if peak_mean > 0.0 {
            s.mean / peak_mean
        } else {
            0.0
        };
        s.norm_median = if peak_median > 0.0 {
            s.median / peak_median
        } else {
            0.0
        };
    }
    Ok(stats)
}

pub fn bands_to_csv(stats: &[BandStats]) -> String {
    let mut out = BANDS_CSV_HEADER.join(",");
    out.push('\n');
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{:.10},{:.10},{:.10},{:.10}",
            s.band_lo, s.band_hi, s.mean, s.median, s.norm_mean, s.norm_median
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortionAbove {
    pub overall: f64,
    /// `(band_lo, band_hi, share)` per occupied experience band.
    pub bands: Vec<(u32, u32, f64)>,
}

fn share_above(members: &[(f64, f64)], threshold: f64) -> f64 {
    let total: f64 = members.iter().map(|m| m.1).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let above: f64 = members
        .iter()
        .filter(|m| m.0 > 0.0 && m.0 >= threshold)
        .map(|m| m.1)
        .sum();
    above / total
}

/// Weighted share of positive incomes at or above `threshold`.
pub fn portion_above(
    pop: &SyntheticPopulation,
    threshold: f64,
    band_width: u32,
) -> Result<PortionAbove> {
    if band_width == 0 {
        return Err(Error::param("band width must be > 0"));
    }
    let all: Vec<(f64, f64)> = pop.entries.iter().map(|e| (e.income, e.weight)).collect();
    let bands = band_members(pop, band_width)
        .into_iter()
        .map(|(b, m)| {
            (
                b * band_width,
                (b + 1) * band_width,
                share_above(&m, threshold),
            )
        })
        .collect();
    Ok(PortionAbove {
        overall: share_above(&all, threshold),
        bands,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct YearSummary {
    pub year: i32,
    pub gini: f64,
    pub tail_share: f64,
    pub extra_income_ratio: f64,
    pub tcr: f64,
    pub mp: f64,
    /// Dollars per unit income, when an anchor was given.
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YearRun {
    /// Population with the tail attached.
    pub population: SyntheticPopulation,
    pub summary: YearSummary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub tail: TailMode,
    pub anchor: Option<Anchor>,
}

/// Simulates `years` and attaches the tail to each.
pub fn run_years(
    params: &ModelParams,
    series: &GrowthSeries,
    pyramids: &Pyramids,
    years: RangeInclusive<i32>,
    options: RunOptions,
) -> Result<Vec<YearRun>> {
    let context = build_context(params, series, *years.end())?;
    run_years_in(params, &context, series, pyramids, years, options)
}

fn run_years_in(
    params: &ModelParams,
    context: &CalendarContext,
    series: &GrowthSeries,
    pyramids: &Pyramids,
    years: RangeInclusive<i32>,
    options: RunOptions,
) -> Result<Vec<YearRun>> {
    let years: Vec<i32> = years.collect();
    let populations = simulate_years(params, context, pyramids, &years)?;
    populations
        .into_par_iter()
        .map(|pop| {
            let year = pop.year;
            let coeffs = context.year(year)?;
            let share = portion_above(&pop, coeffs.mp, 10)?.overall;
            let tail = attach_pareto_tail(&pop, params, context, options.tail)?;
            let scale = options
                .anchor
                .map(|a| scale_factor(params, series, year, a).map(|s| s.value))
                .transpose()?;
            let summary = YearSummary {
                year,
                gini: tail.population.gini()?,
                tail_share: share,
                extra_income_ratio: tail.extra_income_ratio,
                tcr: coeffs.tcr,
                mp: coeffs.mp,
                scale,
            };
            Ok(YearRun {
                population: tail.population,
                summary,
            })
        })
        .collect()
}

/// Extends `series` at a constant rate and simulates the years after it up
/// to `horizon_year`.
#[allow(clippy::too_many_arguments)]
pub fn project_forward(
    params: &ModelParams,
    series: &GrowthSeries,
    pyramids: &Pyramids,
    growth_rate: f64,
    deflator_rate: f64,
    horizon_year: i32,
    options: RunOptions,
) -> Result<Vec<YearRun>> {
    if horizon_year <= series.last_year() {
        return Err(Error::range(format!(
            "horizon {horizon_year} is not beyond {}",
            series.last_year()
        )));
    }
    let extended = series.extended(horizon_year, growth_rate, deflator_rate)?;
    let context = build_context(params, &extended, horizon_year)?;
    run_years_in(
        params,
        &context,
        &extended,
        pyramids,
        series.last_year() + 1..=horizon_year,
        options,
    )
}
