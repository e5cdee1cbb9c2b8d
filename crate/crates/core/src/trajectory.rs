//! Individual income trajectories.
//!
//! A person in state `(i, j)` earns a dimensionless income `M` that relaxes
//! towards `sigma_min * lambda_min * S' * L'` at rate `alpha0 / (lambda_min * L')`
//! until work experience reaches the critical value `tcr`, then decays at rate
//! `alpha1 / (lambda_min * L')`. All coefficients are held constant within a
//! calendar year, so each year is advanced with the exact exponential solution.

use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::economy::{FactorKind, GrowthSeries};
use crate::error::{Error, Result};
use crate::inequality::Convention;

/// How the dimensionless Pareto threshold follows the economy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdGrowth {
    /// Threshold scales with the real driver column.
    Real,
    /// Threshold scales with the nominal column of the driver's scope.
    Nominal,
}

/// Treatment of cohorts that started work before the model start year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreStart {
    /// Years before `t0` use the `t0` coefficients, so the model starts from
    /// the stationary distribution of its start year.
    StationaryHistory,
    /// Income is zero at `t0` and integration starts there.
    ZeroAtStart,
}

macro_rules! enum_from_str {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(Error::param(format!("unknown {} `{s}`", stringify!($ty)))),
                }
            }
        }
    };
}

enum_from_str!(ThresholdGrowth { "real" => ThresholdGrowth::Real, "nominal" => ThresholdGrowth::Nominal });
enum_from_str!(PreStart {
    "stationary_history" => PreStart::StationaryHistory,
    "zero_at_start" => PreStart::ZeroAtStart,
});

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Model start year; every time-dependent coefficient is 1 here.
    pub t0: i32,
    /// Dissipation coefficient at `L' = 1`, per year.
    pub alpha0: f64,
    /// Critical work experience at `t0`, years.
    pub tcr0: f64,
    pub grid_min: u32,
    pub grid_max: u32,
    /// Dimensionless Pareto threshold at `t0`.
    pub mp0: f64,
    /// Age (years) at which the top state has decayed to `reference_level`.
    pub reference_age: f64,
    pub reference_level: f64,
    pub pareto_k: f64,
    pub pareto_convention: Convention,
    pub tail_factor: f64,
    pub driver: FactorKind,
    pub threshold_growth: ThresholdGrowth,
    pub work_start_age: u32,
    pub first_age: u32,
    pub last_age: u32,
    pub pre_start: PreStart,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::preset_1960()
    }
}

impl ModelParams {
    fn base(t0: i32, alpha0: f64, tcr0: f64, mp0: f64) -> Self {
        ModelParams {
            t0,
            alpha0,
            tcr0,
            grid_min: 2,
            grid_max: 30,
            mp0,
            reference_age: 64.0,
            reference_level: 0.72,
            pareto_k: 1.35,
            pareto_convention: Convention::Paper,
            tail_factor: 1.33,
            driver: FactorKind::RealPerCapita16,
            threshold_growth: ThresholdGrowth::Real,
            work_start_age: 15,
            first_age: 16,
            last_age: 75,
            pre_start: PreStart::StationaryHistory,
        }
    }

    /// Start 1950: `tcr0 = 23.5`, `alpha0 = 0.097`. The threshold is the 1960
    /// value 0.43 carried back by real per-capita (16+) growth 1950-1960.
    pub fn preset_1950() -> Self {
        ModelParams::base(1950, 0.097, 23.5, 0.342)
    }

    /// Start 1960: `tcr0 = 26.5`, `alpha0 = 0.087`, `mp0 = 0.43`.
    pub fn preset_1960() -> Self {
        ModelParams::base(1960, 0.087, 26.5, 0.43)
    }

    /// Start 1967: `tcr0 = 32`, `alpha0 = 0.071`, `mp0 = 0.43`, decay
    /// referenced to 0.84 at age 60.
    pub fn preset_1967() -> Self {
        ModelParams {
            reference_age: 60.0,
            reference_level: 0.84,
            ..ModelParams::base(1967, 0.071, 32.0, 0.43)
        }
    }

    pub fn preset(year: i32) -> Option<Self> {
        match year {
            1950 => Some(ModelParams::preset_1950()),
            1960 => Some(ModelParams::preset_1960()),
            1967 => Some(ModelParams::preset_1967()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::param(what.to_string()))
            }
        };
        check(
            self.alpha0 > 0.0 && self.alpha0.is_finite(),
            "alpha0 must be > 0",
        )?;
        check(self.tcr0 > 0.0 && self.tcr0.is_finite(), "tcr0 must be > 0")?;
        check(self.mp0 > 0.0 && self.mp0 < 1.0, "mp0 must lie in (0, 1)")?;
        check(
            self.reference_level > 0.0 && self.reference_level <= 1.0,
            "reference_level must lie in (0, 1]",
        )?;
        check(
            self.reference_experience() > self.tcr0,
            "reference_age - work_start_age must exceed tcr0",
        )?;
        check(
            self.standard_pareto_index() > 1.0,
            "Pareto index must exceed 1 (standard convention)",
        )?;
        check(self.tail_factor > 0.0, "tail_factor must be > 0")?;
        check(
            self.grid_min >= 1 && self.grid_min < self.grid_max,
            "grid_min must be >= 1 and below grid_max",
        )?;
        check(
            self.first_age > self.work_start_age && self.first_age <= self.last_age,
            "ages must start after work_start_age",
        )?;
        Ok(())
    }

    pub fn ages(&self) -> RangeInclusive<u32> {
        self.first_age..=self.last_age
    }

    /// `reference_age` expressed as work experience.
    pub fn reference_experience(&self) -> f64 {
        self.reference_age - f64::from(self.work_start_age)
    }

    pub fn state_count(&self) -> usize {
        let n = (self.grid_max - self.grid_min + 1) as usize;
        n * n
    }

    pub fn states(&self) -> impl Iterator<Item = StateIndex> + Clone {
        let (lo, hi) = (self.grid_min, self.grid_max);
        (lo..=hi).flat_map(move |i| (lo..=hi).map(move |j| StateIndex { i, j }))
    }

    pub fn top_state(&self) -> StateIndex {
        StateIndex {
            i: self.grid_max,
            j: self.grid_max,
        }
    }

    /// Tail index in the standard convention (density `k x_m^k / x^(k+1)`).
    pub fn standard_pareto_index(&self) -> f64 {
        self.pareto_convention.to_standard(self.pareto_k)
    }

    /// Calendar year in which a person of `age` in `year` started work.
    pub fn start_year(&self, year: i32, age: u32) -> i32 {
        year - (age as i32 - self.work_start_age as i32)
    }
}

/// Capability rank `i` and means rank `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateIndex {
    pub i: u32,
    pub j: u32,
}

impl StateIndex {
    pub fn new(i: u32, j: u32) -> Self {
        StateIndex { i, j }
    }

    pub fn s_norm(self, grid_max: u32) -> f64 {
        f64::from(self.i) / f64::from(grid_max)
    }

    pub fn l_norm(self, grid_max: u32) -> f64 {
        f64::from(self.j) / f64::from(grid_max)
    }

    pub fn check(self, params: &ModelParams) -> Result<()> {
        let grid = params.grid_min..=params.grid_max;
        if grid.contains(&self.i) && grid.contains(&self.j) {
            Ok(())
        } else {
            Err(Error::range(format!("state ({}, {})", self.i, self.j)))
        }
    }
}

/// Economy-wide coefficients for one calendar year.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct YearCoefficients {
    pub year: i32,
    /// Cumulative real driver growth since `t0`.
    pub growth: f64,
    pub lambda_min: f64,
    pub sigma_min: f64,
    pub tcr: f64,
    pub mp: f64,
    /// Cumulative nominal growth (driver scope) since `t0`.
    pub nominal_growth: f64,
}

#[derive(Clone, Debug)]
pub struct CalendarContext {
    t0: i32,
    years: Vec<YearCoefficients>,
}

impl CalendarContext {
    pub fn t0(&self) -> i32 {
        self.t0
    }

    pub fn last_year(&self) -> i32 {
        self.t0 + self.years.len() as i32 - 1
    }

    pub fn covers(&self, year: i32) -> bool {
        (self.t0..=self.last_year()).contains(&year)
    }

    pub fn year(&self, year: i32) -> Result<&YearCoefficients> {
        if !self.covers(year) {
            return Err(Error::range(format!(
                "year {year} (context covers {}..{})",
                self.t0,
                self.last_year()
            )));
        }
        Ok(&self.years[(year - self.t0) as usize])
    }

    /// Coefficients used for integration; years before `t0` take the `t0` values.
    fn integration_year(&self, year: i32) -> Result<&YearCoefficients> {
        self.year(year.max(self.t0))
    }

    pub fn lambda_min(&self, year: i32) -> Result<f64> {
        Ok(self.year(year)?.lambda_min)
    }

    pub fn sigma_min(&self, year: i32) -> Result<f64> {
        Ok(self.year(year)?.sigma_min)
    }

    pub fn tcr(&self, year: i32) -> Result<f64> {
        Ok(self.year(year)?.tcr)
    }

    pub fn mp(&self, year: i32) -> Result<f64> {
        Ok(self.year(year)?.mp)
    }

    pub fn iter(&self) -> impl Iterator<Item = &YearCoefficients> {
        self.years.iter()
    }
}

/// Evaluates the calendar coefficients for `t0..=last_year`.
pub fn build_context(
    params: &ModelParams,
    series: &GrowthSeries,
    last_year: i32,
) -> Result<CalendarContext> {
    params.validate()?;
    if last_year < params.t0 {
        return Err(Error::range(format!(
            "last year {last_year} precedes t0 {}",
            params.t0
        )));
    }
    let real = params.driver.real();
    let nominal = params.driver.nominal();
    let mut years = Vec::with_capacity((last_year - params.t0 + 1) as usize);
    for year in params.t0..=last_year {
        let growth = series.growth_between(real, params.t0, year)?;
        let nominal_growth = series.growth_between(nominal, params.t0, year)?;
        let root = growth.sqrt();
        let threshold_growth = match params.threshold_growth {
            ThresholdGrowth::Real => growth,
            ThresholdGrowth::Nominal => nominal_growth,
        };
        years.push(YearCoefficients {
            year,
            growth,
            lambda_min: root,
            sigma_min: root,
            tcr: params.tcr0 * root,
            mp: params.mp0 * threshold_growth,
            nominal_growth,
        });
    }
    Ok(CalendarContext {
        t0: params.t0,
        years,
    })
}

fn alpha1_from(params: &ModelParams, coeffs: &YearCoefficients) -> Result<f64> {
    let window = params.reference_experience() - coeffs.tcr;
    if window <= 0.0 {
        return Err(Error::range(format!(
            "decay window in {}: reference experience {} does not exceed tcr {:.3}",
            coeffs.year,
            params.reference_experience(),
            coeffs.tcr
        )));
    }
    Ok(-coeffs.lambda_min * params.reference_level.ln() / window)
}

/// Decay coefficient for `year`, chosen so the top state falls to
/// `reference_level` of its value at `tcr` by `reference_age`.
pub fn alpha1_at(params: &ModelParams, context: &CalendarContext, year: i32) -> Result<f64> {
    alpha1_from(params, context.year(year)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Growth,
    Decay,
}

/// Integrator state for one trajectory.
struct Stepper<'a> {
    params: &'a ModelParams,
    context: &'a CalendarContext,
    s_norm: f64,
    l_norm: f64,
    start_year: i32,
    substeps: u32,
}

impl Stepper<'_> {
    /// Advances `(income, phase)` from experience `from` to `to`.
    fn run(&self, mut income: f64, mut phase: Phase, from: f64, to: f64) -> Result<(f64, Phase)> {
        let mut t = from;
        while t < to {
            let interval = t.floor();
            // experience (k, k + 1] is lived in calendar year start + k + 1
            let year = self.start_year + interval as i32 + 1;
            let end = (interval + 1.0).min(to);
            let coeffs = self.context.integration_year(year)?;
            let n = self.substeps.max(1);
            let h = (end - t) / f64::from(n);
            for s in 0..n {
                let a = t + h * f64::from(s);
                let b = if s + 1 == n { end } else { a + h };
                income = self.advance(coeffs, income, &mut phase, a, b)?;
            }
            t = end;
        }
        Ok((income, phase))
    }

    fn advance(
        &self,
        coeffs: &YearCoefficients,
        mut income: f64,
        phase: &mut Phase,
        from: f64,
        to: f64,
    ) -> Result<f64> {
        let mut t = from;
        if *phase == Phase::Growth {
            if t >= coeffs.tcr {
                *phase = Phase::Decay;
            } else {
                let stop = to.min(coeffs.tcr);
                let rate = self.params.alpha0 / (coeffs.lambda_min * self.l_norm);
                let ceiling = coeffs.sigma_min * coeffs.lambda_min * self.s_norm * self.l_norm;
                income = ceiling + (income - ceiling) * (-rate * (stop - t)).exp();
                t = stop;
                if t >= coeffs.tcr {
                    *phase = Phase::Decay;
                }
            }
        }
        if *phase == Phase::Decay && to > t {
            let alpha1 = alpha1_from(self.params, coeffs)?;
            let rate = alpha1 / (coeffs.lambda_min * self.l_norm);
            income *= (-rate * (to - t)).exp();
        }
        Ok(income)
    }
}

fn stepper<'a>(
    params: &'a ModelParams,
    context: &'a CalendarContext,
    state: StateIndex,
    start_year: i32,
    substeps: u32,
) -> Result<Stepper<'a>> {
    state.check(params)?;
    Ok(Stepper {
        params,
        context,
        s_norm: state.s_norm(params.grid_max),
        l_norm: state.l_norm(params.grid_max),
        start_year,
        substeps,
    })
}

fn check_experience(experience: f64) -> Result<()> {
    if experience >= 0.0 && experience.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "experience {experience} must be >= 0"
        )))
    }
}

/// Income at `experience` for a cohort that started work in `start_year >= t0`.
pub fn income_at(
    params: &ModelParams,
    context: &CalendarContext,
    state: StateIndex,
    start_year: i32,
    experience: f64,
) -> Result<f64> {
    if start_year < params.t0 {
        return Err(Error::range(format!(
            "start year {start_year} precedes t0 {}",
            params.t0
        )));
    }
    income_with_substeps(params, context, state, start_year, experience, 1)
}

/// As [`income_at`] but with each calendar year split into `substeps` pieces.
/// The per-year step is exact, so the result does not depend on `substeps`
/// beyond rounding.
pub fn income_with_substeps(
    params: &ModelParams,
    context: &CalendarContext,
    state: StateIndex,
    start_year: i32,
    experience: f64,
    substeps: u32,
) -> Result<f64> {
    check_experience(experience)?;
    let stepper = stepper(params, context, state, start_year, substeps)?;
    Ok(stepper.run(0.0, Phase::Growth, 0.0, experience)?.0)
}

/// Starting point of a cohort under `params.pre_start`: the experience
/// from which integration begins and the phase there. Income is zero at
/// and before that experience.
fn cohort_origin(
    params: &ModelParams,
    context: &CalendarContext,
    start_year: i32,
) -> Result<(f64, Phase)> {
    let at_t0 = f64::from(params.t0 - start_year);
    match params.pre_start {
        PreStart::ZeroAtStart if at_t0 > 0.0 => {
            let phase = if at_t0 >= context.year(params.t0)?.tcr {
                Phase::Decay
            } else {
                Phase::Growth
            };
            Ok((at_t0, phase))
        }
        _ => Ok((0.0, Phase::Growth)),
    }
}

/// Income for any cohort, applying `params.pre_start` to cohorts that
/// started before `t0`.
pub fn cohort_income(
    params: &ModelParams,
    context: &CalendarContext,
    state: StateIndex,
    start_year: i32,
    experience: f64,
) -> Result<f64> {
    check_experience(experience)?;
    let stepper = stepper(params, context, state, start_year, 1)?;
    let (origin, phase) = cohort_origin(params, context, start_year)?;
    if experience <= origin {
        return Ok(0.0);
    }
    Ok(stepper.run(0.0, phase, origin, experience)?.0)
}

/// [`cohort_income`] at integer experiences `0..=max_experience`, advancing
/// one trajectory instead of restarting for each point.
pub fn income_path(
    params: &ModelParams,
    context: &CalendarContext,
    state: StateIndex,
    start_year: i32,
    max_experience: u32,
) -> Result<Vec<f64>> {
    let stepper = stepper(params, context, state, start_year, 1)?;
    let (origin, mut phase) = cohort_origin(params, context, start_year)?;
    let mut income = 0.0;
    let mut at = origin;
    let mut path = Vec::with_capacity(max_experience as usize + 1);
    for t in 0..=max_experience {
        let t = f64::from(t);
        if t > at {
            (income, phase) = stepper.run(income, phase, at, t)?;
            at = t;
        }
        path.push(income);
    }
    Ok(path)
}

/// Two-exponential approximation of the normalized mean-income curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceCurve {
    pub alpha_growth: f64,
    pub alpha_decay: f64,
    pub tcr: f64,
}

impl Default for ReferenceCurve {
    fn default() -> Self {
        ReferenceCurve {
            alpha_growth: 0.085,
            alpha_decay: 0.06,
            tcr: 39.0,
        }
    }
}

impl ReferenceCurve {
    pub fn value(&self, t: f64) -> f64 {
        reference_mean_curve(t, self.alpha_growth, self.alpha_decay, self.tcr)
    }
}

pub fn reference_mean_curve(t: f64, alpha_g: f64, alpha_d: f64, tcr: f64) -> f64 {
    if t <= tcr {
        1.0 - (-alpha_g * t).exp()
    } else {
        (1.0 - (-alpha_g * tcr).exp()) * (-alpha_d * (t - tcr)).exp()
    }
}
