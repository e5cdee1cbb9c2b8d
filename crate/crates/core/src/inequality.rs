//! Lorenz curves, Gini coefficients and Pareto-index estimators.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::empirical::{effective_bin_income, Bin, BinIncomeMode, BinnedPid};
use crate::error::{Error, Result};

/// Sub-quantile points used inside a Pareto open bin.
pub const DEFAULT_OPEN_BIN_POINTS: usize = 10;

const LORENZ_TOL: f64 = 1e-9;

/// How a quoted Pareto index relates to the tail density `a x_m^a / x^(a+1)`.
///
/// `Standard` quotes `a` itself. `Paper` quotes `a - 1`, which is what the
/// mean relation `x_av = (k + 1) x_m / k` and the slope rule `k = -s - 2`
/// produce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Paper,
    Standard,
}

impl Convention {
    pub fn to_standard(self, k: f64) -> f64 {
        match self {
            Convention::Paper => k + 1.0,
            Convention::Standard => k,
        }
    }

    pub fn from_standard(self, a: f64) -> f64 {
        match self {
            Convention::Paper => a - 1.0,
            Convention::Standard => a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Paper => "paper",
            Convention::Standard => "standard",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Convention::Paper),
            "standard" => Ok(Convention::Standard),
            _ => Err(Error::param(format!("unknown convention `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFit {
    pub k: f64,
    pub x_m: f64,
    pub convention: Convention,
}

impl ParetoFit {
    pub fn new(k: f64, x_m: f64, convention: Convention) -> Result<Self> {
        if !(x_m > 0.0 && x_m.is_finite()) {
            return Err(Error::param(format!("x_m {x_m} must be > 0")));
        }
        if !(convention.to_standard(k) > 0.0 && k.is_finite()) {
            return Err(Error::param(format!("Pareto index {k} must be > 0")));
        }
        Ok(ParetoFit { k, x_m, convention })
    }

    /// Index of the density `a x_m^a / x^(a+1)`.
    pub fn standard_index(&self) -> f64 {
        self.convention.to_standard(self.k)
    }

    pub fn density(&self, x: f64) -> f64 {
        let a = self.standard_index();
        if x < self.x_m {
            0.0
        } else {
            a * self.x_m.powf(a) / x.powf(a + 1.0)
        }
    }

    /// Income at cumulative probability `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        pareto_quantile(self.x_m, self.standard_index(), p)
    }

    pub fn mean(&self) -> Result<f64> {
        let a = self.standard_index();
        if a <= 1.0 {
            return Err(Error::param(format!(
                "Pareto mean needs index > 1 (standard), got {a}"
            )));
        }
        Ok(a * self.x_m / (a - 1.0))
    }
}

/// `x_m (1 - p)^(-1/a)`.
pub fn pareto_quantile(x_m: f64, a: f64, p: f64) -> f64 {
    x_m * (1.0 - p).powf(-1.0 / a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorenzPoint {
    pub x: f64,
    pub y: f64,
}

/// Cumulative population share against cumulative income share.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorenzCurve {
    points: Vec<LorenzPoint>,
}

impl LorenzCurve {
    pub fn new(points: Vec<LorenzPoint>) -> Result<Self> {
        let bad = |msg: String| Err(Error::param(format!("Lorenz curve: {msg}")));
        let (Some(first), Some(last)) = (points.first(), points.last()) else {
            return bad("no points".to_string());
        };
        if first.x != 0.0 || first.y != 0.0 {
            return bad("must start at (0, 0)".to_string());
        }
        if (last.x - 1.0).abs() > LORENZ_TOL || (last.y - 1.0).abs() > LORENZ_TOL {
            return bad("must end at (1, 1)".to_string());
        }
        let mut slope = 0.0f64;
        for (idx, w) in points.windows(2).enumerate() {
            let (p, q) = (w[0], w[1]);
            let (dx, dy) = (q.x - p.x, q.y - p.y);
            if dx < 0.0 || dy < 0.0 {
                return bad(format!("decreasing at point {}", idx + 1));
            }
            if q.y > q.x + LORENZ_TOL {
                return bad(format!("above the diagonal at point {}", idx + 1));
            }
            if dx > 0.0 {
                let s = dy / dx;
                if s < slope * (1.0 - LORENZ_TOL) - LORENZ_TOL {
                    return bad(format!("not convex at point {}", idx + 1));
                }
                slope = slope.max(s);
            } else if dy > LORENZ_TOL {
                return bad(format!("vertical step at point {}", idx + 1));
            }
        }
        Ok(LorenzCurve { points })
    }

    /// Curve through cumulative (population, income) totals starting after (0, 0).
    fn from_cumulative(cum: &[(f64, f64)]) -> Result<Self> {
        let &(pop, inc) = cum.last().ok_or_else(|| Error::param("no population"))?;
        if pop <= 0.0 {
            return Err(Error::param("total population must be > 0"));
        }
        if inc <= 0.0 {
            return Err(Error::param("total income must be > 0"));
        }
        let mut points = Vec::with_capacity(cum.len() + 1);
        points.push(LorenzPoint { x: 0.0, y: 0.0 });
        for (idx, &(p, i)) in cum.iter().enumerate() {
            let point = if idx + 1 == cum.len() {
                LorenzPoint { x: 1.0, y: 1.0 }
            } else {
                LorenzPoint {
                    x: p / pop,
                    y: i / inc,
                }
            };
            points.push(point);
        }
        LorenzCurve::new(points)
    }

    pub fn points(&self) -> &[LorenzPoint] {
        &self.points
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.12},{:.12}", p.x, p.y);
        }
        out
    }
}

/// Treatment of an open-ended top bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum OpenBinMode {
    /// Pareto law from the open bin's lower edge with index `k`.
    Pareto { k: f64, convention: Convention },
    /// The bin's reported mean income.
    ReportedMean,
    /// Remove the bin and renormalize.
    Drop,
}

impl OpenBinMode {
    pub fn name(&self) -> &'static str {
        match self {
            OpenBinMode::Pareto { .. } => "pareto",
            OpenBinMode::ReportedMean => "mean",
            OpenBinMode::Drop => "drop",
        }
    }
}

pub fn lorenz_from_bins(
    pid: &BinnedPid,
    mode: BinIncomeMode,
    open_bin: OpenBinMode,
) -> Result<LorenzCurve> {
    lorenz_from_bins_with(pid, mode, open_bin, DEFAULT_OPEN_BIN_POINTS)
}

/// As [`lorenz_from_bins`], with `open_points` sub-quantile points in a
/// Pareto open bin.
pub fn lorenz_from_bins_with(
    pid: &BinnedPid,
    mode: BinIncomeMode,
    open_bin: OpenBinMode,
    open_points: usize,
) -> Result<LorenzCurve> {
    let mut cum = Vec::with_capacity(pid.bins().len() + open_points);
    let (mut pop, mut inc) = (0.0, 0.0);
    let mut last_income = f64::NEG_INFINITY;
    let mut check_order = |income: f64, bin: &Bin| {
        if income < last_income {
            return Err(Error::bins(format!(
                "effective income {income} of bin from {} is below the previous bin",
                bin.lower
            )));
        }
        last_income = income;
        Ok(())
    };
    for bin in pid.bins() {
        if bin.is_open() {
            match open_bin {
                OpenBinMode::Drop => {
                    log::warn!(
                        "dropping open bin from {} holding {} persons",
                        bin.lower,
                        bin.count
                    );
                }
                OpenBinMode::ReportedMean => {
                    let mean = bin.mean_income.ok_or_else(|| {
                        Error::bins(format!("open bin from {} has no reported mean", bin.lower))
                    })?;
                    check_order(mean, bin)?;
                    if bin.count > 0.0 {
                        pop += bin.count;
                        inc += bin.count * mean;
                        cum.push((pop, inc));
                    }
                }
                OpenBinMode::Pareto { k, convention } => {
                    let fit = ParetoFit::new(k, bin.lower, convention)?;
                    let a = fit.standard_index();
                    let mean = fit.mean()?;
                    check_order(bin.lower, bin)?;
                    if bin.count > 0.0 {
                        let n = open_points.max(1);
                        let (pop0, inc0) = (pop, inc);
                        for s in 1..=n {
                            let q = s as f64 / n as f64;
                            // income share of the poorest q of a Pareto population
                            let share = 1.0 - (1.0 - q).powf(1.0 - 1.0 / a);
                            cum.push((pop0 + q * bin.count, inc0 + share * bin.count * mean));
                        }
                        pop = pop0 + bin.count;
                        inc = inc0 + bin.count * mean;
                    }
                }
            }
            continue;
        }
        let income = if bin.is_zero_mass() {
            0.0
        } else {
            effective_bin_income(bin, mode)?
        };
        if income < 0.0 {
            return Err(Error::bins(format!(
                "negative income in bin from {}",
                bin.lower
            )));
        }
        check_order(income, bin)?;
        if bin.count > 0.0 {
            pop += bin.count;
            inc += bin.count * income;
            cum.push((pop, inc));
        }
    }
    LorenzCurve::from_cumulative(&cum)
}

/// `1 - sum (X_i - X_{i-1}) (Y_{i-1} + Y_i)`.
pub fn gini_trapezoid(lorenz: &LorenzCurve) -> f64 {
    let area2: f64 = lorenz
        .points()
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[0].y + w[1].y))
        .sum();
    (1.0 - area2).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GiniExact {
    pub value: f64,
    /// Every income was zero; `value` is 0 by convention.
    pub all_zero: bool,
}

/// Lorenz curve with a vertex at each distinct income.
pub fn lorenz_exact(weights: &[f64], incomes: &[f64]) -> Result<LorenzCurve> {
    let sorted = sorted_weighted(weights, incomes)?;
    let mut cum: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    let (mut pop, mut inc) = (0.0, 0.0);
    for (idx, &(x, w)) in sorted.iter().enumerate() {
        pop += w;
        inc += w * x;
        let last_of_value = sorted.get(idx + 1).is_none_or(|n| n.0 != x);
        let grew = cum.last().map_or(pop > 0.0, |&(p, _)| pop > p);
        if last_of_value && grew {
            cum.push((pop, inc));
        }
    }
    LorenzCurve::from_cumulative(&cum)
}

fn sorted_weighted(weights: &[f64], incomes: &[f64]) -> Result<Vec<(f64, f64)>> {
    if weights.len() != incomes.len() {
        return Err(Error::param("weights and incomes differ in length"));
    }
    let mut pairs = Vec::with_capacity(weights.len());
    for (&w, &x) in weights.iter().zip(incomes) {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::param(format!("weight {w} must be >= 0")));
        }
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::param(format!("income {x} must be >= 0")));
        }
        pairs.push((x, w));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// Gini of a discrete weighted income list.
pub fn gini_exact(weights: &[f64], incomes: &[f64]) -> Result<GiniExact> {
    let sorted = sorted_weighted(weights, incomes)?;
    let total_weight: f64 = sorted.iter().map(|p| p.1).sum();
    if total_weight <= 0.0 {
        return Err(Error::param("total weight must be > 0"));
    }
    if sorted.iter().all(|&(x, w)| x == 0.0 || w == 0.0) {
        return Ok(GiniExact {
            value: 0.0,
            all_zero: true,
        });
    }
    Ok(GiniExact {
        value: gini_trapezoid(&lorenz_exact(weights, incomes)?),
        all_zero: false,
    })
}

/// Adds `zero_count` persons with no income in a leading `[0, 0]` bin.
pub fn with_zero_income_mass(pid: &BinnedPid, zero_count: f64) -> Result<BinnedPid> {
    if !(zero_count >= 0.0 && zero_count.is_finite()) {
        return Err(Error::param(format!(
            "zero count {zero_count} must be >= 0"
        )));
    }
    if zero_count == 0.0 {
        return Ok(pid.clone());
    }
    let mut bins = pid.bins().to_vec();
    match bins.first_mut() {
        Some(first) if first.is_zero_mass() => first.count += zero_count,
        _ => bins.insert(0, Bin::closed(0.0, 0.0, zero_count)),
    }
    BinnedPid::new(bins, pid.units())
}

/// Index from the threshold and the mean income above it.
pub fn pareto_k_from_mean(x_m: f64, x_av: f64, convention: Convention) -> Result<f64> {
    if !(x_m > 0.0 && x_av > x_m) {
        return Err(Error::param(format!(
            "need x_av > x_m > 0, got x_m {x_m}, x_av {x_av}"
        )));
    }
    Ok(match convention {
        Convention::Paper => x_m / (x_av - x_m),
        Convention::Standard => x_av / (x_av - x_m),
    })
}

/// Least-squares slope of `ln density` against `ln income`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::param(format!(
            "regression needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, d)| !(x > 0.0 && d > 0.0)) {
        return Err(Error::param("incomes and densities must be positive"));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, d)| (a + x.ln(), b + d.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, d) in points {
        let (u, v) = (x.ln() - mx, d.ln() - my);
        sxy += u * v;
        sxx += u * u;
    }
    if sxx == 0.0 {
        return Err(Error::param("all incomes are equal"));
    }
    Ok(sxy / sxx)
}

pub fn pareto_k_from_slope(slope: f64, convention: Convention) -> f64 {
    match convention {
        Convention::Paper => -slope - 2.0,
        Convention::Standard => -slope - 1.0,
    }
}

/// Index from a log-log regression over `(income, density)` points above the threshold.
pub fn pareto_k_from_regression(points: &[(f64, f64)], convention: Convention) -> Result<f64> {
    Ok(pareto_k_from_slope(log_log_slope(points)?, convention))
}

/// Gini of a pure Pareto law with standard index `k`.
pub fn pareto_gini_oracle(k: f64) -> Result<f64> {
    if k <= 1.0 {
        return Err(Error::param(format!("Pareto Gini needs k > 1, got {k}")));
    }
    Ok(1.0 / (2.0 * k - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Units;
    use proptest::prelude::*;

    fn pid(bins: Vec<Bin>) -> BinnedPid {
        BinnedPid::new(bins, Units::Dollars).unwrap()
    }

    fn pairwise_gini(weights: &[f64], incomes: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        let mean: f64 = weights.iter().zip(incomes).map(|(w, x)| w * x).sum::<f64>() / total;
        let mut s = 0.0;
        for (wi, xi) in weights.iter().zip(incomes) {
            for (wj, xj) in weights.iter().zip(incomes) {
                s += wi * wj * (xi - xj).abs();
            }
        }
        s / (2.0 * total * total * mean)
    }

    #[test]
    fn single_bin_is_equality() {
        let l = lorenz_from_bins(
            &pid(vec![Bin::closed(10.0, 20.0, 7.0)]),
            BinIncomeMode::Center,
            OpenBinMode::Drop,
        )
        .unwrap();
        assert_eq!(l.points().len(), 2);
        assert_eq!(gini_trapezoid(&l), 0.0);
    }

    #[test]
    fn two_bin_cumulative_share() {
        let l = lorenz_from_bins(
            &pid(vec![
                Bin::closed(0.0, 20.0, 5.0),
                Bin::closed(20.0, 40.0, 5.0),
            ]),
            BinIncomeMode::Center,
            OpenBinMode::Drop,
        )
        .unwrap();
        assert_eq!(l.points()[1], LorenzPoint { x: 0.5, y: 0.25 });
    }

    #[test]
    fn open_bin_means_by_convention() {
        let paper = ParetoFit::new(1.31, 100_000.0, Convention::Paper).unwrap();
        let standard = ParetoFit::new(1.31, 100_000.0, Convention::Standard).unwrap();
        assert!((standard.mean().unwrap() - 422_580.6).abs() < 1.0);
        let m = paper.mean().unwrap();
        assert!((m - 176_335.9).abs() < 1.0);
        assert!((m / 176_068.0 - 1.0).abs() < 0.002);
        assert!(ParetoFit::new(0.9, 1.0, Convention::Standard)
            .unwrap()
            .mean()
            .is_err());
    }

    #[test]
    fn open_bin_pareto_mass_and_points() {
        let p = pid(vec![Bin::closed(0.0, 10.0, 10.0), Bin::open(10.0, 10.0)]);
        let mode = OpenBinMode::Pareto {
            k: 2.0,
            convention: Convention::Standard,
        };
        let l = lorenz_from_bins(&p, BinIncomeMode::Center, mode).unwrap();
        assert_eq!(l.points().len(), 2 + DEFAULT_OPEN_BIN_POINTS);
        // closed mass 50, open mass 10 * 20 = 200
        assert!((l.points()[1].y - 0.2).abs() < 1e-12);
        let bad = OpenBinMode::Pareto {
            k: 1.0,
            convention: Convention::Standard,
        };
        assert!(lorenz_from_bins(&p, BinIncomeMode::Center, bad).is_err());
        let dropped = lorenz_from_bins(&p, BinIncomeMode::Center, OpenBinMode::Drop).unwrap();
        assert_eq!(gini_trapezoid(&dropped), 0.0);
        assert!(lorenz_from_bins(&p, BinIncomeMode::Center, OpenBinMode::ReportedMean).is_err());
    }

    #[test]
    fn non_monotone_incomes_rejected() {
        let p = pid(vec![
            Bin::closed(0.0, 10.0, 1.0).with_mean(9.0),
            Bin::closed(10.0, 20.0, 1.0).with_mean(8.0),
        ]);
        assert!(lorenz_from_bins(&p, BinIncomeMode::ReportedMean, OpenBinMode::Drop).is_err());
    }

    #[test]
    fn trapezoid_examples() {
        let l = LorenzCurve::new(vec![
            LorenzPoint { x: 0.0, y: 0.0 },
            LorenzPoint { x: 0.5, y: 0.2 },
            LorenzPoint { x: 1.0, y: 1.0 },
        ])
        .unwrap();
        assert!((gini_trapezoid(&l) - 0.3).abs() < 1e-15);
        let eps = 1e-9;
        let l = LorenzCurve::new(vec![
            LorenzPoint { x: 0.0, y: 0.0 },
            LorenzPoint {
                x: 1.0 - eps,
                y: 0.0,
            },
            LorenzPoint { x: 1.0, y: 1.0 },
        ])
        .unwrap();
        assert!(gini_trapezoid(&l) > 1.0 - 2e-9);
    }

    #[test]
    fn invalid_curves_rejected() {
        let pts = |v: &[(f64, f64)]| v.iter().map(|&(x, y)| LorenzPoint { x, y }).collect();
        assert!(LorenzCurve::new(pts(&[(0.0, 0.0), (0.5, 0.6), (1.0, 1.0)])).is_err());
        assert!(LorenzCurve::new(pts(&[(0.0, 0.0), (0.5, 0.4), (0.7, 0.45), (1.0, 1.0)])).is_err());
        assert!(LorenzCurve::new(pts(&[(0.0, 0.0), (0.5, 0.2)])).is_err());
    }

    #[test]
    fn exact_examples() {
        assert_eq!(gini_exact(&[1.0; 3], &[5.0; 3]).unwrap().value, 0.0);
        assert!((gini_exact(&[1.0, 1.0], &[0.0, 3.0]).unwrap().value - 0.5).abs() < 1e-15);
        let g = gini_exact(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap().value;
        assert!((g - 0.25).abs() < 1e-15);
        let z = gini_exact(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!(z.all_zero && z.value == 0.0);
        assert!(gini_exact(&[0.0], &[1.0]).is_err());
        assert!(gini_exact(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn zero_mass_handling() {
        let eq = pid(vec![Bin::closed(10.0, 20.0, 4.0)]);
        assert_eq!(with_zero_income_mass(&eq, 0.0).unwrap(), eq);
        let with = with_zero_income_mass(&eq, 4.0).unwrap();
        let g = gini_trapezoid(
            &lorenz_from_bins(&with, BinIncomeMode::Center, OpenBinMode::Drop).unwrap(),
        );
        assert!((g - 0.5).abs() < 1e-15);
        let irs = crate::datasets::irs_pid(2004).unwrap();
        let mut last = 0.0;
        for z in [0.0, 1e6, 5e6, 2e7, 1e8] {
            let p = with_zero_income_mass(&irs, z).unwrap();
            let g = gini_trapezoid(
                &lorenz_from_bins(&p, BinIncomeMode::Center, OpenBinMode::Drop).unwrap(),
            );
            assert!(g >= last);
            last = g;
        }
    }

    #[test]
    fn mean_estimators() {
        let k = pareto_k_from_mean(100_000.0, 176_068.0, Convention::Paper).unwrap();
        assert_eq!((k * 100.0).round() / 100.0, 1.31);
        let k = pareto_k_from_mean(250_000.0, 470_616.0, Convention::Paper).unwrap();
        assert_eq!((k * 100.0).round() / 100.0, 1.13);
        assert_eq!(
            pareto_k_from_mean(1.0, 2.0, Convention::Standard).unwrap(),
            2.0
        );
        assert_eq!(
            pareto_k_from_mean(1.0, 2.0, Convention::Paper).unwrap(),
            1.0
        );
        assert!(pareto_k_from_mean(2.0, 2.0, Convention::Paper).is_err());
    }

    #[test]
    fn regression_estimators() {
        assert!((pareto_k_from_slope(-3.36, Convention::Paper) - 1.36).abs() < 1e-12);
        let fit = ParetoFit::new(1.35, 1.0, Convention::Standard).unwrap();
        let pts: Vec<_> = (0..20)
            .map(|i| {
                let x = 1.0 + 0.5 * f64::from(i);
                (x, fit.density(x))
            })
            .collect();
        let slope = log_log_slope(&pts).unwrap();
        assert!((slope + 2.35).abs() < 1e-12);
        let k = pareto_k_from_regression(&pts, Convention::Standard).unwrap();
        assert!((k - 1.35).abs() < 1e-12);
        assert!(pareto_k_from_regression(&pts[..2], Convention::Paper).is_err());
        assert!(log_log_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn pareto_gini_values() {
        assert!((pareto_gini_oracle(1.35).unwrap() - 0.5882).abs() < 1e-4);
        assert!(pareto_gini_oracle(1e9).unwrap() < 1e-8);
        assert!(pareto_gini_oracle(1.0 + 1e-9).unwrap() > 0.999_999);
        assert!(pareto_gini_oracle(1.0).is_err());
    }

    /// Pure Pareto population on `n` log-spaced bins over `[1, 1000)` plus an open top bin.
    pub(crate) fn pareto_pid(a: f64, n: usize) -> BinnedPid {
        let edge = |i: usize| 1000f64.powf(i as f64 / n as f64);
        let survival = |x: f64| x.powf(-a);
        let mut bins: Vec<Bin> = (0..n)
            .map(|i| {
                Bin::closed(
                    edge(i),
                    edge(i + 1),
                    survival(edge(i)) - survival(edge(i + 1)),
                )
            })
            .collect();
        bins.push(Bin::open(edge(n), survival(edge(n))));
        BinnedPid::new(bins, Units::Dimensionless).unwrap()
    }

    #[test]
    fn binned_pareto_gini_matches_oracle() {
        for a in [1.35, 2.0, 2.35, 3.0] {
            let mode = OpenBinMode::Pareto {
                k: a,
                convention: Convention::Standard,
            };
            let l = lorenz_from_bins(&pareto_pid(a, 100), BinIncomeMode::Center, mode).unwrap();
            let g = gini_trapezoid(&l);
            let oracle = pareto_gini_oracle(a).unwrap();
            assert!((g - oracle).abs() < 0.01, "a {a}: {g} vs {oracle}");
        }
    }

    #[test]
    fn pareto_quantiles() {
        let q: Vec<f64> = [0.125, 0.375, 0.625, 0.875]
            .iter()
            .map(|&p| pareto_quantile(1.0, 2.0, p))
            .collect();
        let want = [1.0690, 1.2649, 1.6330, 2.8284];
        for (a, b) in q.iter().zip(want) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    fn weighted_list() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..50).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.01f64..10.0, n),
                proptest::collection::vec(0.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn exact_matches_pairwise((w, x) in weighted_list()) {
            let g = gini_exact(&w, &x).unwrap();
            if !g.all_zero {
                prop_assert!((g.value - pairwise_gini(&w, &x)).abs() <= 1e-12);
                let l = lorenz_exact(&w, &x).unwrap();
                prop_assert!((gini_trapezoid(&l) - g.value).abs() <= 1e-12);
            }
        }

        #[test]
        fn scale_and_population_invariance((w, x) in weighted_list(), c in 0.01f64..100.0) {
            let g = gini_exact(&w, &x).unwrap().value;
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            let ws: Vec<f64> = w.iter().map(|v| v * c).collect();
            prop_assert!((gini_exact(&w, &xs).unwrap().value - g).abs() <= 1e-12);
            prop_assert!((gini_exact(&ws, &x).unwrap().value - g).abs() <= 1e-12);
        }

        #[test]
        fn binned_scale_invariance(c in 0.01f64..100.0) {
            let p = crate::datasets::irs_pid(1990).unwrap();
            let g = |p: &BinnedPid| gini_trapezoid(
                &lorenz_from_bins(p, BinIncomeMode::Center, OpenBinMode::Drop).unwrap(),
            );
            let scaled = crate::empirical::RescaleIncome::rescale_income(&p, 1.0 / c).unwrap();
            prop_assert!((g(&scaled) - g(&p)).abs() <= 1e-12);
        }
    }
}
