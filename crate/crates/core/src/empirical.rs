//! Binned income tables and population densities.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PID_CSV_HEADER: [&str; 4] = ["lower", "upper", "count", "mean_income"];
pub const DENSITY_CSV_HEADER: [&str; 3] = ["income", "density", "width"];

/// Average position of the reported bin mean relative to the bin centre,
/// as a fraction of the bin width.
pub const DEFAULT_BIN_OFFSET: f64 = -0.12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Dimensionless,
    Dollars,
    Rescaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    /// `None` marks the open-ended top bin.
    pub upper: Option<f64>,
    pub count: f64,
    pub mean_income: Option<f64>,
}

impl Bin {
    pub fn closed(lower: f64, upper: f64, count: f64) -> Self {
        Bin {
            lower,
            upper: Some(upper),
            count,
            mean_income: None,
        }
    }

    pub fn open(lower: f64, count: f64) -> Self {
        Bin {
            lower,
            upper: None,
            count,
            mean_income: None,
        }
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean_income = Some(mean);
        self
    }

    pub fn is_open(&self) -> bool {
        self.upper.is_none()
    }

    /// The `[0, 0]` bin holding people with no income.
    pub fn is_zero_mass(&self) -> bool {
        self.lower == 0.0 && self.upper == Some(0.0)
    }

    pub fn width(&self) -> Option<f64> {
        self.upper.map(|u| u - self.lower)
    }

    pub fn center(&self) -> Option<f64> {
        self.upper.map(|u| 0.5 * (self.lower + u))
    }
}

/// Where inside a bin its population is assumed to sit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinIncomeMode {
    Center,
    ReportedMean,
    /// Centre shifted by `offset` bin widths.
    OffsetCorrected(f64),
}

impl BinIncomeMode {
    pub fn offset_default() -> Self {
        BinIncomeMode::OffsetCorrected(DEFAULT_BIN_OFFSET)
    }
}

pub fn effective_bin_income(bin: &Bin, mode: BinIncomeMode) -> Result<f64> {
    let Some(upper) = bin.upper else {
        return Err(Error::bins(format!(
            "open bin from {} has no effective income",
            bin.lower
        )));
    };
    let center = 0.5 * (bin.lower + upper);
    match mode {
        BinIncomeMode::Center => Ok(center),
        BinIncomeMode::OffsetCorrected(offset) => Ok(center + offset * (upper - bin.lower)),
        BinIncomeMode::ReportedMean => bin
            .mean_income
            .ok_or_else(|| Error::bins(format!("bin from {} has no reported mean", bin.lower))),
    }
}

/// Population counts over ordered income bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedPid {
    bins: Vec<Bin>,
    units: Units,
}

impl BinnedPid {
    pub fn new(bins: Vec<Bin>, units: Units) -> Result<Self> {
        for (idx, bin) in bins.iter().enumerate() {
            if !(bin.count.is_finite() && bin.count >= 0.0) {
                return Err(Error::bins(format!(
                    "negative count {} in bin {idx}",
                    bin.count
                )));
            }
            if !bin.lower.is_finite() {
                return Err(Error::bins(format!("non-finite lower edge in bin {idx}")));
            }
            match bin.upper {
                None if idx + 1 != bins.len() => {
                    return Err(Error::bins(format!("open bin {idx} is not last")));
                }
                Some(u) if !(u > bin.lower || bin.is_zero_mass()) => {
                    return Err(Error::bins(format!(
                        "bin {idx} has upper {u} not above lower {}",
                        bin.lower
                    )));
                }
                _ => {}
            }
            if bin.is_zero_mass() && idx != 0 {
                return Err(Error::bins("zero-income bin must come first".to_string()));
            }
        }
        for (idx, pair) in bins.windows(2).enumerate() {
            let prev_upper = pair[0].upper.expect("only the last bin may be open");
            if pair[1].lower < prev_upper {
                return Err(Error::bins(format!(
                    "overlap between bins {idx} and {}",
                    idx + 1
                )));
            }
        }
        Ok(BinnedPid { bins, units })
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }

    pub fn total_count(&self) -> f64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn open_bin(&self) -> Option<&Bin> {
        self.bins.last().filter(|b| b.is_open())
    }

    pub fn load(path: impl AsRef<Path>, units: Units) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, units)
    }

    pub fn parse_csv(text: &str, units: Units) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.iter().ne(PID_CSV_HEADER.iter().copied()) {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{}`", PID_CSV_HEADER.join(",")),
            });
        }
        let mut bins = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let num = |idx: usize| -> Result<Option<f64>> {
                let field = &record[idx];
                if field.is_empty() {
                    return Ok(None);
                }
                field.parse().map(Some).map_err(|_| Error::Malformed {
                    line,
                    message: format!("bad number `{field}` in column {}", PID_CSV_HEADER[idx]),
                })
            };
            if record.len() != 4 {
                return Err(Error::Malformed {
                    line,
                    message: format!("expected 4 fields, found {}", record.len()),
                });
            }
            let missing = |what: &str| Error::Malformed {
                line,
                message: format!("missing {what}"),
            };
            bins.push(Bin {
                lower: num(0)?.ok_or_else(|| missing("lower"))?,
                upper: num(1)?,
                count: num(2)?.ok_or_else(|| missing("count"))?,
                mean_income: num(3)?,
            });
        }
        if bins.is_empty() {
            return Err(Error::Empty);
        }
        BinnedPid::new(bins, units)
    }

    pub fn to_csv(&self) -> String {
        let mut out = PID_CSV_HEADER.join(",");
        out.push('\n');
        for b in &self.bins {
            let _ = write!(out, "{},", b.lower);
            if let Some(u) = b.upper {
                let _ = write!(out, "{u}");
            }
            let _ = write!(out, ",{},", b.count);
            if let Some(m) = b.mean_income {
                let _ = write!(out, "{m}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenBinPolicy {
    Drop,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    PerPerson,
    /// Per person, with the income axis divided by a total-income scale.
    PerPersonRescaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub income: f64,
    pub density: f64,
    pub width: f64,
}

/// Persons per unit income at effective bin incomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPid {
    pub points: Vec<DensityPoint>,
    /// Persons in the zero-income bin; carried at income 0, not in `points`.
    pub zero_mass: f64,
    /// Persons in a dropped open bin.
    pub open_mass: f64,
    /// Everyone in the source table.
    pub total_persons: f64,
    pub normalization: Normalization,
}

pub fn to_density(pid: &BinnedPid, open_bin: OpenBinPolicy) -> Result<DensityPid> {
    to_density_with(pid, open_bin, BinIncomeMode::Center)
}

pub fn to_density_with(
    pid: &BinnedPid,
    open_bin: OpenBinPolicy,
    mode: BinIncomeMode,
) -> Result<DensityPid> {
    let mut points = Vec::with_capacity(pid.bins().len());
    let mut zero_mass = 0.0;
    let mut open_mass = 0.0;
    for bin in pid.bins() {
        if bin.is_zero_mass() {
            zero_mass += bin.count;
            continue;
        }
        match bin.width() {
            None => match open_bin {
                OpenBinPolicy::Drop => open_mass += bin.count,
                OpenBinPolicy::Error => {
                    return Err(Error::bins(format!("open bin from {}", bin.lower)))
                }
            },
            Some(w) if w <= 0.0 => {
                return Err(Error::bins(format!("zero-width bin at {}", bin.lower)));
            }
            Some(width) => points.push(DensityPoint {
                income: effective_bin_income(bin, mode)?,
                density: bin.count / width,
                width,
            }),
        }
    }
    if points.windows(2).any(|p| p[1].income <= p[0].income) {
        return Err(Error::bins(
            "effective incomes are not increasing".to_string(),
        ));
    }
    Ok(DensityPid {
        points,
        zero_mass,
        open_mass,
        total_persons: pid.total_count(),
        normalization: Normalization::Raw,
    })
}

impl DensityPid {
    /// Divides every density by the total number of persons.
    pub fn per_person(&self) -> Result<DensityPid> {
        if self.normalization != Normalization::Raw {
            return Err(Error::param("density is already normalized per person"));
        }
        if self.total_persons <= 0.0 {
            return Err(Error::param("no persons to normalize by"));
        }
        let n = self.total_persons;
        Ok(DensityPid {
            points: self
                .points
                .iter()
                .map(|p| DensityPoint {
                    density: p.density / n,
                    ..*p
                })
                .collect(),
            zero_mass: self.zero_mass / n,
            open_mass: self.open_mass / n,
            total_persons: 1.0,
            normalization: Normalization::PerPerson,
        })
    }

    /// Population (or share) represented by the closed-bin points.
    pub fn mass(&self) -> f64 {
        self.points.iter().map(|p| p.density * p.width).sum()
    }

    pub fn min_income(&self) -> Option<f64> {
        self.points.first().map(|p| p.income)
    }

    pub fn max_income(&self) -> Option<f64> {
        self.points.last().map(|p| p.income)
    }

    fn log_space(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.income > 0.0 && p.density > 0.0)
    }

    /// Density at `income` by piecewise-linear interpolation, in log-log
    /// coordinates when every point is positive. `None` outside the support.
    pub fn interpolate(&self, income: f64) -> Option<f64> {
        interpolate_points(&self.points, income, self.log_space())
    }

    pub fn to_csv(&self) -> String {
        let mut out = DENSITY_CSV_HEADER.join(",");
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.income, p.density, p.width);
        }
        out
    }
}

fn interpolate_points(points: &[DensityPoint], x: f64, log_space: bool) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if !(x >= first.income && x <= last.income) {
        return None;
    }
    let idx = points.partition_point(|p| p.income < x);
    if idx < points.len() && points[idx].income == x {
        return Some(points[idx].density);
    }
    let (a, b) = (&points[idx - 1], &points[idx]);
    if log_space {
        let f = (x.ln() - a.income.ln()) / (b.income.ln() - a.income.ln());
        Some((a.density.ln() + f * (b.density.ln() - a.density.ln())).exp())
    } else {
        let f = (x - a.income) / (b.income - a.income);
        Some(a.density + f * (b.density - a.density))
    }
}

/// Divides the income axis by a positive factor while conserving population.
pub trait RescaleIncome: Sized {
    fn rescale_income(&self, factor: f64) -> Result<Self>;
}

fn check_factor(factor: f64) -> Result<()> {
    if factor > 0.0 && factor.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("rescale factor {factor} must be > 0")))
    }
}

impl RescaleIncome for BinnedPid {
    fn rescale_income(&self, factor: f64) -> Result<Self> {
        check_factor(factor)?;
        let bins = self
            .bins
            .iter()
            .map(|b| Bin {
                lower: b.lower / factor,
                upper: b.upper.map(|u| u / factor),
                count: b.count,
                mean_income: b.mean_income.map(|m| m / factor),
            })
            .collect();
        let units = if factor == 1.0 {
            self.units
        } else {
            Units::Rescaled
        };
        Ok(BinnedPid { bins, units })
    }
}

impl RescaleIncome for DensityPid {
    fn rescale_income(&self, factor: f64) -> Result<Self> {
        check_factor(factor)?;
        let normalization = match self.normalization {
            Normalization::PerPerson if factor != 1.0 => Normalization::PerPersonRescaled,
            other => other,
        };
        Ok(DensityPid {
            points: self
                .points
                .iter()
                .map(|p| DensityPoint {
                    income: p.income / factor,
                    density: p.density * factor,
                    width: p.width / factor,
                })
                .collect(),
            normalization,
            ..self.clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollapseDistance {
    pub sup: f64,
    /// Root of the trapezoid integral of the squared difference over income.
    pub l2: f64,
}

/// Largest pairwise distance between density curves over their common support.
pub fn collapse_distance(curves: &[DensityPid]) -> Result<CollapseDistance> {
    if curves.len() < 2 {
        return Err(Error::param("need at least two curves"));
    }
    let mut worst = CollapseDistance { sup: 0.0, l2: 0.0 };
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            let d = pair_distance(&curves[a], &curves[b])?;
            worst.sup = worst.sup.max(d.sup);
            worst.l2 = worst.l2.max(d.l2);
        }
    }
    Ok(worst)
}

fn pair_distance(a: &DensityPid, b: &DensityPid) -> Result<CollapseDistance> {
    let disjoint = || Error::range("curves have disjoint supports".to_string());
    let lo = a
        .min_income()
        .ok_or_else(disjoint)?
        .max(b.min_income().ok_or_else(disjoint)?);
    let hi = a
        .max_income()
        .ok_or_else(disjoint)?
        .min(b.max_income().ok_or_else(disjoint)?);
    if lo > hi {
        return Err(disjoint());
    }
    let log_space = a.log_space() && b.log_space();
    let mut grid: Vec<f64> = a
        .points
        .iter()
        .chain(&b.points)
        .map(|p| p.income)
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diffs: Vec<(f64, f64)> = grid
        .iter()
        .map(|&x| {
            let da = interpolate_points(&a.points, x, log_space).expect("inside support");
            let db = interpolate_points(&b.points, x, log_space).expect("inside support");
            (x, da - db)
        })
        .collect();
    let sup = diffs.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    let integral: f64 = diffs
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[1].1 * w[1].1))
        .sum();
    Ok(CollapseDistance {
        sup,
        l2: integral.sqrt(),
    })
}
