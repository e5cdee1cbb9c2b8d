//! Annual GDP growth-factor series.
//!
//! Each row holds six year-over-year ratios for one calendar year: row `y`
//! is the value in year `y` divided by the value in year `y - 1`. Growth
//! from year `a` to year `b` is therefore the product of rows `a+1..=b`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GDP_CSV_HEADER: [&str; 7] = [
    "year",
    "nom_total",
    "real_total",
    "nom_pc",
    "real_pc",
    "nom_pc16",
    "real_pc16",
];

/// Which of the six growth columns to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    NominalTotal,
    RealTotal,
    NominalPerCapita,
    RealPerCapita,
    NominalPerCapita16,
    RealPerCapita16,
}

impl FactorKind {
    pub const ALL: [FactorKind; 6] = [
        FactorKind::NominalTotal,
        FactorKind::RealTotal,
        FactorKind::NominalPerCapita,
        FactorKind::RealPerCapita,
        FactorKind::NominalPerCapita16,
        FactorKind::RealPerCapita16,
    ];

    pub fn column(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        GDP_CSV_HEADER[self.column() + 1]
    }

    pub fn is_real(self) -> bool {
        matches!(
            self,
            FactorKind::RealTotal | FactorKind::RealPerCapita | FactorKind::RealPerCapita16
        )
    }

    pub fn scope(self) -> DeflatorScope {
        match self {
            FactorKind::NominalTotal | FactorKind::RealTotal => DeflatorScope::Total,
            FactorKind::NominalPerCapita | FactorKind::RealPerCapita => DeflatorScope::PerCapita,
            FactorKind::NominalPerCapita16 | FactorKind::RealPerCapita16 => {
                DeflatorScope::PerCapita16
            }
        }
    }

    /// The nominal column of the same scope.
    pub fn nominal(self) -> FactorKind {
        self.scope().nominal()
    }

    /// The real column of the same scope.
    pub fn real(self) -> FactorKind {
        self.scope().real()
    }
}

impl FromStr for FactorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FactorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown growth column `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeflatorScope {
    Total,
    PerCapita,
    PerCapita16,
}

impl DeflatorScope {
    pub fn nominal(self) -> FactorKind {
        match self {
            DeflatorScope::Total => FactorKind::NominalTotal,
            DeflatorScope::PerCapita => FactorKind::NominalPerCapita,
            DeflatorScope::PerCapita16 => FactorKind::NominalPerCapita16,
        }
    }

    pub fn real(self) -> FactorKind {
        match self {
            DeflatorScope::Total => FactorKind::RealTotal,
            DeflatorScope::PerCapita => FactorKind::RealPerCapita,
            DeflatorScope::PerCapita16 => FactorKind::RealPerCapita16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub year: i32,
    pub factors: [f64; 6],
}

impl GrowthRow {
    pub fn factor(&self, kind: FactorKind) -> f64 {
        self.factors[kind.column()]
    }
}

/// Contiguous, validated series of annual growth factors.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthSeries {
    rows: Vec<GrowthRow>,
}

impl GrowthSeries {
    pub fn new(rows: Vec<GrowthRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        for pair in rows.windows(2) {
            if pair[1].year <= pair[0].year {
                return Err(Error::param(format!(
                    "years not increasing at {}",
                    pair[1].year
                )));
            }
            if pair[1].year != pair[0].year + 1 {
                return Err(Error::Gap(i64::from(pair[0].year) + 1));
            }
        }
        for row in &rows {
            for kind in FactorKind::ALL {
                let value = row.factor(kind);
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::NonPositiveFactor {
                        year: row.year,
                        column: kind.name(),
                        value,
                    });
                }
            }
        }
        Ok(GrowthSeries { rows })
    }

    /// Series with the same real and nominal factor in every row of `first..=last`.
    pub fn constant(first: i32, last: i32, real: f64, nominal: f64) -> Result<Self> {
        if last < first {
            return Err(Error::range(format!("years {first}..{last}")));
        }
        let rows = (first..=last)
            .map(|year| GrowthRow {
                year,
                factors: [nominal, real, nominal, real, nominal, real],
            })
            .collect();
        GrowthSeries::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.iter().ne(GDP_CSV_HEADER.iter().copied()) {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{}`", GDP_CSV_HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |message: String| Error::Malformed { line, message };
            if record.len() != GDP_CSV_HEADER.len() {
                return Err(bad(format!("expected 7 fields, found {}", record.len())));
            }
            let year: i32 = record[0]
                .parse()
                .map_err(|_| bad(format!("bad year `{}`", &record[0])))?;
            let mut factors = [0.0; 6];
            for (slot, field) in factors.iter_mut().zip(record.iter().skip(1)) {
                *slot = field
                    .parse()
                    .map_err(|_| bad(format!("bad number `{field}`")))?;
            }
            rows.push(GrowthRow { year, factors });
        }
        GrowthSeries::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = GDP_CSV_HEADER.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.year);
            for f in row.factors {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> &[GrowthRow] {
        &self.rows
    }

    pub fn first_year(&self) -> i32 {
        self.rows[0].year
    }

    pub fn last_year(&self) -> i32 {
        self.rows[self.rows.len() - 1].year
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first_year()..=self.last_year()).contains(&year)
    }

    pub fn row(&self, year: i32) -> Result<&GrowthRow> {
        if !self.contains(year) {
            return Err(Error::range(format!(
                "year {year} (series covers {}..{})",
                self.first_year(),
                self.last_year()
            )));
        }
        Ok(&self.rows[(year - self.first_year()) as usize])
    }

    /// Product of the selected factor over rows `first_row_year..=last_row_year`.
    pub fn cumulative_factor(
        &self,
        kind: FactorKind,
        first_row_year: i32,
        last_row_year: i32,
    ) -> Result<f64> {
        if first_row_year > last_row_year {
            return Err(Error::range(format!(
                "row range {first_row_year}..{last_row_year}"
            )));
        }
        self.row(first_row_year)?;
        self.row(last_row_year)?;
        let start = (first_row_year - self.first_year()) as usize;
        let end = (last_row_year - self.first_year()) as usize;
        let mut acc = CompensatedProduct::one();
        for row in &self.rows[start..=end] {
            acc.mul(row.factor(kind));
        }
        Ok(acc.value())
    }

    /// Growth from calendar year `from` to calendar year `to` (rows `from+1..=to`).
    /// Equal years give 1; `to < from` gives the reciprocal of the forward growth.
    pub fn growth_between(&self, kind: FactorKind, from: i32, to: i32) -> Result<f64> {
        match to.cmp(&from) {
            std::cmp::Ordering::Equal => {
                if self.contains(from) || from + 1 == self.first_year() {
                    Ok(1.0)
                } else {
                    Err(Error::range(format!("year {from}")))
                }
            }
            std::cmp::Ordering::Greater => self.cumulative_factor(kind, from + 1, to),
            std::cmp::Ordering::Less => Ok(1.0 / self.cumulative_factor(kind, to + 1, from)?),
        }
    }

    /// Implied GDP deflator change: nominal over real cumulative factor.
    pub fn deflator_factor(
        &self,
        scope: DeflatorScope,
        first_row_year: i32,
        last_row_year: i32,
    ) -> Result<f64> {
        let nominal = self.cumulative_factor(scope.nominal(), first_row_year, last_row_year)?;
        let real = self.cumulative_factor(scope.real(), first_row_year, last_row_year)?;
        Ok(nominal / real)
    }

    /// Appends constant-factor rows through `until_year`.
    ///
    /// Real columns grow by `1 + real_rate`; nominal columns by
    /// `(1 + real_rate) * (1 + deflator_rate)`.
    pub fn extended(&self, until_year: i32, real_rate: f64, deflator_rate: f64) -> Result<Self> {
        if real_rate <= -1.0 || deflator_rate <= -1.0 {
            return Err(Error::param(format!(
                "growth rates must exceed -1 (real {real_rate}, deflator {deflator_rate})"
            )));
        }
        let real = 1.0 + real_rate;
        let nominal = real * (1.0 + deflator_rate);
        let mut rows = self.rows.clone();
        for year in self.last_year() + 1..=until_year {
            rows.push(GrowthRow {
                year,
                factors: [nominal, real, nominal, real, nominal, real],
            });
        }
        GrowthSeries::new(rows)
    }
}

/// Running product carried as an unevaluated sum `hi + lo`, using fused
/// multiply-add to recover the rounding error of every step.
#[derive(Clone, Copy, Debug)]
struct CompensatedProduct {
    hi: f64,
    lo: f64,
}

impl CompensatedProduct {
    fn one() -> Self {
        CompensatedProduct { hi: 1.0, lo: 0.0 }
    }

    fn mul(&mut self, factor: f64) {
        let p = self.hi * factor;
        let err = self.hi.mul_add(factor, -p) + self.lo * factor;
        let hi = p + err;
        self.lo = err - (hi - p);
        self.hi = hi;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}
