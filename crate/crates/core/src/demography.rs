//! Single-year-of-age population counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use crate::error::{Error, Result};

pub const PYRAMID_CSV_HEADER: [&str; 3] = ["year", "age", "population"];

/// Default modelled ages.
pub const DEFAULT_AGES: RangeInclusive<u32> = 16..=75;

/// Population by single year of age for one calendar year.
#[derive(Clone, Debug, PartialEq)]
pub struct AgePyramid {
    year: i32,
    first_age: u32,
    counts: Vec<f64>,
}

/// Parametric pyramid shapes used for tests and projections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PyramidShape {
    /// Same count at every age.
    Uniform { level: f64 },
    /// `base + slope * (age - first_age)`.
    Linear { base: f64, slope: f64 },
    /// `level` up to `knee_age`, then linear down to `end_level` at the last age.
    Plateau {
        level: f64,
        knee_age: u32,
        end_level: f64,
    },
}

impl PyramidShape {
    /// Smoothed US working-age structure around 2000: about 4 million per
    /// year of age through the early fifties, falling to 1.75 million at 75.
    pub const US_LIKE: PyramidShape = PyramidShape::Plateau {
        level: 4.0e6,
        knee_age: 52,
        end_level: 1.75e6,
    };
}

impl AgePyramid {
    pub fn new(year: i32, first_age: u32, counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty);
        }
        for (offset, &c) in counts.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::param(format!(
                    "population {c} at age {} in {year}",
                    first_age + offset as u32
                )));
            }
        }
        Ok(AgePyramid {
            year,
            first_age,
            counts,
        })
    }

    pub fn synthetic(year: i32, shape: PyramidShape, ages: RangeInclusive<u32>) -> Result<Self> {
        let (first, last) = (*ages.start(), *ages.end());
        let counts = ages
            .map(|age| match shape {
                PyramidShape::Uniform { level } => level,
                PyramidShape::Linear { base, slope } => base + slope * f64::from(age - first),
                PyramidShape::Plateau {
                    level,
                    knee_age,
                    end_level,
                } => {
                    if age <= knee_age || last <= knee_age {
                        level
                    } else {
                        let f = f64::from(age - knee_age) / f64::from(last - knee_age);
                        level + (end_level - level) * f
                    }
                }
            })
            .collect();
        AgePyramid::new(year, first, counts)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn first_age(&self) -> u32 {
        self.first_age
    }

    pub fn last_age(&self) -> u32 {
        self.first_age + self.counts.len() as u32 - 1
    }

    pub fn ages(&self) -> RangeInclusive<u32> {
        self.first_age..=self.last_age()
    }

    pub fn population(&self, age: u32) -> Option<f64> {
        age.checked_sub(self.first_age)
            .and_then(|i| self.counts.get(i as usize).copied())
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Total over the ages in `ages` that this pyramid covers.
    pub fn total_over(&self, ages: RangeInclusive<u32>) -> f64 {
        ages.filter_map(|a| self.population(a)).sum()
    }

    pub fn with_year(&self, year: i32) -> AgePyramid {
        AgePyramid {
            year,
            ..self.clone()
        }
    }
}

/// Per-year pyramids with an optional fallback for years not listed.
#[derive(Clone, Debug, Default)]
pub struct Pyramids {
    by_year: BTreeMap<i32, AgePyramid>,
    fallback: Fallback,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fallback {
    /// Missing years are an error.
    #[default]
    None,
    /// A missing year uses the latest earlier pyramid.
    CarryForward,
    /// Every year uses the single stored pyramid.
    Stationary,
}

impl Pyramids {
    pub fn new(by_year: BTreeMap<i32, AgePyramid>) -> Self {
        Pyramids {
            by_year,
            fallback: Fallback::None,
        }
    }

    pub fn stationary(pyramid: AgePyramid) -> Self {
        let mut by_year = BTreeMap::new();
        by_year.insert(pyramid.year(), pyramid);
        Pyramids {
            by_year,
            fallback: Fallback::Stationary,
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn fallback(&self) -> Fallback {
        self.fallback
    }

    pub fn len(&self) -> usize {
        self.by_year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_year.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.by_year.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AgePyramid> {
        self.by_year.values()
    }

    pub fn insert(&mut self, pyramid: AgePyramid) {
        self.by_year.insert(pyramid.year(), pyramid);
    }

    pub fn get(&self, year: i32) -> Result<&AgePyramid> {
        if let Some(p) = self.by_year.get(&year) {
            return Ok(p);
        }
        let found = match self.fallback {
            Fallback::None => None,
            Fallback::CarryForward => self.by_year.range(..year).next_back().map(|(_, p)| p),
            Fallback::Stationary => self.by_year.values().next(),
        };
        found.ok_or_else(|| Error::range(format!("pyramid for {year}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.iter().ne(PYRAMID_CSV_HEADER.iter().copied()) {
            return Err(Error::Malformed {
                line: 1,
                message: format!("expected header `{}`", PYRAMID_CSV_HEADER.join(",")),
            });
        }
        // (first age, counts) per year
        let mut rows: BTreeMap<i32, (u32, Vec<f64>)> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |message: String| Error::Malformed { line, message };
            if record.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", record.len())));
            }
            let year: i32 = record[0]
                .parse()
                .map_err(|_| bad(format!("bad year `{}`", &record[0])))?;
            let age: u32 = record[1]
                .parse()
                .map_err(|_| bad(format!("bad age `{}`", &record[1])))?;
            let population: f64 = record[2]
                .parse()
                .map_err(|_| bad(format!("bad population `{}`", &record[2])))?;
            if !(population.is_finite() && population >= 0.0) {
                return Err(bad(format!("negative population {population}")));
            }
            match rows.get_mut(&year) {
                None => {
                    rows.insert(year, (age, vec![population]));
                }
                Some((first, counts)) => {
                    let expected = *first + counts.len() as u32;
                    if age != expected {
                        return if age > expected {
                            Err(Error::Gap(i64::from(expected)))
                        } else {
                            Err(bad(format!("age {age} out of order for {year}")))
                        };
                    }
                    counts.push(population);
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        let by_year = rows
            .into_iter()
            .map(|(year, (first, counts))| Ok((year, AgePyramid::new(year, first, counts)?)))
            .collect::<Result<_>>()?;
        Ok(Pyramids::new(by_year))
    }

    pub fn to_csv(&self) -> String {
        let mut out = PYRAMID_CSV_HEADER.join(",");
        out.push('\n');
        for p in self.by_year.values() {
            for (age, c) in p.ages().zip(p.counts()) {
                let _ = writeln!(out, "{},{age},{c}", p.year());
            }
        }
        out
    }
}
