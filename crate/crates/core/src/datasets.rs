//! Bundled reference tables.

use crate::economy::GrowthSeries;
use crate::empirical::{BinnedPid, Units};

/// US GDP growth factors 1950-2002 in the `gdp.csv` schema.
pub const GDP_CSV: &str = include_str!("../data/gdp_1950_2002.csv");

/// IRS personal income distribution, 1990 (chained 1990 dollars).
pub const IRS_1990_CSV: &str = include_str!("../data/irs_1990.csv");

/// IRS personal income distribution, 2004 (chained 1990 dollars).
pub const IRS_2004_CSV: &str = include_str!("../data/irs_2004.csv");

/// Gross personal income reported for 1990 and 2004, 1990 dollars.
pub const IRS_GPI_1990: f64 = 3.41e12;
pub const IRS_GPI_2004: f64 = 4.70e12;

pub fn gdp_table() -> GrowthSeries {
    GrowthSeries::parse_csv(GDP_CSV).expect("bundled GDP table is valid")
}

pub fn irs_pid(year: i32) -> Option<BinnedPid> {
    let text = match year {
        1990 => IRS_1990_CSV,
        2004 => IRS_2004_CSV,
        _ => return None,
    };
    Some(BinnedPid::parse_csv(text, Units::Dollars).expect("bundled IRS table is valid"))
}
