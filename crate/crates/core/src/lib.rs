//! Personal income distribution model driven by GDP growth and age structure.

pub mod calibrate;
pub mod cli;
pub mod config;
pub mod datasets;
pub mod demography;
pub mod economy;
pub mod empirical;
pub mod error;
pub mod inequality;
pub mod synthesis;
pub mod trajectory;

pub use error::{Error, Result};
