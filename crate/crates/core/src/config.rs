//! Flat `key = value` model configuration.

use std::path::Path;

use crate::error::{Error, Result};
use crate::trajectory::ModelParams;

/// Applies one `key = value` setting. Keys are `ModelParams` field names,
/// plus `preset` which replaces every field with a named preset.
pub fn apply_setting(params: &mut ModelParams, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::param(format!("bad value `{value}` for {key}")))
    }
    match key {
        "preset" => {
            let year: i32 = num(key, value)?;
            *params = ModelParams::preset(year)
                .ok_or_else(|| Error::param(format!("no preset for {year}")))?;
        }
        "t0" => params.t0 = num(key, value)?,
        "alpha0" => params.alpha0 = num(key, value)?,
        "tcr0" => params.tcr0 = num(key, value)?,
        "grid_min" => params.grid_min = num(key, value)?,
        "grid_max" => params.grid_max = num(key, value)?,
        "mp0" => params.mp0 = num(key, value)?,
        "reference_age" => params.reference_age = num(key, value)?,
        "reference_level" => params.reference_level = num(key, value)?,
        "pareto_k" => params.pareto_k = num(key, value)?,
        "pareto_convention" => params.pareto_convention = value.parse()?,
        "tail_factor" => params.tail_factor = num(key, value)?,
        "driver" => params.driver = value.parse()?,
        "threshold_growth" => params.threshold_growth = value.parse()?,
        "work_start_age" => params.work_start_age = num(key, value)?,
        "first_age" => params.first_age = num(key, value)?,
        "last_age" => params.last_age = num(key, value)?,
        "pre_start" => params.pre_start = value.parse()?,
        _ => return Err(Error::param(format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Parses a configuration starting from the 1960 preset. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_config(text: &str) -> Result<ModelParams> {
    let mut params = ModelParams::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            line: idx + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected `key = value`, found `{line}`")))?;
        apply_setting(&mut params, key.trim(), value.trim())
            .map_err(|e| malformed(e.to_string()))?;
    }
    params.validate()?;
    Ok(params)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Writes every field in `parse_config` syntax.
pub fn to_config(params: &ModelParams) -> String {
    format!(
        "t0 = {}\nalpha0 = {}\ntcr0 = {}\ngrid_min = {}\ngrid_max = {}\nmp0 = {}\n\
         reference_age = {}\nreference_level = {}\npareto_k = {}\npareto_convention = {}\n\
         tail_factor = {}\ndriver = {}\nthreshold_growth = {}\nwork_start_age = {}\n\
         first_age = {}\nlast_age = {}\npre_start = {}\n",
        params.t0,
        params.alpha0,
        params.tcr0,
        params.grid_min,
        params.grid_max,
        params.mp0,
        params.reference_age,
        params.reference_level,
        params.pareto_k,
        params.pareto_convention,
        params.tail_factor,
        params.driver.name(),
        match params.threshold_growth {
            crate::trajectory::ThresholdGrowth::Real => "real",
            crate::trajectory::ThresholdGrowth::Nominal => "nominal",
        },
        params.work_start_age,
        params.first_age,
        params.last_age,
        match params.pre_start {
            crate::trajectory::PreStart::StationaryHistory => "stationary_history",
            crate::trajectory::PreStart::ZeroAtStart => "zero_at_start",
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_1960_preset() {
        assert_eq!(parse_config("").unwrap(), ModelParams::preset_1960());
        assert_eq!(
            parse_config("# nothing\n\n").unwrap(),
            ModelParams::preset_1960()
        );
    }

    #[test]
    fn settings_apply_in_order() {
        let p = parse_config(
            "preset = 1950\nalpha0 = 0.1\npareto_convention = standard\npareto_k = 2.35\n",
        )
        .unwrap();
        assert_eq!(p.t0, 1950);
        assert_eq!(p.alpha0, 0.1);
        assert_eq!(p.standard_pareto_index(), 2.35);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("alpha0 = 0.1\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
        assert!(parse_config("alpha0 0.1").is_err());
        assert!(parse_config("alpha0 = fast").is_err());
        assert!(parse_config("alpha0 = -1").is_err());
    }

    #[test]
    fn round_trip() {
        for p in [ModelParams::preset_1950(), ModelParams::preset_1967()] {
            assert_eq!(parse_config(&to_config(&p)).unwrap(), p);
        }
    }
}
