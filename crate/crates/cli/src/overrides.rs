//! Command-line scenario overrides: dotted keys mirroring the scenario
//! structure, applied after file parsing and before validation. Unknown
//! keys are rejected, never ignored.

use crate::CliError;
use coex_core::scenario::ScenarioConfig;

/// Apply a list of `key=value` overrides in order.
pub fn apply_overrides(cfg: &mut ScenarioConfig, overrides: &[String]) -> Result<(), CliError> {
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{entry}' is not KEY=VALUE")))?;
        apply_override(cfg, key.trim(), value.trim())?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("override {key}: '{value}' is not a valid integer")))
}

/// Set one field by its dotted name (e.g. `interference.on_F=0`,
/// `classes.1.airtime_X=2158`).
pub fn apply_override(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), CliError> {
    match key {
        "dcf.cw_min" => cfg.dcf.cw_min = parse(key, value)?,
        "dcf.cw_max" => cfg.dcf.cw_max = parse(key, value)?,
        "dcf.retry_limit_R" => cfg.dcf.retry_limit = parse(key, value)?,
        "dcf.slot_sigma" => cfg.dcf.slot_us = parse(key, value)?,
        "dcf.ack_timeout" => cfg.dcf.ack_timeout_us = parse(key, value)?,
        "dcf.difs" => cfg.dcf.difs_us = parse(key, value)?,
        "interference.on_F" => cfg.interference.on_us = parse(key, value)?,
        "interference.off_T" => cfg.interference.off_us = parse(key, value)?,
        "interference.phase" => cfg.interference.phase_us = parse(key, value)?,
        "txop.limit" => cfg.txop.limit_us = parse(key, value)?,
        _ => {
            if let Some(rest) = key.strip_prefix("classes.") {
                let (index, field) = rest.split_once('.').ok_or_else(|| {
                    CliError::Config(format!("override {key}: expected classes.<index>.<field>"))
                })?;
                let index: usize = index.parse().map_err(|_| {
                    CliError::Config(format!("override {key}: '{index}' is not a class index"))
                })?;
                let count = cfg.classes.len();
                let class = cfg.classes.get_mut(index).ok_or_else(|| {
                    CliError::Config(format!(
                        "override {key}: class index {index} out of range (scenario has {count})"
                    ))
                })?;
                match field {
                    "count_n" => class.count = parse(key, value)?,
                    "airtime_X" => class.airtime_us = parse(key, value)?,
                    "payload_P" => class.payload_bits = parse(key, value)?,
                    _ => {
                        return Err(CliError::Config(format!(
                            "unknown override key '{key}' (unknown class field '{field}')"
                        )))
                    }
                }
            } else {
                return Err(CliError::Config(format!("unknown override key '{key}'")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use coex_core::scenario::default_scenario;

    #[test]
    fn known_keys_apply() {
        let mut cfg = default_scenario();
        apply_overrides(
            &mut cfg,
            &[
                "interference.on_F=0".into(),
                "classes.0.count_n=5".into(),
                "txop.limit=2158".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.interference.on_us, 0);
        assert_eq!(cfg.classes[0].count, 5);
        assert_eq!(cfg.txop.limit_us, 2158);
    }

    #[test]
    fn unknown_keys_are_rejected_not_ignored() {
        let mut cfg = default_scenario();
        let err = apply_overrides(&mut cfg, &["interference.on=0".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(cfg, default_scenario());
    }

    #[test]
    fn out_of_range_class_index_is_rejected() {
        let mut cfg = default_scenario();
        assert!(apply_override(&mut cfg, "classes.7.count_n", "1").is_err());
    }

    #[test]
    fn malformed_pairs_are_rejected() {
        let mut cfg = default_scenario();
        assert!(apply_overrides(&mut cfg, &["dcf.cw_min".into()]).is_err());
        assert!(apply_overrides(&mut cfg, &["dcf.cw_min=abc".into()]).is_err());
    }
}
