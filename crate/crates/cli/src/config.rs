//! Effective run configuration, loaded from TOML.

use std::fs;
use std::path::Path;

use ecgparam::diagnostics::DEFAULT_LQT_THRESHOLD_MS;
use ecgparam::{AvbiThresholds, DelineatorConfig, PreprocessConfig, QtcFormula};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub preprocess: PreprocessConfig,
    pub delineator: DelineatorConfig,
    pub intervals: IntervalsConfig,
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalsConfig {
    pub qtc_formula: QtcFormula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub lqt_threshold_ms: f64,
    pub avbi: AvbiThresholds,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            lqt_threshold_ms: DEFAULT_LQT_THRESHOLD_MS,
            avbi: AvbiThresholds::default(),
        }
    }
}

impl Config {
    /// Defaults when `path` is `None`; unknown keys are rejected.
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let config = match path {
            None => Config::default(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.preprocess.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.delineator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let d = &self.diagnostics;
        let thresholds = [
            Some(d.lqt_threshold_ms),
            Some(d.avbi.wearable_ms),
            Some(d.avbi.machine_ms),
            d.avbi.synthetic_ms,
        ];
        if thresholds.into_iter().flatten().any(|t| !(t.is_finite() && t > 0.0)) {
            return Err(CliError::Config("diagnostic thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let c: Config = toml::from_str("[delineator]\nmodulus_threshold_fraction = 0.2\n").unwrap();
        assert_eq!(c.delineator.modulus_threshold_fraction, 0.2);
        assert_eq!(c.preprocess, PreprocessConfig::default());
        assert_eq!(c.diagnostics.lqt_threshold_ms, 450.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("[preprocess]\nbogus = 1\n").is_err());
    }

    #[test]
    fn default_round_trips() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), Config::default());
    }
}
