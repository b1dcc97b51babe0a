//! R-peak detection and wavelet-based waveform delineation.

mod fiducials;
mod resample;
mod rpeaks;
mod wavelet;

pub use fiducials::{delineate, delineate_signal};
pub use resample::{resample_internal, resample_linear, RateMap};
pub use rpeaks::{detect_on_signal, detect_r_peaks};
pub use wavelet::{equivalent_filter, support, wavelet_bands, WaveletBands};

pub(crate) use rpeaks::suppress;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelineateError {
    #[error("signal of {len} samples is shorter than the wavelet support ({need})")]
    SignalTooShort { len: usize, need: usize },
    #[error("no R peaks supplied")]
    EmptyBeats,
    #[error("invalid delineator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelineatorConfig {
    pub internal_rate_hz: f64,
    /// Dyadic scale exponents; the band at `2^k` is computed for each.
    pub scales: Vec<u32>,
    pub qrs_search_ms: f64,
    pub p_search_ms: f64,
    pub t_search_ms: f64,
    pub modulus_threshold_fraction: f64,
    pub refractory_ms: f64,
}

impl Default for DelineatorConfig {
    fn default() -> Self {
        DelineatorConfig {
            internal_rate_hz: 500.0,
            scales: vec![1, 2, 3, 4],
            qrs_search_ms: 100.0,
            p_search_ms: 300.0,
            t_search_ms: 400.0,
            modulus_threshold_fraction: 0.1,
            refractory_ms: 200.0,
        }
    }
}

impl DelineatorConfig {
    pub fn validate(&self) -> Result<(), DelineateError> {
        let bad = |m: &str| Err(DelineateError::InvalidConfig(m.to_string()));
        if !(self.internal_rate_hz.is_finite() && self.internal_rate_hz >= 100.0) {
            return bad("internal_rate_hz must be at least 100");
        }
        if self.scales.is_empty() || self.scales[0] == 0 {
            return bad("scales must be nonempty exponents >= 1");
        }
        if self.scales.windows(2).any(|w| w[0] >= w[1]) {
            return bad("scales must be strictly increasing");
        }
        let widest = *self.scales.last().unwrap();
        if widest > 16 || support(widest) as f64 >= self.internal_rate_hz {
            return bad("largest wavelet support must be shorter than 1 s");
        }
        for (name, v) in [
            ("qrs_search_ms", self.qrs_search_ms),
            ("p_search_ms", self.p_search_ms),
            ("t_search_ms", self.t_search_ms),
            ("refractory_ms", self.refractory_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        let f = self.modulus_threshold_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad("modulus_threshold_fraction must lie in (0, 1)");
        }
        Ok(())
    }

    /// Band used for the QRS: the second-smallest configured scale.
    pub fn qrs_scale(&self) -> u32 {
        self.scales[1.min(self.scales.len() - 1)]
    }

    /// Band used for P and T: the largest configured scale.
    pub fn wave_scale(&self) -> u32 {
        *self.scales.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = DelineatorConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.qrs_scale(), 2);
        assert_eq!(cfg.wave_scale(), 4);
    }

    #[test]
    fn config_invariants() {
        let base = DelineatorConfig::default();
        let cases = [
            DelineatorConfig { scales: vec![], ..base.clone() },
            DelineatorConfig { scales: vec![2, 2], ..base.clone() },
            DelineatorConfig { scales: vec![1, 9], ..base.clone() },
            DelineatorConfig { modulus_threshold_fraction: 1.0, ..base.clone() },
            DelineatorConfig { t_search_ms: 0.0, ..base.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
