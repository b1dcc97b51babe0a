//! Baseline removal, band-pass filtering and the signal-quality gate.

mod filter;
mod median;
mod quality;

pub use filter::{Biquad, Sos};
pub use median::median_filter;
pub(crate) use median::reflect;
pub use quality::{gate_by_quality, passes_gate, signal_quality, GateOutcome, QualityComponents, QualityScore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{EcgRecord, RecordError};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("median window {window_ms} ms does not fit a {duration_ms} ms record")]
    WindowTooLong { window_ms: f64, duration_ms: f64 },
    #[error("invalid band-pass cutoffs {low_hz}-{high_hz} Hz at {fs} Hz")]
    InvalidCutoffs { low_hz: f64, high_hz: f64, fs: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub baseline_window1_ms: f64,
    pub baseline_window2_ms: f64,
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    /// Even order of the high-pass half of the band-pass.
    pub highpass_order: usize,
    /// Even order of the low-pass half of the band-pass.
    pub lowpass_order: usize,
    pub quality_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            baseline_window1_ms: 200.0,
            baseline_window2_ms: 600.0,
            bandpass_low_hz: 0.5,
            bandpass_high_hz: 40.0,
            highpass_order: 4,
            lowpass_order: 6,
            quality_threshold: 0.5,
        }
    }
}

impl PreprocessConfig {
    /// Checks the rate-independent invariants.
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let bad = |m: &str| Err(PreprocessError::InvalidConfig(m.to_string()));
        if !(self.baseline_window1_ms > 0.0 && self.baseline_window1_ms < self.baseline_window2_ms)
        {
            return bad("baseline windows must satisfy 0 < window1 < window2");
        }
        if !(0.0..=1.0).contains(&self.quality_threshold) {
            return bad("quality_threshold must lie in [0, 1]");
        }
        for order in [self.highpass_order, self.lowpass_order] {
            if order < 2 || order % 2 != 0 || order > 16 {
                return bad("filter orders must be even and within 2..=16");
            }
        }
        Ok(())
    }

    fn check_cutoffs(&self, fs: f64) -> Result<(), PreprocessError> {
        let (low_hz, high_hz) = (self.bandpass_low_hz, self.bandpass_high_hz);
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
            return Err(PreprocessError::InvalidCutoffs { low_hz, high_hz, fs });
        }
        Ok(())
    }

    /// The band-pass cascade for sampling rate `fs`.
    pub fn design_bandpass(&self, fs: f64) -> Result<Sos, PreprocessError> {
        self.validate()?;
        self.check_cutoffs(fs)?;
        Ok(Sos::butterworth_bandpass(
            self.bandpass_low_hz,
            self.bandpass_high_hz,
            fs,
            self.highpass_order,
            self.lowpass_order,
        ))
    }
}

/// Converts a window length in ms to an odd sample count of at least 1.
fn odd_window(ms: f64, fs: f64) -> usize {
    let w = (ms * fs / 1000.0).round().max(1.0) as usize;
    w | 1
}

/// Two-stage median baseline estimate (`window1` then `window2`).
pub fn estimate_baseline(
    record: &EcgRecord,
    cfg: &PreprocessConfig,
) -> Result<Vec<f64>, PreprocessError> {
    cfg.validate()?;
    let duration_ms = record.duration_s() * 1000.0;
    if cfg.baseline_window2_ms >= duration_ms {
        return Err(PreprocessError::WindowTooLong {
            window_ms: cfg.baseline_window2_ms,
            duration_ms,
        });
    }
    let fs = record.sampling_rate_hz;
    let stage1 = median_filter(&record.samples, odd_window(cfg.baseline_window1_ms, fs));
    Ok(median_filter(&stage1, odd_window(cfg.baseline_window2_ms, fs)))
}

/// Subtracts the median-filter baseline estimate.
pub fn remove_baseline(
    record: &EcgRecord,
    cfg: &PreprocessConfig,
) -> Result<EcgRecord, PreprocessError> {
    let baseline = estimate_baseline(record, cfg)?;
    let samples = record
        .samples
        .iter()
        .zip(&baseline)
        .map(|(x, b)| x - b)
        .collect();
    Ok(record.with_samples(samples))
}

/// Zero-phase Butterworth band-pass.
pub fn bandpass(record: &EcgRecord, cfg: &PreprocessConfig) -> Result<EcgRecord, PreprocessError> {
    let sos = cfg.design_bandpass(record.sampling_rate_hz)?;
    Ok(record.with_samples(sos.filtfilt(&record.samples)))
}

/// Baseline removal followed by band-pass filtering.
pub fn preprocess(record: &EcgRecord, cfg: &PreprocessConfig) -> Result<EcgRecord, PreprocessError> {
    bandpass(&remove_baseline(record, cfg)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceTag;

    fn rec(samples: Vec<f64>, fs: f64) -> EcgRecord {
        EcgRecord::new("t", fs, samples, "I", SourceTag::Synthetic).unwrap()
    }

    #[test]
    fn constant_signal_has_no_residual() {
        let r = rec(vec![1.7; 2000], 500.0);
        let out = remove_baseline(&r, &PreprocessConfig::default()).unwrap();
        assert!(out.samples.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(out.len(), r.len());
    }

    #[test]
    fn window_longer_than_record() {
        let r = rec(vec![0.0; 250], 500.0);
        let cfg = PreprocessConfig::default();
        assert!(matches!(
            remove_baseline(&r, &cfg),
            Err(PreprocessError::WindowTooLong { .. })
        ));
    }

    #[test]
    fn cutoffs_are_checked_against_rate() {
        let r = rec(vec![0.0; 1000], 100.0);
        let cfg = PreprocessConfig {
            bandpass_high_hz: 60.0,
            ..Default::default()
        };
        assert!(matches!(
            bandpass(&r, &cfg),
            Err(PreprocessError::InvalidCutoffs { .. })
        ));
        let cfg = PreprocessConfig {
            bandpass_low_hz: 0.0,
            ..Default::default()
        };
        assert!(bandpass(&r, &cfg).is_err());
    }

    #[test]
    fn config_invariants() {
        assert!(PreprocessConfig::default().validate().is_ok());
        let swapped = PreprocessConfig {
            baseline_window1_ms: 700.0,
            ..Default::default()
        };
        assert!(swapped.validate().is_err());
        let odd = PreprocessConfig {
            lowpass_order: 3,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let thr = PreprocessConfig {
            quality_threshold: 1.5,
            ..Default::default()
        };
        assert!(thr.validate().is_err());
    }

    #[test]
    fn window_conversion_is_odd() {
        assert_eq!(odd_window(200.0, 500.0), 101);
        assert_eq!(odd_window(600.0, 500.0), 301);
        assert_eq!(odd_window(200.0, 360.0), 73);
        assert_eq!(odd_window(0.1, 100.0), 1);
    }
}
