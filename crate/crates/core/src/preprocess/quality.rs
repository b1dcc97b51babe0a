//! Composite 0-1 signal-quality score and the exclusion gate.
//!
//! The score is the equal-weight mean of three sub-indices:
//! agreement between two independent beat detectors, the in-band
//! (0.5-40 Hz) share of signal power, and the excess kurtosis of the
//! band-limited signal (ECG is spiky; Gaussian noise is not).

use serde::{Deserialize, Serialize};

use super::{PreprocessConfig, PreprocessError};
use crate::delineate::{
    detect_on_signal, resample_linear, suppress, wavelet_bands, DelineatorConfig,
};
use crate::record::EcgRecord;

/// Minimum duration for a quality assessment.
pub const MIN_QUALITY_DURATION_S: f64 = 5.0;
/// Detections from the two detectors match when this close.
const MATCH_TOLERANCE_MS: f64 = 150.0;
/// In-band power share mapped to 0 and to 1.
const SPECTRAL_FLOOR: f64 = 0.5;
const SPECTRAL_FULL: f64 = 0.9;
/// Excess kurtosis mapped to a full score.
const KURTOSIS_FULL: f64 = 5.0;
/// Scale exponent used by the wavelet detector.
const WAVELET_DETECTOR_SCALE: u32 = 3;
/// Lobe threshold as a fraction of the 99th percentile of the band modulus.
const WAVELET_DETECTOR_FRACTION: f64 = 0.35;
/// Maximum spacing between the two lobes of a beat.
const WAVELET_PAIR_MS: f64 = 60.0;
const WAVELET_REFRACTORY_MS: f64 = 300.0;
/// Filter edge transients are excluded from the power and kurtosis terms.
const EDGE_TRIM_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityComponents {
    pub beat_agreement: f64,
    pub spectral_ratio: f64,
    pub kurtosis_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub value: f64,
    pub components: QualityComponents,
}

impl QualityScore {
    pub fn from_components(components: QualityComponents) -> Self {
        let value =
            (components.beat_agreement + components.spectral_ratio + components.kurtosis_score) / 3.0;
        QualityScore { value, components }
    }

    pub fn zero() -> Self {
        QualityScore::from_components(QualityComponents {
            beat_agreement: 0.0,
            spectral_ratio: 0.0,
            kurtosis_score: 0.0,
        })
    }
}

fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d = (v - mean) * (v - mean);
        (m2 + d, m4 + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Second detector: zero crossings between strong opposite-sign lobe pairs
/// of one wavelet band, with a global (not running) threshold.
fn wavelet_detector(x: &[f64], fs: f64) -> Vec<usize> {
    let Ok(bands) = wavelet_bands(x, &[WAVELET_DETECTOR_SCALE]) else {
        return Vec::new();
    };
    let w = &bands.bands[0];
    let mut moduli: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    moduli.sort_by(f64::total_cmp);
    let q99 = moduli[((moduli.len() - 1) as f64 * 0.99) as usize];
    if q99 == 0.0 {
        return Vec::new();
    }
    let threshold = WAVELET_DETECTOR_FRACTION * q99;
    let maxima: Vec<usize> = (1..w.len() - 1)
        .filter(|&i| {
            let m = w[i].abs();
            m >= threshold && m >= w[i - 1].abs() && m > w[i + 1].abs()
        })
        .collect();
    let pair_gap = (WAVELET_PAIR_MS * fs / 1000.0).round() as usize;
    let candidates: Vec<(usize, f64)> = maxima
        .windows(2)
        .filter(|p| p[1] - p[0] <= pair_gap && w[p[0]].signum() != w[p[1]].signum())
        .map(|p| {
            let crossing = (p[0] + 1..=p[1])
                .find(|&i| w[i].signum() != w[p[0]].signum())
                .unwrap_or(p[1]);
            (crossing, w[p[0]].abs() + w[p[1]].abs())
        })
        .collect();
    let refractory = (WAVELET_REFRACTORY_MS * fs / 1000.0).round() as usize;
    suppress(&candidates, refractory)
}

/// One-to-one matches between two sorted detection lists within `tol`.
fn count_matches(a: &[usize], b: &[usize], tol: usize) -> usize {
    let (mut i, mut j, mut matched) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        if a[i].abs_diff(b[j]) <= tol {
            matched += 1;
            i += 1;
            j += 1;
        } else if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    matched
}

/// Scores a record (as ingested, before filtering) in `[0, 1]`.
pub fn signal_quality(record: &EcgRecord) -> Result<QualityScore, PreprocessError> {
    record.require_duration(MIN_QUALITY_DURATION_S)?;
    let fs = record.sampling_rate_hz;
    let n = record.len() as f64;
    let mean = record.samples.iter().sum::<f64>() / n;
    let centred: Vec<f64> = record.samples.iter().map(|v| v - mean).collect();
    let total_power = centred.iter().map(|v| v * v).sum::<f64>() / n;
    if total_power == 0.0 {
        return Ok(QualityScore::zero());
    }

    let sos = PreprocessConfig::default().design_bandpass(fs)?;
    let band = sos.filtfilt(&centred);
    let trim = (EDGE_TRIM_S * fs) as usize;
    let inner = trim..record.len() - trim;
    let power = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inner_total = power(&centred[inner.clone()]);
    let ratio = if inner_total > 0.0 {
        power(&band[inner.clone()]) / inner_total
    } else {
        0.0
    };
    let spectral_ratio =
        ((ratio - SPECTRAL_FLOOR) / (SPECTRAL_FULL - SPECTRAL_FLOOR)).clamp(0.0, 1.0);
    let kurtosis_score = (excess_kurtosis(&band[inner]) / KURTOSIS_FULL).clamp(0.0, 1.0);

    let det_cfg = DelineatorConfig::default();
    let internal_fs = det_cfg.internal_rate_hz;
    let internal = resample_linear(&band, fs, internal_fs);
    let a = detect_on_signal(&internal, internal_fs, &det_cfg);
    let b = wavelet_detector(&internal, internal_fs);
    let beat_agreement = if a.is_empty() && b.is_empty() {
        0.0
    } else {
        let tol = (MATCH_TOLERANCE_MS * internal_fs / 1000.0).round() as usize;
        2.0 * count_matches(&a, &b, tol) as f64 / (a.len() + b.len()) as f64
    };

    Ok(QualityScore::from_components(QualityComponents {
        beat_agreement,
        spectral_ratio,
        kurtosis_score,
    }))
}

/// Records split by the quality threshold, order preserved.
#[derive(Debug, Clone, Default)]
pub struct GateOutcome {
    pub kept: Vec<(EcgRecord, QualityScore)>,
    pub excluded: Vec<(String, f64)>,
}

/// Keeps records scoring at least `cfg.quality_threshold`; scores below it
/// (and records that cannot be scored) are excluded.
pub fn gate_by_quality(records: Vec<EcgRecord>, cfg: &PreprocessConfig) -> GateOutcome {
    let mut out = GateOutcome::default();
    for record in records {
        let score = signal_quality(&record).unwrap_or_else(|_| QualityScore::zero());
        if passes_gate(score.value, cfg.quality_threshold) {
            out.kept.push((record, score));
        } else {
            out.excluded.push((record.record_id, score.value));
        }
    }
    out
}

/// Only scores strictly below the threshold are excluded.
pub fn passes_gate(score: f64, threshold: f64) -> bool {
    score >= threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceTag;

    #[test]
    fn zero_signal_scores_zero() {
        let r = EcgRecord::new("z", 500.0, vec![0.0; 5000], "I", SourceTag::Synthetic).unwrap();
        let q = signal_quality(&r).unwrap();
        assert_eq!(q.value, 0.0);
        assert_eq!(q.components.beat_agreement, 0.0);
    }

    #[test]
    fn short_records_are_rejected() {
        let r = EcgRecord::new("s", 500.0, vec![0.1; 2000], "I", SourceTag::Synthetic).unwrap();
        assert!(signal_quality(&r).is_err());
    }

    #[test]
    fn boundary_score_is_kept() {
        assert!(!passes_gate(0.49, 0.5));
        assert!(passes_gate(0.50, 0.5));
        assert!(passes_gate(0.51, 0.5));
    }

    #[test]
    fn matching_is_one_to_one() {
        assert_eq!(count_matches(&[10, 20, 30], &[11, 12, 31], 2), 2);
        assert_eq!(count_matches(&[], &[1], 2), 0);
    }

    #[test]
    fn kurtosis_of_two_point_distribution() {
        // +-1 with equal mass: kurtosis 1, excess -2
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((excess_kurtosis(&x) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_gate() {
        let g = gate_by_quality(vec![], &PreprocessConfig::default());
        assert!(g.kept.is_empty() && g.excluded.is_empty());
    }
}
