//! PR, QRS, QT and QTc from fiducials, per beat and per record.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::QualityScore;
use crate::record::{AnnotationSet, FiducialSet, IntervalValues, Parameter, SourceTag};

/// Fewest contributing beats for a record-level value.
pub const MIN_BEATS_PER_PARAMETER: usize = 3;
/// Upper bound (exclusive) on any per-beat interval.
pub const MAX_INTERVAL_MS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntervalError {
    #[error("QTc needs positive QT and RR, got qt={qt_ms} rr={rr_ms}")]
    NonPositiveInput { qt_ms: f64, rr_ms: f64 },
}

/// Heart-rate correction applied to QT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QtcFormula {
    /// QT / sqrt(RR)
    #[default]
    Bazett,
    /// QT / cbrt(RR)
    Fridericia,
}

impl QtcFormula {
    pub fn apply(self, qt_ms: f64, rr_ms: f64) -> Result<f64, IntervalError> {
        if !(qt_ms > 0.0 && rr_ms > 0.0) || !qt_ms.is_finite() || !rr_ms.is_finite() {
            return Err(IntervalError::NonPositiveInput { qt_ms, rr_ms });
        }
        let rr_s = rr_ms / 1000.0;
        Ok(match self {
            QtcFormula::Bazett => qt_ms / rr_s.sqrt(),
            QtcFormula::Fridericia => qt_ms / rr_s.cbrt(),
        })
    }
}

/// Bazett-corrected QT, RR in milliseconds.
pub fn qtc(qt_ms: f64, rr_ms: f64) -> Result<f64, IntervalError> {
    QtcFormula::Bazett.apply(qt_ms, rr_ms)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BeatIntervals {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pr_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qrs_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rr_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qtc_ms: Option<f64>,
}

impl BeatIntervals {
    pub fn get(&self, parameter: Parameter) -> Option<f64> {
        match parameter {
            Parameter::Pr => self.pr_ms,
            Parameter::Qrs => self.qrs_ms,
            Parameter::Qt => self.qt_ms,
            Parameter::Qtc => self.qtc_ms,
        }
    }

    /// Checks positivity, the upper bound and the presence rules.
    pub fn is_valid(&self) -> bool {
        let in_range = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x < MAX_INTERVAL_MS);
        let all_in_range = [self.pr_ms, self.qrs_ms, self.qt_ms, self.rr_ms, self.qtc_ms]
            .into_iter()
            .all(in_range);
        let qrs_before_qt = match (self.qrs_ms, self.qt_ms) {
            (Some(q), Some(t)) => q < t,
            _ => true,
        };
        let qtc_needs_inputs = self.qtc_ms.is_none() || (self.qt_ms.is_some() && self.rr_ms.is_some());
        all_in_range && qrs_before_qt && qtc_needs_inputs
    }
}

fn span_ms(from: Option<usize>, to: Option<usize>, fs: f64) -> Option<f64> {
    match (from, to) {
        (Some(a), Some(b)) if b > a => {
            let ms = (b - a) as f64 / fs * 1000.0;
            (ms < MAX_INTERVAL_MS).then_some(ms)
        }
        _ => None,
    }
}

/// Per-beat intervals with a chosen QTc correction.
pub fn beat_intervals_with(fiducials: &FiducialSet, fs: f64, formula: QtcFormula) -> Vec<BeatIntervals> {
    let mut prev_r: Option<usize> = None;
    fiducials
        .beats
        .iter()
        .map(|b| {
            let pr_ms = span_ms(b.p_onset, b.qrs_onset, fs);
            let qrs_ms = span_ms(b.qrs_onset, b.qrs_offset, fs);
            let mut qt_ms = span_ms(b.qrs_onset, b.t_offset, fs);
            if let (Some(q), Some(t)) = (qrs_ms, qt_ms) {
                if q >= t {
                    qt_ms = None;
                }
            }
            let rr_ms = span_ms(prev_r, Some(b.r_peak), fs);
            prev_r = Some(b.r_peak);
            let qtc_ms = match (qt_ms, rr_ms) {
                (Some(qt), Some(rr)) => formula
                    .apply(qt, rr)
                    .ok()
                    .filter(|v| *v < MAX_INTERVAL_MS),
                _ => None,
            };
            BeatIntervals {
                pr_ms,
                qrs_ms,
                qt_ms,
                rr_ms,
                qtc_ms,
            }
        })
        .collect()
}

/// Per-beat intervals with Bazett QTc. RR for a beat is measured from the
/// preceding R peak, so the first beat has none.
pub fn beat_intervals(fiducials: &FiducialSet, fs: f64) -> Vec<BeatIntervals> {
    beat_intervals_with(fiducials, fs, QtcFormula::Bazett)
}

/// Median of a nonempty slice (mean of the middle two for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Per-beat and record-level intervals for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub record_id: String,
    pub source_tag: SourceTag,
    pub quality: f64,
    pub n_beats_used: usize,
    #[serde(flatten)]
    pub record_level: IntervalValues,
    pub per_beat: Vec<BeatIntervals>,
}

impl IntervalReport {
    pub fn value(&self, parameter: Parameter) -> Option<f64> {
        self.record_level.get(parameter)
    }

    /// Record-level values as an annotation row, for joining with references.
    pub fn to_annotation(&self, annotator_id: &str) -> AnnotationSet {
        AnnotationSet {
            record_id: self.record_id.clone(),
            annotator_id: annotator_id.to_string(),
            intervals: self.record_level,
        }
    }
}

/// Aggregates beats by median, requiring at least three contributing beats
/// per parameter.
pub fn record_intervals(
    record_id: &str,
    source_tag: SourceTag,
    per_beat: Vec<BeatIntervals>,
    quality: &QualityScore,
) -> IntervalReport {
    let mut record_level = IntervalValues::default();
    for parameter in Parameter::ALL {
        let values: Vec<f64> = per_beat.iter().filter_map(|b| b.get(parameter)).collect();
        let value = if values.len() >= MIN_BEATS_PER_PARAMETER {
            median(&values)
        } else {
            None
        };
        record_level.set(parameter, value);
    }
    IntervalReport {
        record_id: record_id.to_string(),
        source_tag,
        quality: quality.value,
        n_beats_used: per_beat.iter().filter(|b| b.qt_ms.is_some()).count(),
        record_level,
        per_beat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::BeatFiducials;

    fn beat(p_on: usize, qrs_on: usize, r: usize, qrs_off: usize, t_off: Option<usize>) -> BeatFiducials {
        BeatFiducials {
            p_onset: Some(p_on),
            qrs_onset: Some(qrs_on),
            r_peak: r,
            qrs_offset: Some(qrs_off),
            t_offset: t_off,
            ..Default::default()
        }
    }

    #[test]
    fn direct_arithmetic() {
        let set = FiducialSet::new(vec![beat(0, 75, 100, 125, Some(275))]);
        let b = beat_intervals(&set, 500.0)[0];
        assert_eq!(b.pr_ms, Some(150.0));
        assert_eq!(b.qrs_ms, Some(100.0));
        assert_eq!(b.qt_ms, Some(400.0));
        assert_eq!(b.rr_ms, None);
        assert_eq!(b.qtc_ms, None);
    }

    #[test]
    fn missing_t_offset_propagates() {
        let set = FiducialSet::new(vec![beat(0, 75, 100, 125, None), beat(400, 475, 500, 525, None)]);
        let b = beat_intervals(&set, 500.0);
        assert_eq!(b[1].rr_ms, Some(800.0));
        assert_eq!(b[1].qt_ms, None);
        assert_eq!(b[1].qtc_ms, None);
    }

    #[test]
    fn qtc_values() {
        assert_eq!(qtc(400.0, 1000.0).unwrap(), 400.0);
        assert_eq!(qtc(400.0, 250.0).unwrap(), 800.0);
        let oracle = 360.0 / (600.0f64 / 1000.0).sqrt();
        assert!((qtc(360.0, 600.0).unwrap() - oracle).abs() < 1e-9);
        assert!((qtc(360.0, 600.0).unwrap() - 464.758_001_544_89).abs() < 1e-9);
        assert!(qtc(0.0, 600.0).is_err());
        assert!(qtc(360.0, -1.0).is_err());
        assert!((QtcFormula::Fridericia.apply(400.0, 1000.0).unwrap() - 400.0).abs() < 1e-12);
    }

    fn with_qt(qts: &[f64]) -> Vec<BeatIntervals> {
        qts.iter()
            .map(|&q| BeatIntervals {
                qt_ms: Some(q),
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn record_medians() {
        let q = QualityScore::zero();
        let r = record_intervals("r", SourceTag::Synthetic, with_qt(&[398.0, 400.0, 402.0]), &q);
        assert_eq!(r.record_level.qt_ms, Some(400.0));
        assert_eq!(r.n_beats_used, 3);
        let r = record_intervals("r", SourceTag::Synthetic, with_qt(&[380.0, 384.0, 600.0, 382.0, 379.0]), &q);
        assert_eq!(r.record_level.qt_ms, Some(382.0));
        let r = record_intervals("r", SourceTag::Synthetic, with_qt(&[380.0, 384.0]), &q);
        assert_eq!(r.record_level.qt_ms, None);
    }

    #[test]
    fn pr_on_two_beats_is_absent() {
        let mut beats = with_qt(&[400.0, 400.0, 400.0]);
        beats[0].pr_ms = Some(150.0);
        beats[1].pr_ms = Some(152.0);
        let r = record_intervals("r", SourceTag::Synthetic, beats, &QualityScore::zero());
        assert_eq!(r.record_level.pr_ms, None);
        assert_eq!(r.record_level.qt_ms, Some(400.0));
    }
}
