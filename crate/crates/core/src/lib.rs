//! Single-lead ECG interval measurement.
//!
//! Records go through baseline removal and band-pass filtering, a quality
//! gate, R-peak detection and wavelet delineation, and come out as PR, QRS,
//! QT and QTc per beat and per record. The [`agreement`] and [`diagnostics`]
//! modules compare those measurements against a reference, and [`synth`]
//! generates records whose fiducials are known exactly.

pub mod agreement;
pub mod delineate;
pub mod diagnostics;
pub mod intervals;
pub mod preprocess;
pub mod record;
pub mod synth;

pub use agreement::{AgreementReport, BlandAltman, CorrelationMethod, CorrelationResult, Stars, StatsError, SummaryStats};
pub use delineate::{delineate, detect_r_peaks, DelineateError, DelineatorConfig};
pub use diagnostics::{AvbiThresholds, Condition, ConfusionMatrix, DiagnosticReport, DiagnosticsError};
pub use intervals::{beat_intervals, qtc, record_intervals, BeatIntervals, IntervalReport, QtcFormula};
pub use preprocess::{gate_by_quality, preprocess, signal_quality, PreprocessConfig, PreprocessError, QualityScore};
pub use record::{
    AnnotationSet, BeatFiducials, EcgRecord, FiducialSet, IntervalValues, MeasurementPair, PairedMeasurements, Parameter,
    RecordError, SourceTag,
};
pub use synth::{CohortSpec, GroundTruth, LabelSpec, NoiseKind, NoiseSpec, SynthError, SynthParams};

/// Full single-record pipeline: preprocess, detect, delineate, measure.
/// The quality score is computed on the record as given.
pub fn analyze_record(
    record: &EcgRecord,
    quality: &QualityScore,
    pre: &PreprocessConfig,
    del: &DelineatorConfig,
    formula: QtcFormula,
) -> Result<(IntervalReport, FiducialSet), AnalyzeError> {
    let clean = preprocess(record, pre)?;
    let peaks = detect_r_peaks(&clean, del);
    let fiducials = delineate(&clean, &peaks, del)?;
    let per_beat = intervals::beat_intervals_with(&fiducials, clean.sampling_rate_hz, formula);
    let report = record_intervals(&record.record_id, record.source_tag, per_beat, quality);
    Ok((report, fiducials))
}

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Delineate(#[from] DelineateError),
}
