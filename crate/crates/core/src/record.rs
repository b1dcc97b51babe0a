//! Record, annotation and paired-measurement types, plus their CSV formats.
//!
//! Records are stored as commented-metadata CSV:
//!
//! ```text
//! # record_id=r001
//! # sampling_rate_hz=500
//! # lead_label=I
//! # source_tag=wearable
//! sample_index,mv
//! 0,0.012
//! 1,0.013
//! ```
//!
//! Annotations use a fixed header `record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms`
//! where an empty cell means the value is absent.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest sampling rate the pipeline accepts.
pub const MIN_SAMPLING_RATE_HZ: f64 = 100.0;
/// Minimum record duration for anything beyond I/O.
pub const MIN_DURATION_S: f64 = 2.0;

const RECORD_HEADER: &str = "sample_index,mv";
const ANNOTATION_HEADER: &str = "record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing metadata key `{0}`")]
    MissingMetadata(&'static str),
    #[error("invalid metadata value for `{key}`: {value}")]
    BadMetadata { key: String, value: String },
    #[error("unexpected header: {0:?}")]
    BadHeader(String),
    #[error("sample_index not contiguous at line {line}: expected {expected}, found {found}")]
    NonContiguousIndex {
        line: usize,
        expected: usize,
        found: String,
    },
    #[error("non-finite sample at line {line}")]
    NonFiniteSample { line: usize },
    #[error("malformed line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("record too short: {duration_s:.3} s (need at least {min_s} s)")]
    TooShort { duration_s: f64, min_s: f64 },
    #[error("invalid sampling rate {0} Hz")]
    InvalidRate(f64),
    #[error("negative or non-finite interval at line {line}")]
    NegativeInterval { line: usize },
    #[error("no overlapping records carry {0}")]
    EmptyJoin(Parameter),
}

/// Where a recording came from. Selects per-source diagnostic thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Wearable,
    Machine,
    Synthetic,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Wearable => "wearable",
            SourceTag::Machine => "machine",
            SourceTag::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wearable" => Ok(SourceTag::Wearable),
            "machine" => Ok(SourceTag::Machine),
            "synthetic" => Ok(SourceTag::Synthetic),
            other => Err(format!("unknown source tag `{other}`")),
        }
    }
}

/// A uniformly sampled single-lead recording in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub sampling_rate_hz: f64,
    pub samples: Vec<f64>,
    pub lead_label: String,
    pub source_tag: SourceTag,
}

impl EcgRecord {
    /// Builds a record, rejecting bad rates and non-finite samples.
    pub fn new(
        record_id: impl Into<String>,
        sampling_rate_hz: f64,
        samples: Vec<f64>,
        lead_label: impl Into<String>,
        source_tag: SourceTag,
    ) -> Result<Self, RecordError> {
        if !sampling_rate_hz.is_finite() || sampling_rate_hz < MIN_SAMPLING_RATE_HZ {
            return Err(RecordError::InvalidRate(sampling_rate_hz));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(RecordError::NonFiniteSample { line: i });
        }
        Ok(EcgRecord {
            record_id: record_id.into(),
            sampling_rate_hz,
            samples,
            lead_label: lead_label.into(),
            source_tag,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate_hz
    }

    /// Errors unless the record spans at least `min_s` seconds.
    pub fn require_duration(&self, min_s: f64) -> Result<(), RecordError> {
        let duration_s = self.duration_s();
        if duration_s + 1e-12 < min_s {
            return Err(RecordError::TooShort { duration_s, min_s });
        }
        Ok(())
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> EcgRecord {
        EcgRecord {
            record_id: self.record_id.clone(),
            sampling_rate_hz: self.sampling_rate_hz,
            samples,
            lead_label: self.lead_label.clone(),
            source_tag: self.source_tag,
        }
    }

    pub fn ms_to_samples(&self, ms: f64) -> f64 {
        ms * self.sampling_rate_hz / 1000.0
    }
}

/// Fiducial sample indices for one beat. Only `r_peak` is mandatory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatFiducials {
    pub p_onset: Option<usize>,
    pub p_peak: Option<usize>,
    pub p_offset: Option<usize>,
    pub qrs_onset: Option<usize>,
    pub r_peak: usize,
    pub qrs_offset: Option<usize>,
    pub t_peak: Option<usize>,
    pub t_offset: Option<usize>,
}

impl BeatFiducials {
    pub fn at_r(r_peak: usize) -> Self {
        BeatFiducials {
            r_peak,
            ..Default::default()
        }
    }

    /// Indices in waveform order; absent entries are `None`.
    pub fn ordered(&self) -> [Option<usize>; 8] {
        [
            self.p_onset,
            self.p_peak,
            self.p_offset,
            self.qrs_onset,
            Some(self.r_peak),
            self.qrs_offset,
            self.t_peak,
            self.t_offset,
        ]
    }

    /// Applies `f` to every present index.
    pub fn map_indices(&self, mut f: impl FnMut(usize) -> usize) -> Self {
        BeatFiducials {
            p_onset: self.p_onset.map(&mut f),
            p_peak: self.p_peak.map(&mut f),
            p_offset: self.p_offset.map(&mut f),
            qrs_onset: self.qrs_onset.map(&mut f),
            r_peak: f(self.r_peak),
            qrs_offset: self.qrs_offset.map(&mut f),
            t_peak: self.t_peak.map(&mut f),
            t_offset: self.t_offset.map(&mut f),
        }
    }

    fn is_strictly_ordered(&self) -> bool {
        let present: Vec<usize> = self.ordered().iter().flatten().copied().collect();
        present.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiducialError {
    #[error("beat {beat}: fiducials out of order")]
    Unordered { beat: usize },
    #[error("beat {beat}: index {index} outside record of {len} samples")]
    OutOfRange { beat: usize, index: usize, len: usize },
    #[error("beats {beat} and {next}: r peaks closer than 200 ms")]
    TooClose { beat: usize, next: usize },
}

/// Per-beat fiducials for one record, ordered by R peak.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiducialSet {
    pub beats: Vec<BeatFiducials>,
}

impl FiducialSet {
    pub fn new(beats: Vec<BeatFiducials>) -> Self {
        FiducialSet { beats }
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    /// Checks every ordering and range invariant against a record of
    /// `len` samples at `fs` Hz.
    pub fn validate(&self, len: usize, fs: f64) -> Result<(), FiducialError> {
        let min_gap = 0.2 * fs;
        for (i, beat) in self.beats.iter().enumerate() {
            if let Some(&index) = beat.ordered().iter().flatten().find(|&&ix| ix >= len) {
                return Err(FiducialError::OutOfRange { beat: i, index, len });
            }
            if !beat.is_strictly_ordered() {
                return Err(FiducialError::Unordered { beat: i });
            }
        }
        for (i, pair) in self.beats.windows(2).enumerate() {
            let gap = pair[1].r_peak as f64 - pair[0].r_peak as f64;
            if gap < min_gap - 1e-9 {
                return Err(FiducialError::TooClose { beat: i, next: i + 1 });
            }
        }
        Ok(())
    }

    /// Writes `beat_index,p_onset,...,t_offset` with empty cells for absent indices.
    pub fn write_csv(&self, path: &Path) -> Result<(), RecordError> {
        let mut out = String::from(
            "beat_index,p_onset,p_peak,p_offset,qrs_onset,r_peak,qrs_offset,t_peak,t_offset\n",
        );
        for (i, beat) in self.beats.iter().enumerate() {
            out.push_str(&i.to_string());
            for ix in beat.ordered() {
                out.push(',');
                if let Some(ix) = ix {
                    out.push_str(&ix.to_string());
                }
            }
            out.push('\n');
        }
        write_file(path, out.as_bytes())
    }
}

/// The four clinical parameters compared across measurement sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "PR")]
    Pr,
    #[serde(rename = "QRS")]
    Qrs,
    #[serde(rename = "QT")]
    Qt,
    #[serde(rename = "QTc")]
    Qtc,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::Pr, Parameter::Qrs, Parameter::Qt, Parameter::Qtc];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Pr => "PR",
            Parameter::Qrs => "QRS",
            Parameter::Qt => "QT",
            Parameter::Qtc => "QTc",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pr" => Ok(Parameter::Pr),
            "qrs" => Ok(Parameter::Qrs),
            "qt" => Ok(Parameter::Qt),
            "qtc" => Ok(Parameter::Qtc),
            other => Err(format!("unknown parameter `{other}`")),
        }
    }
}

/// Record-level interval values in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalValues {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pr_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qrs_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qtc_ms: Option<f64>,
}

impl IntervalValues {
    pub fn get(&self, parameter: Parameter) -> Option<f64> {
        match parameter {
            Parameter::Pr => self.pr_ms,
            Parameter::Qrs => self.qrs_ms,
            Parameter::Qt => self.qt_ms,
            Parameter::Qtc => self.qtc_ms,
        }
    }

    pub fn set(&mut self, parameter: Parameter, value: Option<f64>) {
        match parameter {
            Parameter::Pr => self.pr_ms = value,
            Parameter::Qrs => self.qrs_ms = value,
            Parameter::Qt => self.qt_ms = value,
            Parameter::Qtc => self.qtc_ms = value,
        }
    }
}

/// One annotator's record-level measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub record_id: String,
    pub annotator_id: String,
    pub intervals: IntervalValues,
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_annotations_csv(rows: &[AnnotationSet], path: &Path) -> Result<(), RecordError> {
    let mut out = String::from(ANNOTATION_HEADER);
    out.push('\n');
    for row in rows {
        let iv = &row.intervals;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.record_id,
            row.annotator_id,
            format_opt(iv.pr_ms),
            format_opt(iv.qrs_ms),
            format_opt(iv.qt_ms),
            format_opt(iv.qtc_ms)
        ));
    }
    write_file(path, out.as_bytes())
}

pub fn read_annotations_csv(path: &Path) -> Result<Vec<AnnotationSet>, RecordError> {
    let text = read_file(path)?;
    parse_annotations(&text)
}

pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationSet>, RecordError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim_end_matches('\r')).unwrap_or("");
    if header != ANNOTATION_HEADER {
        return Err(RecordError::BadHeader(header.to_string()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(RecordError::Malformed {
                line: line_no,
                reason: format!("expected 6 cells, found {}", cells.len()),
            });
        }
        let mut intervals = IntervalValues::default();
        for (parameter, cell) in Parameter::ALL.iter().zip(&cells[2..]) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| RecordError::Malformed {
                line: line_no,
                reason: format!("not a number: {cell:?}"),
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(RecordError::NegativeInterval { line: line_no });
            }
            intervals.set(*parameter, Some(value));
        }
        rows.push(AnnotationSet {
            record_id: cells[0].trim().to_string(),
            annotator_id: cells[1].trim().to_string(),
            intervals,
        });
    }
    Ok(rows)
}

/// One matched pair of measurements for a single record.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPair {
    pub record_id: String,
    pub a_value_ms: f64,
    pub b_value_ms: f64,
}

/// Two sources' values of one parameter, matched by record.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMeasurements {
    pub parameter: Parameter,
    pub source_a: String,
    pub source_b: String,
    pub pairs: Vec<MeasurementPair>,
}

impl PairedMeasurements {
    /// Builds paired data directly from two columns; record ids are the row numbers.
    pub fn from_columns(parameter: Parameter, a: &[f64], b: &[f64]) -> Self {
        assert_eq!(a.len(), b.len(), "column length mismatch");
        let pairs = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&a_value_ms, &b_value_ms))| MeasurementPair {
                record_id: format!("{i:06}"),
                a_value_ms,
                b_value_ms,
            })
            .collect();
        PairedMeasurements {
            parameter,
            source_a: "a".into(),
            source_b: "b".into(),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn a_values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.a_value_ms).collect()
    }

    pub fn b_values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.b_value_ms).collect()
    }

    pub fn swapped(&self) -> Self {
        PairedMeasurements {
            parameter: self.parameter,
            source_a: self.source_b.clone(),
            source_b: self.source_a.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|p| MeasurementPair {
                    record_id: p.record_id.clone(),
                    a_value_ms: p.b_value_ms,
                    b_value_ms: p.a_value_ms,
                })
                .collect(),
        }
    }
}

/// Result of an inner join: the pairs plus record ids that had no partner.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    pub paired: PairedMeasurements,
    pub skipped: Vec<String>,
}

/// Inner-joins two annotation lists on `record_id` for one parameter.
pub fn pair_by_record(
    a: &[AnnotationSet],
    b: &[AnnotationSet],
    parameter: Parameter,
) -> Result<JoinOutcome, RecordError> {
    let index = |rows: &[AnnotationSet]| -> BTreeMap<String, Option<f64>> {
        // first row wins on duplicate ids
        let mut m = BTreeMap::new();
        for row in rows {
            m.entry(row.record_id.clone())
                .or_insert(row.intervals.get(parameter));
        }
        m
    };
    let a_map = index(a);
    let b_map = index(b);
    let source = |rows: &[AnnotationSet]| {
        rows.first()
            .map(|r| r.annotator_id.clone())
            .unwrap_or_default()
    };

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let all_ids: std::collections::BTreeSet<&String> = a_map.keys().chain(b_map.keys()).collect();
    for id in all_ids {
        match (a_map.get(id).copied().flatten(), b_map.get(id).copied().flatten()) {
            (Some(a_value_ms), Some(b_value_ms))
                if a_value_ms.is_finite() && b_value_ms.is_finite() =>
            {
                pairs.push(MeasurementPair {
                    record_id: id.clone(),
                    a_value_ms,
                    b_value_ms,
                })
            }
            _ => skipped.push(id.clone()),
        }
    }
    if pairs.is_empty() {
        return Err(RecordError::EmptyJoin(parameter));
    }
    Ok(JoinOutcome {
        paired: PairedMeasurements {
            parameter,
            source_a: source(a),
            source_b: source(b),
            pairs,
        },
        skipped,
    })
}

pub fn read_record_csv(path: &Path) -> Result<EcgRecord, RecordError> {
    let text = read_file(path)?;
    parse_record(&text)
}

/// Parses the record CSV format from a string.
pub fn parse_record(text: &str) -> Result<EcgRecord, RecordError> {
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut samples = Vec::new();
    let mut seen_header = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if !seen_header {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() != RECORD_HEADER {
                return Err(RecordError::BadHeader(line.to_string()));
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (index, value) = line.split_once(',').ok_or_else(|| RecordError::Malformed {
            line: line_no,
            reason: "expected two cells".into(),
        })?;
        let expected = samples.len();
        if index.trim().parse::<usize>().ok() != Some(expected) {
            return Err(RecordError::NonContiguousIndex {
                line: line_no,
                expected,
                found: index.trim().to_string(),
            });
        }
        let value = value.trim();
        let v: f64 = value.parse().map_err(|_| RecordError::Malformed {
            line: line_no,
            reason: format!("not a number: {value:?}"),
        })?;
        if !v.is_finite() {
            return Err(RecordError::NonFiniteSample { line: line_no });
        }
        samples.push(v);
    }
    if !seen_header {
        return Err(RecordError::BadHeader(String::new()));
    }

    let take = |key: &'static str| meta.get(key).cloned().ok_or(RecordError::MissingMetadata(key));
    let record_id = take("record_id")?;
    let rate_text = take("sampling_rate_hz")?;
    let lead_label = take("lead_label")?;
    let source_text = take("source_tag")?;

    let sampling_rate_hz: f64 = rate_text.parse().map_err(|_| RecordError::BadMetadata {
        key: "sampling_rate_hz".into(),
        value: rate_text.clone(),
    })?;
    let source_tag: SourceTag = source_text.parse().map_err(|_| RecordError::BadMetadata {
        key: "source_tag".into(),
        value: source_text.clone(),
    })?;
    let record = EcgRecord::new(record_id, sampling_rate_hz, samples, lead_label, source_tag)?;
    record.require_duration(MIN_DURATION_S)?;
    Ok(record)
}

/// Serializes a record; output is byte-identical for identical input.
pub fn record_to_csv(record: &EcgRecord) -> String {
    let mut out = String::with_capacity(record.samples.len() * 16 + 128);
    out.push_str(&format!("# record_id={}\n", record.record_id));
    out.push_str(&format!("# sampling_rate_hz={}\n", record.sampling_rate_hz));
    out.push_str(&format!("# lead_label={}\n", record.lead_label));
    out.push_str(&format!("# source_tag={}\n", record.source_tag));
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for (i, v) in record.samples.iter().enumerate() {
        // Display for f64 is the shortest string that round-trips.
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn write_record_csv(record: &EcgRecord, path: &Path) -> Result<(), RecordError> {
    write_file(path, record_to_csv(record).as_bytes())
}

fn read_file(path: &Path) -> Result<String, RecordError> {
    fs::read_to_string(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RecordError> {
    let io = |source| RecordError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with(rate: &str, rows: usize) -> String {
        let mut s = format!(
            "# record_id=r1\n# sampling_rate_hz={rate}\n# lead_label=I\n# source_tag=wearable\nsample_index,mv\n"
        );
        for i in 0..rows {
            s.push_str(&format!("{i},{}\n", (i as f64 * 0.01).sin()));
        }
        s
    }

    #[test]
    fn reads_length_and_duration() {
        let rec = parse_record(&csv_with("500", 1000)).unwrap();
        assert_eq!(rec.len(), 1000);
        assert_eq!(rec.duration_s(), 2.0);
        assert_eq!(rec.source_tag, SourceTag::Wearable);
    }

    #[test]
    fn gap_in_index_is_rejected() {
        let text = csv_with("100", 300).replace("\n17,", "\n18,");
        assert!(matches!(
            parse_record(&text),
            Err(RecordError::NonContiguousIndex { expected: 17, .. })
        ));
    }

    #[test]
    fn missing_rate_is_rejected() {
        let text = csv_with("500", 1000).replace("# sampling_rate_hz=500\n", "");
        assert!(matches!(
            parse_record(&text),
            Err(RecordError::MissingMetadata("sampling_rate_hz"))
        ));
    }

    #[test]
    fn nan_and_short_records_are_rejected() {
        for bad in ["NaN", "inf", "-inf"] {
            let mut lines: Vec<String> = csv_with("500", 1000).lines().map(String::from).collect();
            lines[5 + 5] = format!("5,{bad}");
            assert!(matches!(
                parse_record(&lines.join("\n")),
                Err(RecordError::NonFiniteSample { line: 11 })
            ));
        }
        assert!(matches!(
            parse_record(&csv_with("500", 999)),
            Err(RecordError::TooShort { .. })
        ));
    }

    #[test]
    fn own_output_has_all_metadata_and_is_deterministic() {
        let rec = EcgRecord::new("x", 250.0, vec![0.25; 600], "II", SourceTag::Machine).unwrap();
        let a = record_to_csv(&rec);
        let b = record_to_csv(&rec);
        assert_eq!(a, b);
        assert_eq!(parse_record(&a).unwrap(), rec);
    }

    #[test]
    fn annotation_rows() {
        let text = "record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms\nr1,doctor_A,148,106,378,426.8\nr2,doctor_A,150,100,380,\n";
        let rows = parse_annotations(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].intervals.pr_ms, Some(148.0));
        assert_eq!(rows[0].intervals.qrs_ms, Some(106.0));
        assert_eq!(rows[0].intervals.qt_ms, Some(378.0));
        assert_eq!(rows[0].intervals.qtc_ms, Some(426.8));
        assert_eq!(rows[1].intervals.qtc_ms, None);

        let bad = "record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms\nr1,doctor_A,-5,106,378,426.8\n";
        assert!(matches!(
            parse_annotations(bad),
            Err(RecordError::NegativeInterval { line: 2 })
        ));
        assert!(matches!(
            parse_annotations("id,who\n"),
            Err(RecordError::BadHeader(_))
        ));
    }

    fn ann(id: &str, who: &str, qt: Option<f64>) -> AnnotationSet {
        AnnotationSet {
            record_id: id.into(),
            annotator_id: who.into(),
            intervals: IntervalValues {
                qt_ms: qt,
                ..Default::default()
            },
        }
    }

    #[test]
    fn join_is_an_intersection() {
        let a = vec![ann("r1", "x", Some(1.0)), ann("r2", "x", Some(2.0))];
        let b = vec![ann("r2", "y", Some(3.0)), ann("r3", "y", Some(4.0))];
        let out = pair_by_record(&a, &b, Parameter::Qt).unwrap();
        assert_eq!(out.paired.pairs.len(), 1);
        assert_eq!(out.paired.pairs[0].record_id, "r2");
        assert_eq!(out.skipped, vec!["r1".to_string(), "r3".to_string()]);
        assert_eq!(out.paired.source_a, "x");

        let b = vec![ann("r2", "y", None), ann("r3", "y", Some(4.0))];
        assert!(matches!(
            pair_by_record(&a, &b, Parameter::Qt),
            Err(RecordError::EmptyJoin(Parameter::Qt))
        ));
    }

    #[test]
    fn join_of_369_rows() {
        let a: Vec<_> = (0..369).map(|i| ann(&format!("r{i}"), "wearable", Some(380.0))).collect();
        let b: Vec<_> = (0..369).map(|i| ann(&format!("r{i}"), "doctor_A", Some(378.0))).collect();
        assert_eq!(pair_by_record(&a, &b, Parameter::Qt).unwrap().paired.len(), 369);
    }

    #[test]
    fn fiducial_validation() {
        let mut b = BeatFiducials::at_r(100);
        b.qrs_onset = Some(90);
        b.qrs_offset = Some(110);
        let set = FiducialSet::new(vec![b, BeatFiducials::at_r(300)]);
        assert!(set.validate(1000, 500.0).is_ok());
        assert!(matches!(
            set.validate(200, 500.0),
            Err(FiducialError::OutOfRange { beat: 1, .. })
        ));
        let mut bad = b;
        bad.qrs_offset = Some(95);
        bad.qrs_onset = Some(101);
        assert!(FiducialSet::new(vec![bad]).validate(1000, 500.0).is_err());
        let close = FiducialSet::new(vec![BeatFiducials::at_r(100), BeatFiducials::at_r(150)]);
        assert!(matches!(
            close.validate(1000, 500.0),
            Err(FiducialError::TooClose { .. })
        ));
    }
}
