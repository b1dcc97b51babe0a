//! Threshold classifiers for long QT and first-degree AV block, confusion
//! rates and ROC/AUC.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::IntervalReport;
use crate::record::{Parameter, SourceTag};

pub const DEFAULT_LQT_THRESHOLD_MS: f64 = 450.0;
pub const WEARABLE_AVBI_THRESHOLD_MS: f64 = 150.0;
pub const MACHINE_AVBI_THRESHOLD_MS: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("predicted has {predicted} entries but truth has {truth}")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("no cases")]
    Empty,
    #[error("truth labels contain only one class")]
    OneClassOnly,
    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),
    #[error("no AVBI threshold for source '{0}'; supply an explicit override")]
    UnknownSource(SourceTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "LQT")]
    Lqt,
    #[serde(rename = "AVBI")]
    Avbi,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Lqt => "LQT",
            Condition::Avbi => "AVBI",
        }
    }

    /// Continuous score the classifier thresholds.
    pub fn parameter(self) -> Parameter {
        match self {
            Condition::Lqt => Parameter::Qtc,
            Condition::Avbi => Parameter::Pr,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lqt" => Ok(Condition::Lqt),
            "avbi" => Ok(Condition::Avbi),
            other => Err(format!("unknown condition '{other}' (expected LQT or AVBI)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(predicted: &[bool], truth: &[bool]) -> Result<ConfusionMatrix, DiagnosticsError> {
    if predicted.len() != truth.len() {
        return Err(DiagnosticsError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let mut c = ConfusionMatrix::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// (TP + TN) / (TP + FP + TN + FN); absent when there are no cases.
pub fn accuracy(c: &ConfusionMatrix) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

/// TP / (TP + FN); absent without positives.
pub fn sensitivity(c: &ConfusionMatrix) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// TN / (TN + FP); absent without negatives.
pub fn specificity(c: &ConfusionMatrix) -> Option<f64> {
    ratio(c.tn, c.tn + c.fp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (fpr, tpr) from (0, 0) to (1, 1).
    pub points: Vec<[f64; 2]>,
    pub auc: f64,
}

/// ROC from every distinct score as a `score >= threshold` cut, with tied
/// scores entering together. The trapezoid area is accumulated in integer
/// counts, so it equals the Mann-Whitney statistic exactly.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<RocCurve, DiagnosticsError> {
    if scores.len() != truth.len() {
        return Err(DiagnosticsError::LengthMismatch {
            predicted: scores.len(),
            truth: truth.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(DiagnosticsError::NonFiniteScore(i));
    }
    let pos = truth.iter().filter(|&&t| t).count() as u64;
    let neg = truth.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(DiagnosticsError::OneClassOnly);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));

    let mut points = vec![[0.0, 0.0]];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area, in units of one positive times one negative
    let mut area2: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]] == s {
            if truth[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push([fp as f64 / neg as f64, tp as f64 / pos as f64]);
    }
    let auc = area2 as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64;
    Ok(RocCurve { points, auc })
}

/// QTc at or above the threshold is positive. No QTc, no call.
pub fn classify_lqt(report: &IntervalReport, threshold_ms: f64) -> Option<bool> {
    report.record_level.qtc_ms.map(|q| q >= threshold_ms)
}

/// PR cut-offs per measurement source. Synthetic records have no default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvbiThresholds {
    pub wearable_ms: f64,
    pub machine_ms: f64,
    pub synthetic_ms: Option<f64>,
}

impl Default for AvbiThresholds {
    fn default() -> Self {
        AvbiThresholds {
            wearable_ms: WEARABLE_AVBI_THRESHOLD_MS,
            machine_ms: MACHINE_AVBI_THRESHOLD_MS,
            synthetic_ms: None,
        }
    }
}

impl AvbiThresholds {
    pub fn for_source(&self, source: SourceTag) -> Result<f64, DiagnosticsError> {
        match source {
            SourceTag::Wearable => Ok(self.wearable_ms),
            SourceTag::Machine => Ok(self.machine_ms),
            SourceTag::Synthetic => self.synthetic_ms.ok_or(DiagnosticsError::UnknownSource(source)),
        }
    }
}

/// PR at or above the source's threshold is positive. No PR, no call.
pub fn classify_avbi(
    report: &IntervalReport,
    source: SourceTag,
    thresholds: &AvbiThresholds,
) -> Result<Option<bool>, DiagnosticsError> {
    let threshold = thresholds.for_source(source)?;
    Ok(report.record_level.pr_ms.map(|pr| pr >= threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub condition: Condition,
    pub threshold_ms: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: f64,
    pub roc: Vec<[f64; 2]>,
    pub skipped: usize,
}

/// Thresholds the scores at `threshold_ms` (>= is positive) and sweeps them
/// for the ROC. Cases without a score are skipped and counted.
pub fn evaluate_detector(
    scores: &[Option<f64>],
    truth: &[bool],
    condition: Condition,
    threshold_ms: f64,
) -> Result<DiagnosticReport, DiagnosticsError> {
    if scores.len() != truth.len() {
        return Err(DiagnosticsError::LengthMismatch {
            predicted: scores.len(),
            truth: truth.len(),
        });
    }
    let (kept_scores, kept_truth): (Vec<f64>, Vec<bool>) = scores
        .iter()
        .zip(truth)
        .filter_map(|(s, &t)| s.map(|s| (s, t)))
        .unzip();
    let skipped = scores.len() - kept_scores.len();
    let roc = roc_auc(&kept_scores, &kept_truth)?;
    let predicted: Vec<bool> = kept_scores.iter().map(|&s| s >= threshold_ms).collect();
    let c = confusion(&predicted, &kept_truth)?;
    Ok(DiagnosticReport {
        condition,
        threshold_ms,
        confusion: c,
        accuracy: accuracy(&c),
        sensitivity: sensitivity(&c),
        specificity: specificity(&c),
        auc: roc.auc,
        roc: roc.points,
        skipped,
    })
}
