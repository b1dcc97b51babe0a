//! Method-comparison statistics: normality-gated correlation, Bland-Altman
//! limits of agreement, summaries and stratified correlation tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::record::{Parameter, PairedMeasurements};

/// Smallest sample on which normality (and so auto-selection) is decided.
pub const MIN_NORMALITY_N: usize = 8;
/// Smallest sample for any correlation.
pub const MIN_CORRELATION_N: usize = 3;
/// Significance level of the normality gate.
pub const NORMALITY_ALPHA: f64 = 0.05;
pub const DEFAULT_LOA_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("zero variance on one side")]
    DegenerateVariance,
    #[error("every value on one side is tied")]
    AllTied,
    #[error("non-finite value in input")]
    NonFinite,
}

impl StatsError {
    /// Short machine-readable reason used in table rows.
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::TooFewPairs { .. } | StatsError::TooFewValues { .. } => "insufficient",
            StatsError::DegenerateVariance => "degenerate_variance",
            StatsError::AllTied => "all_tied",
            StatsError::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Spearman => "spearman",
        })
    }
}

/// Significance marker. Thresholds are inclusive: p <= 0.05 earns one star.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "ns")]
    Ns,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
    #[serde(rename = "****")]
    Four,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p <= 0.0001 {
            Stars::Four
        } else if p <= 0.001 {
            Stars::Three
        } else if p <= 0.01 {
            Stars::Two
        } else if p <= 0.05 {
            Stars::One
        } else {
            Stars::Ns
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::Ns => "ns",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
            Stars::Four => "****",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub method: CorrelationMethod,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
    pub stars: Stars,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub z: f64,
    pub pct_within: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub is_normal: bool,
    pub statistic: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummaryStats {
    MeanSd { center: f64, sd: f64 },
    MedianIqr { center: f64, spread_low: f64, spread_high: f64 },
}

impl SummaryStats {
    pub fn center(&self) -> f64 {
        match *self {
            SummaryStats::MeanSd { center, .. } | SummaryStats::MedianIqr { center, .. } => center,
        }
    }
}

/// `432.5 (26.1)` for mean (SD), `130.0 (117.0, 144.0)` for median (IQR).
impl fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SummaryStats::MeanSd { center, sd } => write!(f, "{center:.1} ({sd:.1})"),
            SummaryStats::MedianIqr {
                center,
                spread_low,
                spread_high,
            } => write!(f, "{center:.1} ({spread_low:.1}, {spread_high:.1})"),
        }
    }
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Two-sided p for a correlation of `r` on `n` pairs via the t transform.
fn correlation_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn pearson_r(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn correlation_from(method: CorrelationMethod, r: f64, n: usize) -> CorrelationResult {
    let p_value = correlation_p(r, n);
    CorrelationResult {
        method,
        r,
        p_value,
        n,
        stars: Stars::from_p(p_value),
    }
}

fn require_pairs(pairs: &PairedMeasurements, need: usize) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    if pairs.len() < need {
        return Err(StatsError::TooFewPairs {
            need,
            got: pairs.len(),
        });
    }
    let (a, b) = (pairs.a_values(), pairs.b_values());
    check_finite(&a)?;
    check_finite(&b)?;
    Ok((a, b))
}

pub fn pearson(pairs: &PairedMeasurements) -> Result<CorrelationResult, StatsError> {
    let (a, b) = require_pairs(pairs, MIN_CORRELATION_N)?;
    let r = pearson_r(&a, &b)?;
    Ok(correlation_from(CorrelationMethod::Pearson, r, a.len()))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(pairs: &PairedMeasurements) -> Result<CorrelationResult, StatsError> {
    let (a, b) = require_pairs(pairs, MIN_CORRELATION_N)?;
    let (ra, rb) = (average_ranks(&a), average_ranks(&b));
    let r = pearson_r(&ra, &rb).map_err(|_| StatsError::AllTied)?;
    Ok(correlation_from(CorrelationMethod::Spearman, r, a.len()))
}

/// Jarque-Bera test with population moments; `p = exp(-JB/2)` is the
/// chi-square(2) survival function.
pub fn normality_test(values: &[f64]) -> Result<NormalityResult, StatsError> {
    if values.len() < MIN_NORMALITY_N {
        return Err(StatsError::TooFewValues {
            need: MIN_NORMALITY_N,
            got: values.len(),
        });
    }
    check_finite(values)?;
    let n = values.len() as f64;
    let m = mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let statistic = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    let p = (-statistic / 2.0).exp();
    Ok(NormalityResult {
        is_normal: p > NORMALITY_ALPHA,
        statistic,
        p,
    })
}

/// Pearson when both sides pass the normality gate, otherwise Spearman.
pub fn auto_correlation(pairs: &PairedMeasurements) -> Result<CorrelationResult, StatsError> {
    let (a, b) = require_pairs(pairs, MIN_NORMALITY_N)?;
    let normal = |v: &[f64]| match normality_test(v) {
        Ok(t) => Ok(t.is_normal),
        Err(StatsError::DegenerateVariance) => Ok(false),
        Err(e) => Err(e),
    };
    if normal(&a)? && normal(&b)? {
        pearson(pairs)
    } else {
        spearman(pairs)
    }
}

pub fn bland_altman(pairs: &PairedMeasurements, z: f64) -> Result<BlandAltman, StatsError> {
    let (a, b) = require_pairs(pairs, 2)?;
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean_diff = mean(&diffs);
    let ss: f64 = diffs.iter().map(|d| (d - mean_diff) * (d - mean_diff)).sum();
    let sd_diff = (ss / (n - 1) as f64).sqrt();
    let loa_low = mean_diff - z * sd_diff;
    let loa_high = mean_diff + z * sd_diff;
    let within = diffs.iter().filter(|&&d| loa_low <= d && d <= loa_high).count();
    Ok(BlandAltman {
        mean_diff,
        sd_diff,
        loa_low,
        loa_high,
        z,
        pct_within: 100.0 * within as f64 / n as f64,
        n,
    })
}

/// Percentile `q` in `[0, 100]` of sorted data, linear interpolation between
/// order statistics at position `(n - 1) q / 100`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean (SD) for normal-looking data, else median (IQR).
pub fn summarize(values: &[f64]) -> Result<SummaryStats, StatsError> {
    let normal = match normality_test(values) {
        Ok(t) => t.is_normal,
        Err(StatsError::DegenerateVariance) => false,
        Err(e) => return Err(e),
    };
    if normal {
        let m = mean(values);
        let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
        return Ok(SummaryStats::MeanSd {
            center: m,
            sd: (ss / (values.len() - 1) as f64).sqrt(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryStats::MedianIqr {
        center: percentile(&sorted, 50.0),
        spread_low: percentile(&sorted, 25.0),
        spread_high: percentile(&sorted, 75.0),
    })
}

/// One row of a stratified table. Groups that cannot be correlated carry
/// `ns` and a reason instead of a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedRow {
    pub group: String,
    pub parameter: Parameter,
    pub n: usize,
    pub stars: Stars,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

/// Per-group correlation, ordered by group label. Groups of 3 to 7 pairs are
/// too small for the normality gate and use Spearman.
pub fn stratified_correlation(groups: &BTreeMap<String, PairedMeasurements>) -> Vec<StratifiedRow> {
    groups
        .iter()
        .map(|(group, pairs)| {
            let outcome = if pairs.len() >= MIN_NORMALITY_N {
                auto_correlation(pairs)
            } else {
                spearman(pairs)
            };
            let (stars, result, reason) = match outcome {
                Ok(c) => (c.stars, Some(c), None),
                Err(e) => (Stars::Ns, None, Some(e.code().to_string())),
            };
            StratifiedRow {
                group: group.clone(),
                parameter: pairs.parameter,
                n: pairs.len(),
                stars,
                result,
                reason,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanSummary {
    pub mean_diff: f64,
    pub sd: f64,
    pub loa: [f64; 2],
    pub pct_within: f64,
}

impl From<&BlandAltman> for BlandAltmanSummary {
    fn from(ba: &BlandAltman) -> Self {
        BlandAltmanSummary {
            mean_diff: ba.mean_diff,
            sd: ba.sd_diff,
            loa: [ba.loa_low, ba.loa_high],
            pct_within: ba.pct_within,
        }
    }
}

/// Correlation plus agreement for one parameter across two sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub parameter: Parameter,
    pub n: usize,
    pub method: CorrelationMethod,
    pub r: f64,
    pub p: f64,
    pub stars: Stars,
    pub bland_altman: BlandAltmanSummary,
    pub a_summary: SummaryStats,
    pub b_summary: SummaryStats,
}

pub fn agreement_report(pairs: &PairedMeasurements) -> Result<AgreementReport, StatsError> {
    let corr = auto_correlation(pairs)?;
    let ba = bland_altman(pairs, DEFAULT_LOA_Z)?;
    Ok(AgreementReport {
        parameter: pairs.parameter,
        n: pairs.len(),
        method: corr.method,
        r: corr.r,
        p: corr.p_value,
        stars: corr.stars,
        bland_altman: (&ba).into(),
        a_summary: summarize(&pairs.a_values())?,
        b_summary: summarize(&pairs.b_values())?,
    })
}

/// `<0.001` below one in a thousand, three decimals otherwise.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// CSV table with columns `parameter,a_summary,b_summary,r,p`.
pub fn agreement_table_csv(reports: &[AgreementReport]) -> String {
    let mut out = String::from("parameter,a_summary,b_summary,r,p\n");
    for r in reports {
        out.push_str(&format!(
            "{},\"{}\",\"{}\",{:.3},{}\n",
            r.parameter,
            r.a_summary,
            r.b_summary,
            r.r,
            format_p(r.p)
        ));
    }
    out
}

/// CSV for a stratified table: `group,parameter,n,method,r,p,stars`.
pub fn stratified_table_csv(rows: &[StratifiedRow]) -> String {
    let mut out = String::from("group,parameter,n,method,r,p,stars\n");
    for row in rows {
        let (method, r, p) = match &row.result {
            Some(c) => (c.method.to_string(), format!("{:.3}", c.r), format_p(c.p_value)),
            None => (row.reason.clone().unwrap_or_default(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.group, row.parameter, row.n, method, r, p, row.stars
        ));
    }
    out
}
