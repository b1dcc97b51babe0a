//! Synthetic single-lead ECG built from Gaussian bumps, with fiducials known
//! analytically. Onsets and offsets sit at the 3-sigma points of each bump.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::Condition;
use crate::intervals::{beat_intervals, BeatIntervals};
use crate::record::{BeatFiducials, EcgRecord, FiducialSet, SourceTag};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible targets: {0}")]
    InfeasibleTargets(String),
    #[error("invalid noise spec: {0}")]
    InvalidNoiseSpec(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    White,
    BaselineDrift,
    Mains,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// White noise only: 10 log10 of clean power over noise power.
    pub snr_db: f64,
    pub drift_hz: f64,
    pub mains_hz: f64,
    /// Sinusoid amplitude for drift and mains.
    pub amplitude_mv: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            snr_db: f64::INFINITY,
            drift_hz: 0.3,
            mains_hz: 50.0,
            amplitude_mv: 0.5,
        }
    }
}

impl NoiseSpec {
    pub fn white(snr_db: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::White,
            snr_db,
            ..Default::default()
        }
    }

    pub fn drift(hz: f64, amplitude_mv: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::BaselineDrift,
            drift_hz: hz,
            amplitude_mv,
            ..Default::default()
        }
    }

    pub fn mains(hz: f64, amplitude_mv: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Mains,
            mains_hz: hz,
            amplitude_mv,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub record_id: String,
    pub sampling_rate_hz: f64,
    pub duration_s: f64,
    pub heart_rate_bpm: f64,
    /// Each RR is drawn uniformly within this percentage of the nominal RR.
    pub rr_jitter_pct: f64,
    pub p_amp_mv: f64,
    pub q_amp_mv: f64,
    pub r_amp_mv: f64,
    pub s_amp_mv: f64,
    pub t_amp_mv: f64,
    /// P onset to P offset.
    pub p_width_ms: f64,
    /// T onset to T offset; `None` scales it to the ST-T span.
    pub t_width_ms: Option<f64>,
    pub target_pr_ms: f64,
    pub target_qrs_ms: f64,
    pub target_qt_ms: f64,
    pub include_p: bool,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            record_id: "synth".to_string(),
            sampling_rate_hz: 500.0,
            duration_s: 10.0,
            heart_rate_bpm: 70.0,
            rr_jitter_pct: 2.0,
            p_amp_mv: 0.15,
            q_amp_mv: -0.15,
            r_amp_mv: 1.0,
            s_amp_mv: -0.3,
            t_amp_mv: 0.3,
            p_width_ms: 96.0,
            t_width_ms: None,
            target_pr_ms: 160.0,
            target_qrs_ms: 90.0,
            target_qt_ms: 380.0,
            include_p: true,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }
}

/// Auto T width: the bump fills about 63% of the span from QRS offset to
/// T offset, leaving an isoelectric ST segment.
const AUTO_T_SPAN_FRACTION: f64 = 6.0 / 9.5;
const MIN_T_SIGMA_MS: f64 = 8.0;
const MAX_T_SIGMA_MS: f64 = 50.0;
/// Bumps are evaluated out to this many sigma.
const BUMP_EXTENT_SIGMA: f64 = 6.0;
/// Smallest gap between T offset and the next P onset (or QRS onset).
const MIN_TP_GAP_MS: f64 = 20.0;

impl SynthParams {
    fn t_sigma_ms(&self) -> f64 {
        match self.t_width_ms {
            Some(w) => w / 6.0,
            None => ((self.target_qt_ms - self.target_qrs_ms) * AUTO_T_SPAN_FRACTION / 6.0)
                .clamp(MIN_T_SIGMA_MS, MAX_T_SIGMA_MS),
        }
    }

    fn nominal_rr_ms(&self) -> f64 {
        60_000.0 / self.heart_rate_bpm
    }

    /// Time from P onset (or QRS onset without P) to R.
    fn lead_in_ms(&self) -> f64 {
        self.target_qrs_ms / 2.0 + if self.include_p { self.target_pr_ms } else { 0.0 }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        let infeasible = |m: String| Err(SynthError::InfeasibleTargets(m));
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz >= 100.0) {
            return bad(format!("sampling rate {} Hz", self.sampling_rate_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {} s", self.duration_s));
        }
        if !(self.heart_rate_bpm.is_finite() && (20.0..=250.0).contains(&self.heart_rate_bpm)) {
            return bad(format!("heart rate {} bpm", self.heart_rate_bpm));
        }
        if !(0.0..50.0).contains(&self.rr_jitter_pct) {
            return bad(format!("rr jitter {}%", self.rr_jitter_pct));
        }
        let amps = [self.p_amp_mv, self.q_amp_mv, self.r_amp_mv, self.s_amp_mv, self.t_amp_mv];
        if amps.iter().any(|a| !a.is_finite()) {
            return bad("amplitudes must be finite".into());
        }
        if !(80.0..=400.0).contains(&self.target_pr_ms) {
            return infeasible(format!("pr {} ms outside [80, 400]", self.target_pr_ms));
        }
        if !(40.0..=200.0).contains(&self.target_qrs_ms) {
            return infeasible(format!("qrs {} ms outside [40, 200]", self.target_qrs_ms));
        }
        if !(200.0..=700.0).contains(&self.target_qt_ms) {
            return infeasible(format!("qt {} ms outside [200, 700]", self.target_qt_ms));
        }
        if self.include_p && !(self.p_width_ms > 0.0 && self.p_width_ms < self.target_pr_ms) {
            return infeasible(format!(
                "p width {} ms must be positive and shorter than pr {} ms",
                self.p_width_ms, self.target_pr_ms
            ));
        }
        if let Some(w) = self.t_width_ms {
            if w.is_nan() || w <= 0.0 {
                return bad(format!("t width {w} ms"));
            }
        }
        let st = self.target_qt_ms - self.target_qrs_ms;
        if 6.0 * self.t_sigma_ms() > st {
            return infeasible(format!(
                "t wave of {:.0} ms does not fit between qrs offset and t offset ({st:.0} ms)",
                6.0 * self.t_sigma_ms()
            ));
        }
        // T offset of one beat must precede the next beat's first wave even
        // at the shortest jittered RR.
        let min_rr = self.nominal_rr_ms() * (1.0 - self.rr_jitter_pct / 100.0);
        let after_r = self.target_qt_ms - self.target_qrs_ms / 2.0;
        if after_r + self.lead_in_ms() + MIN_TP_GAP_MS > min_rr {
            return infeasible(format!(
                "beat spans {:.0} ms but the shortest RR is {min_rr:.0} ms",
                after_r + self.lead_in_ms() + MIN_TP_GAP_MS
            ));
        }
        Ok(())
    }
}

/// Analytic fiducials and the intervals they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fiducials: FiducialSet,
    pub per_beat: Vec<BeatIntervals>,
}

struct Bump {
    centre_s: f64,
    sigma_s: f64,
    amp: f64,
}

fn add_bump(x: &mut [f64], fs: f64, b: &Bump) {
    if b.amp == 0.0 {
        return;
    }
    let lo = ((b.centre_s - BUMP_EXTENT_SIGMA * b.sigma_s) * fs).floor().max(0.0) as usize;
    let hi = (((b.centre_s + BUMP_EXTENT_SIGMA * b.sigma_s) * fs).ceil() as usize).min(x.len().saturating_sub(1));
    for (i, v) in x.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let z = (i as f64 / fs - b.centre_s) / b.sigma_s;
        *v += b.amp * (-0.5 * z * z).exp();
    }
}

fn to_index(t_s: f64, fs: f64) -> usize {
    (t_s * fs).round() as usize
}

/// Builds a record and its ground truth. Beats are placed only where every
/// wave fits inside the record.
pub fn generate(params: &SynthParams) -> Result<(EcgRecord, GroundTruth), SynthError> {
    params.validate()?;
    let fs = params.sampling_rate_hz;
    let n = (params.duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut x = vec![0.0; n];

    let ms = |v: f64| v / 1000.0;
    let qrs = ms(params.target_qrs_ms);
    let qrs_sigma = qrs / 12.0;
    let p_sigma = ms(params.p_width_ms) / 6.0;
    let t_sigma = ms(params.t_sigma_ms());
    let rr0 = ms(params.nominal_rr_ms());
    let lead_in = ms(params.lead_in_ms());
    let tail = ms(params.target_qt_ms) - qrs / 2.0;
    let jitter = params.rr_jitter_pct / 100.0;
    let last = (n - 1) as f64 / fs;

    let mut beats = Vec::new();
    let mut r = (0.5 * rr0).max(lead_in + ms(MIN_TP_GAP_MS));
    while r + tail <= last {
        // R sits on a sample so QRS-relative fiducials quantize from it
        let r_s = (r * fs).round() / fs;
        let qrs_on = r_s - qrs / 2.0;
        let t_off = qrs_on + ms(params.target_qt_ms);
        let t_centre = t_off - 3.0 * t_sigma;

        let mut bumps = vec![
            Bump { centre_s: r_s - qrs / 4.0, sigma_s: qrs_sigma, amp: params.q_amp_mv },
            Bump { centre_s: r_s, sigma_s: qrs_sigma, amp: params.r_amp_mv },
            Bump { centre_s: r_s + qrs / 4.0, sigma_s: qrs_sigma, amp: params.s_amp_mv },
            Bump { centre_s: t_centre, sigma_s: t_sigma, amp: params.t_amp_mv },
        ];
        let mut beat = BeatFiducials {
            qrs_onset: Some(to_index(qrs_on, fs)),
            r_peak: to_index(r_s, fs),
            qrs_offset: Some(to_index(r_s + qrs / 2.0, fs)),
            t_peak: Some(to_index(t_centre, fs)),
            t_offset: Some(to_index(t_off, fs)),
            ..Default::default()
        };
        if params.include_p {
            let p_on = qrs_on - ms(params.target_pr_ms);
            let p_centre = p_on + 3.0 * p_sigma;
            bumps.push(Bump { centre_s: p_centre, sigma_s: p_sigma, amp: params.p_amp_mv });
            beat.p_onset = Some(to_index(p_on, fs));
            beat.p_peak = Some(to_index(p_centre, fs));
            beat.p_offset = Some(to_index(p_on + 6.0 * p_sigma, fs));
        }
        for b in &bumps {
            add_bump(&mut x, fs, b);
        }
        beats.push(beat);
        r += rr0 * (1.0 + jitter * rng.random_range(-1.0..=1.0));
    }
    if beats.is_empty() {
        return Err(SynthError::InfeasibleTargets(format!(
            "no complete beat fits in {} s",
            params.duration_s
        )));
    }

    let fiducials = FiducialSet::new(beats);
    debug_assert!(fiducials.validate(n, fs).is_ok());
    let per_beat = beat_intervals(&fiducials, fs);
    let record = EcgRecord::new(&params.record_id, fs, x, "II", SourceTag::Synthetic)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    let record = add_noise(&record, &params.noise, params.seed ^ NOISE_SEED_SALT)?;
    Ok((record, GroundTruth { fiducials, per_beat }))
}

const NOISE_SEED_SALT: u64 = 0x6e6f_6973_6500_0001;

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Adds noise to a copy of the record. Length and rate are unchanged.
pub fn add_noise(record: &EcgRecord, spec: &NoiseSpec, seed: u64) -> Result<EcgRecord, SynthError> {
    let fs = record.sampling_rate_hz;
    let nyquist = fs / 2.0;
    let sinusoid = |hz: f64, name: &str| -> Result<EcgRecord, SynthError> {
        if !(hz > 0.0 && hz < nyquist) {
            return Err(SynthError::InvalidNoiseSpec(format!("{name} {hz} Hz outside (0, {nyquist})")));
        }
        if !spec.amplitude_mv.is_finite() {
            return Err(SynthError::InvalidNoiseSpec("amplitude must be finite".into()));
        }
        let w = 2.0 * std::f64::consts::PI * hz / fs;
        let samples = record
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| v + spec.amplitude_mv * (w * i as f64).sin())
            .collect();
        Ok(record.with_samples(samples))
    };
    match spec.kind {
        NoiseKind::None => Ok(record.clone()),
        NoiseKind::White => {
            if !spec.snr_db.is_finite() {
                return Err(SynthError::InvalidNoiseSpec(format!("snr {} dB", spec.snr_db)));
            }
            let power = mean_square(&record.samples);
            let sd = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let mut noise: Vec<f64> = (0..record.len()).map(|_| normal.sample(&mut rng)).collect();
            // rescale so the realized SNR is exact
            let scale = if power > 0.0 { sd / mean_square(&noise).sqrt() } else { 0.0 };
            noise.iter_mut().for_each(|v| *v *= scale);
            let samples = record.samples.iter().zip(&noise).map(|(a, b)| a + b).collect();
            Ok(record.with_samples(samples))
        }
        NoiseKind::BaselineDrift => sinusoid(spec.drift_hz, "drift"),
        NoiseKind::Mains => sinusoid(spec.mains_hz, "mains"),
    }
}

/// Zero-mean Gaussian noise with standard deviation `sd_mv` and no ECG.
pub fn noise_record(record_id: &str, fs: f64, duration_s: f64, sd_mv: f64, seed: u64) -> EcgRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd_mv).expect("finite sd");
    let n = (duration_s * fs).round() as usize;
    let samples = (0..n).map(|_| normal.sample(&mut rng)).collect();
    EcgRecord {
        record_id: record_id.to_string(),
        sampling_rate_hz: fs,
        samples,
        lead_label: "II".to_string(),
        source_tag: SourceTag::Synthetic,
    }
}

/// SplitMix64 finalizer over (seed, index): per-record seeds that do not
/// depend on generation order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What a cohort plants. `Avbi` and `Lqt` split records into two classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelSpec {
    /// No labels; intervals vary over physiologic ranges.
    Normal,
    Avbi { normal_pr_ms: (f64, f64), block_pr_ms: (f64, f64) },
    Lqt { normal_qtc_ms: (f64, f64), long_qtc_ms: (f64, f64) },
}

impl LabelSpec {
    pub fn avbi() -> Self {
        LabelSpec::Avbi {
            normal_pr_ms: (120.0, 180.0),
            block_pr_ms: (210.0, 320.0),
        }
    }

    pub fn lqt() -> Self {
        LabelSpec::Lqt {
            normal_qtc_ms: (380.0, 430.0),
            long_qtc_ms: (470.0, 520.0),
        }
    }

    pub fn condition(&self) -> Option<Condition> {
        match self {
            LabelSpec::Normal => None,
            LabelSpec::Avbi { .. } => Some(Condition::Avbi),
            LabelSpec::Lqt { .. } => Some(Condition::Lqt),
        }
    }

    /// Heart-rate range that keeps every planted beat feasible.
    pub fn default_heart_rate(&self) -> (f64, f64) {
        match self {
            LabelSpec::Normal => (50.0, 100.0),
            LabelSpec::Avbi { .. } | LabelSpec::Lqt { .. } => (55.0, 75.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub labels: LabelSpec,
    pub heart_rate_bpm: (f64, f64),
    pub pr_ms: (f64, f64),
    pub qrs_ms: (f64, f64),
    /// QT follows from a QTc drawn here and the nominal RR.
    pub qtc_ms: (f64, f64),
    pub duration_s: f64,
    pub sampling_rate_hz: f64,
    pub noise: NoiseSpec,
    pub id_prefix: String,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec::new(LabelSpec::Normal)
    }
}

impl CohortSpec {
    pub fn new(labels: LabelSpec) -> Self {
        CohortSpec {
            labels,
            heart_rate_bpm: labels.default_heart_rate(),
            pr_ms: (130.0, 200.0),
            qrs_ms: (70.0, 110.0),
            qtc_ms: (380.0, 430.0),
            duration_s: 30.0,
            sampling_rate_hz: 500.0,
            noise: NoiseSpec::default(),
            id_prefix: "syn".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    pub record: EcgRecord,
    pub truth: GroundTruth,
    pub params: SynthParams,
    pub condition: Option<Condition>,
    /// Planted class; `None` for unlabeled cohorts.
    pub label: Option<bool>,
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Parameters for member `index`; positives are the odd indices.
pub fn cohort_params(spec: &CohortSpec, index: usize, seed: u64) -> (SynthParams, Option<bool>) {
    let member_seed = derive_seed(seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
    let hr = draw(&mut rng, spec.heart_rate_bpm);
    let qrs = draw(&mut rng, spec.qrs_ms);
    let rr_s = 60.0 / hr;
    let positive = index % 2 == 1;
    let (pr, qtc, label) = match spec.labels {
        LabelSpec::Normal => (draw(&mut rng, spec.pr_ms), draw(&mut rng, spec.qtc_ms), None),
        LabelSpec::Avbi { normal_pr_ms, block_pr_ms } => {
            let range = if positive { block_pr_ms } else { normal_pr_ms };
            (draw(&mut rng, range), draw(&mut rng, spec.qtc_ms), Some(positive))
        }
        LabelSpec::Lqt { normal_qtc_ms, long_qtc_ms } => {
            let range = if positive { long_qtc_ms } else { normal_qtc_ms };
            (draw(&mut rng, spec.pr_ms), draw(&mut rng, range), Some(positive))
        }
    };
    let params = SynthParams {
        record_id: format!("{}{:04}", spec.id_prefix, index),
        sampling_rate_hz: spec.sampling_rate_hz,
        duration_s: spec.duration_s,
        heart_rate_bpm: hr,
        target_pr_ms: pr,
        target_qrs_ms: qrs,
        target_qt_ms: qtc * rr_s.sqrt(),
        noise: spec.noise,
        seed: member_seed,
        ..Default::default()
    };
    (params, label)
}

/// `n` records with planted labels (alternating classes for labeled specs).
pub fn generate_cohort(n: usize, spec: &CohortSpec, seed: u64) -> Result<Vec<CohortMember>, SynthError> {
    (0..n)
        .map(|i| {
            let (params, label) = cohort_params(spec, i, seed);
            let (record, truth) = generate(&params)?;
            Ok(CohortMember {
                record,
                truth,
                params,
                condition: spec.labels.condition(),
                label,
            })
        })
        .collect()
}

/// One-to-one pairing of true and detected beats by R peak, nearest first,
/// within `tolerance` samples. Returns `(truth_index, detected_index)`
/// sorted by truth index.
pub fn match_beats(truth: &FiducialSet, detected: &FiducialSet, tolerance: usize) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (i, t) in truth.beats.iter().enumerate() {
        let lo = detected.beats.partition_point(|d| d.r_peak + tolerance < t.r_peak);
        for (j, d) in detected.beats.iter().enumerate().skip(lo) {
            if d.r_peak > t.r_peak + tolerance {
                break;
            }
            candidates.push((t.r_peak.abs_diff(d.r_peak), i, j));
        }
    }
    candidates.sort_unstable();
    let mut used_t = vec![false; truth.len()];
    let mut used_d = vec![false; detected.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_t[i] && !used_d[j] {
            used_t[i] = true;
            used_d[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}
