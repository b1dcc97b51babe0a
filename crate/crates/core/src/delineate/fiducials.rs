//! Per-beat onset/peak/offset delineation from wavelet modulus maxima.
//!
//! The QRS is bracketed in a small-scale band by the opposite-sign modulus
//! maxima around R (plus at most one extra lobe on either side for Q and
//! S). P and T peaks are the zero crossings between the dominant pair of
//! opposite-sign maxima in the widest band. Every onset and offset is the
//! point where the band modulus decays below a fixed fraction of the
//! bounding maximum.

use super::resample::resample_internal;
use super::rpeaks::abs_argmax;
use super::wavelet::{support, wavelet_bands};
use super::{DelineateError, DelineatorConfig};
use crate::record::{BeatFiducials, EcgRecord, FiducialSet};

/// Fraction of the band maximum a QRS modulus maximum needs to count.
const QRS_SIGNIFICANCE: f64 = 0.06;
/// Largest gap between chained QRS lobes.
const QRS_CHAIN_GAP_MS: f64 = 40.0;
/// Extra lobes accepted beyond the R pair on each side (Q and S).
const QRS_EXTRA_LOBES: usize = 1;
/// P and T lobes must reach this fraction of the QRS modulus in the same band.
const WAVE_SIGNIFICANCE: f64 = 0.02;
/// The T search starts this long after QRS offset.
const T_DELAY_MS: f64 = 40.0;
/// The P search ends this long before QRS onset.
const P_GUARD_MS: f64 = 20.0;
/// T peak search stops at this fraction of the following RR interval.
const T_PEAK_RR_FRACTION: f64 = 0.6;
/// T offset search stops at this fraction of the following RR interval.
const T_END_RR_FRACTION: f64 = 0.75;
/// Without a delineated preceding T, the P search starts here.
const P_START_RR_FRACTION: f64 = 0.5;

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Local maxima of `|w|` inside `[lo, hi]`.
fn modulus_maxima(w: &[f64], lo: usize, hi: usize) -> Vec<usize> {
    let lo = lo.max(1);
    let hi = hi.min(w.len() - 2);
    (lo..=hi)
        .filter(|&i| {
            let m = w[i].abs();
            m > 0.0 && m >= w[i - 1].abs() && m > w[i + 1].abs()
        })
        .collect()
}

/// Walks from `start` in `step` direction until `|w|` falls to `threshold`.
/// Returns the first index at or below it, or `None` if `limit` is reached first.
fn decay_point(w: &[f64], start: usize, threshold: f64, limit: usize, forward: bool) -> Option<usize> {
    let mut i = start;
    loop {
        if w[i].abs() <= threshold {
            return Some(i);
        }
        if i == limit {
            return None;
        }
        i = if forward { i + 1 } else { i - 1 };
    }
}

/// First sample after `a` (up to `b`) whose sign differs from `w[a]`.
fn zero_crossing(w: &[f64], a: usize, b: usize) -> usize {
    let s = sign(w[a]);
    (a + 1..=b).find(|&i| sign(w[i]) != s).unwrap_or(b)
}

/// A pair of adjacent opposite-sign lobes.
#[derive(Debug, Clone, Copy)]
struct LobePair {
    first: usize,
    second: usize,
    strength: f64,
}

/// Dominant opposite-sign lobe pair in `[lo, hi]` whose lobes both reach
/// `floor`. Runs of same-sign maxima collapse to their largest member.
fn dominant_pair(w: &[f64], lo: usize, hi: usize, floor: f64) -> Option<LobePair> {
    if hi <= lo + 2 {
        return None;
    }
    let mut runs: Vec<usize> = Vec::new();
    for m in modulus_maxima(w, lo, hi) {
        if w[m].abs() < floor {
            continue;
        }
        match runs.last_mut() {
            Some(last) if sign(w[*last]) == sign(w[m]) => {
                if w[m].abs() > w[*last].abs() {
                    *last = m;
                }
            }
            _ => runs.push(m),
        }
    }
    let mut best: Option<LobePair> = None;
    for pair in runs.windows(2) {
        let strength = w[pair[0]].abs() + w[pair[1]].abs();
        if best.is_none_or(|b| strength > b.strength) {
            best = Some(LobePair {
                first: pair[0],
                second: pair[1],
                strength,
            });
        }
    }
    best
}

struct QrsBounds {
    onset: Option<usize>,
    offset: Option<usize>,
}

fn delineate_qrs(w: &[f64], r: usize, lo: usize, hi: usize, fraction: f64, fs: f64) -> QrsBounds {
    let none = QrsBounds {
        onset: None,
        offset: None,
    };
    let maxima = modulus_maxima(w, lo, hi);
    let peak = maxima.iter().map(|&m| w[m].abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return none;
    }
    let significant: Vec<usize> = maxima
        .into_iter()
        .filter(|&m| w[m].abs() >= QRS_SIGNIFICANCE * peak)
        .collect();
    let Some(pre_idx) = significant.iter().rposition(|&m| m < r) else {
        return none;
    };
    let Some(post_idx) = significant.iter().position(|&m| m >= r) else {
        return none;
    };
    let gap = (QRS_CHAIN_GAP_MS * fs / 1000.0).round() as usize;

    let mut first = significant[pre_idx];
    let mut extra = 0;
    for &m in significant[..pre_idx].iter().rev() {
        if first - m > gap || extra == QRS_EXTRA_LOBES {
            break;
        }
        if sign(w[m]) != sign(w[first]) {
            first = m;
            extra += 1;
        }
    }
    let mut last = significant[post_idx];
    let mut extra = 0;
    for &m in &significant[post_idx + 1..] {
        if m - last > gap || extra == QRS_EXTRA_LOBES {
            break;
        }
        if sign(w[m]) != sign(w[last]) {
            last = m;
            extra += 1;
        }
    }
    QrsBounds {
        onset: decay_point(w, first, fraction * w[first].abs(), lo, false),
        offset: decay_point(w, last, fraction * w[last].abs(), hi, true),
    }
}

/// One delineated wave: peak plus optional onset/offset.
struct Wave {
    onset: Option<usize>,
    peak: usize,
    offset: Option<usize>,
}

/// Finds a P or T wave whose lobes lie in `[lo, hi]`; onset and offset
/// searches are confined to `[bound_lo, bound_hi]`.
#[allow(clippy::too_many_arguments)]
fn delineate_wave(
    w: &[f64],
    lo: usize,
    hi: usize,
    bound_lo: usize,
    bound_hi: usize,
    floor: f64,
    fraction: f64,
) -> Option<Wave> {
    let pair = dominant_pair(w, lo, hi, floor)?;
    let peak = zero_crossing(w, pair.first, pair.second);
    Some(Wave {
        onset: decay_point(w, pair.first, fraction * w[pair.first].abs(), bound_lo, false),
        peak,
        offset: decay_point(w, pair.second, fraction * w[pair.second].abs(), bound_hi, true),
    })
}

/// Drops optional fields until the present ones are strictly increasing.
fn enforce_order(mut b: BeatFiducials) -> BeatFiducials {
    loop {
        let fields = b.ordered();
        let present: Vec<(usize, usize)> = fields
            .iter()
            .enumerate()
            .filter_map(|(slot, v)| v.map(|ix| (slot, ix)))
            .collect();
        let Some(bad) = present.windows(2).find(|p| p[0].1 >= p[1].1) else {
            return b;
        };
        // Remove whichever of the offending pair is not the R peak,
        // preferring the one further from R.
        let r_slot = 4;
        let (a, c) = (bad[0].0, bad[1].0);
        let victim = if a == r_slot {
            c
        } else if c == r_slot || a.abs_diff(r_slot) >= c.abs_diff(r_slot) {
            a
        } else {
            c
        };
        match victim {
            0 => b.p_onset = None,
            1 => {
                b.p_onset = None;
                b.p_peak = None;
                b.p_offset = None;
            }
            2 => b.p_offset = None,
            3 => b.qrs_onset = None,
            5 => b.qrs_offset = None,
            6 => {
                b.t_peak = None;
                b.t_offset = None;
            }
            7 => b.t_offset = None,
            _ => unreachable!(),
        }
    }
}

/// Delineates beats on a signal at the internal rate. `r_peaks` must be
/// strictly increasing indices on the same grid. Beats whose search windows
/// do not fit inside the record are dropped.
pub fn delineate_signal(
    x: &[f64],
    r_peaks: &[usize],
    cfg: &DelineatorConfig,
) -> Result<Vec<BeatFiducials>, DelineateError> {
    if r_peaks.is_empty() {
        return Err(DelineateError::EmptyBeats);
    }
    let fs = cfg.internal_rate_hz;
    let ms = |v: f64| (v * fs / 1000.0).round() as usize;
    let bands = wavelet_bands(x, &cfg.scales)?;
    let wq = bands.band(cfg.qrs_scale()).expect("configured scale");
    let wpt = bands.band(cfg.wave_scale()).expect("configured scale");
    let n = x.len();
    let guard = support(cfg.wave_scale()) / 2 + 1;
    if n <= 2 * guard + 2 {
        return Err(DelineateError::SignalTooShort {
            len: n,
            need: 2 * guard + 3,
        });
    }
    let (min_ix, max_ix) = (guard, n - 1 - guard);
    let fraction = cfg.modulus_threshold_fraction;
    let qrs_half = ms(cfg.qrs_search_ms);

    let mut beats = Vec::with_capacity(r_peaks.len());
    let mut prev_t_offset: Option<usize> = None;
    for (i, &r) in r_peaks.iter().enumerate() {
        let prev = i.checked_sub(1).map(|k| r_peaks[k]);
        let next = r_peaks.get(i + 1).copied();

        let mut qlo = r.saturating_sub(qrs_half);
        let mut qhi = r + qrs_half;
        if let Some(p) = prev {
            qlo = qlo.max(p + (r - p) / 2 + 1);
        }
        if let Some(nx) = next {
            qhi = qhi.min(r + (nx - r) / 2 - 1);
        }
        if qlo < min_ix || qhi > max_ix || r < min_ix || r > max_ix {
            prev_t_offset = None;
            continue;
        }

        let qrs = delineate_qrs(wq, r, qlo, qhi, fraction, fs);
        let qrs_ref = modulus_maxima(wpt, qlo, qhi)
            .iter()
            .map(|&m| wpt[m].abs())
            .fold(0.0, f64::max);
        let floor = WAVE_SIGNIFICANCE * qrs_ref;

        // T wave window
        let t_lo = qrs.offset.unwrap_or(r + qrs_half / 2) + ms(T_DELAY_MS);
        let (t_hi, t_end) = match next {
            Some(nx) => {
                let rr = (nx - r) as f64;
                (
                    (r + (T_PEAK_RR_FRACTION * rr) as usize).min(t_lo + ms(cfg.t_search_ms)),
                    r + (T_END_RR_FRACTION * rr) as usize,
                )
            }
            None => {
                let hi = t_lo + ms(cfg.t_search_ms);
                (hi, hi + ms(cfg.t_search_ms) / 2)
            }
        };
        if next.is_none() && t_hi > max_ix {
            continue;
        }
        let t_end = t_end.min(max_ix);

        // P wave window
        let p_hi = qrs.onset.unwrap_or(qlo).saturating_sub(ms(P_GUARD_MS));
        let p_bound = match prev {
            Some(p) => prev_t_offset
                .unwrap_or(p + (P_START_RR_FRACTION * (r - p) as f64) as usize)
                .max(p + 1),
            None => {
                let start = qrs.onset.unwrap_or(qlo).checked_sub(ms(cfg.p_search_ms));
                match start {
                    Some(s) if s >= min_ix => min_ix,
                    _ => continue,
                }
            }
        };
        let p_lo = qrs
            .onset
            .unwrap_or(qlo)
            .saturating_sub(ms(cfg.p_search_ms))
            .max(p_bound);

        let mut beat = BeatFiducials::at_r(r);
        beat.qrs_onset = qrs.onset;
        beat.qrs_offset = qrs.offset;
        if floor > 0.0 {
            if p_hi > p_lo {
                if let Some(p) = delineate_wave(wpt, p_lo, p_hi, p_bound, p_hi, floor, fraction) {
                    beat.p_onset = p.onset;
                    beat.p_peak = Some(p.peak);
                    beat.p_offset = p.offset;
                }
            }
            if t_hi > t_lo {
                if let Some(t) = delineate_wave(wpt, t_lo, t_hi, t_lo, t_end, floor, fraction) {
                    beat.t_peak = Some(t.peak);
                    beat.t_offset = t.offset;
                }
            }
        }
        let beat = enforce_order(beat);
        prev_t_offset = beat.t_offset;
        beats.push(beat);
    }
    Ok(beats)
}

/// Delineates every beat of a preprocessed record. `r_peaks` are indices
/// on the record's grid; the returned set is on the same grid.
pub fn delineate(
    record: &EcgRecord,
    r_peaks: &[usize],
    cfg: &DelineatorConfig,
) -> Result<FiducialSet, DelineateError> {
    cfg.validate()?;
    if r_peaks.is_empty() {
        return Err(DelineateError::EmptyBeats);
    }
    let (internal, map) = resample_internal(record, cfg.internal_rate_hz);
    let x = &internal.samples;
    let n = x.len();

    // Move each R onto the internal grid and re-centre on the local extremum.
    let mut internal_r: Vec<usize> = r_peaks
        .iter()
        .map(|&i| {
            let j = map.to_internal(i);
            if map.is_identity() {
                j
            } else {
                abs_argmax(x, j.saturating_sub(2), (j + 2).min(n - 1))
            }
        })
        .collect();
    internal_r.dedup();

    let beats = delineate_signal(x, &internal_r, cfg)?;
    let beats = beats
        .into_iter()
        .map(|b| {
            let mut out = b.map_indices(|j| map.to_native(j));
            // restore the caller's exact R index
            if let Some(&orig) = r_peaks.iter().min_by_key(|&&i| i.abs_diff(out.r_peak)) {
                if orig.abs_diff(out.r_peak) <= 2 {
                    out.r_peak = orig;
                }
            }
            enforce_order(out)
        })
        .collect();
    let set = FiducialSet::new(beats);
    debug_assert!(set.validate(record.len(), record.sampling_rate_hz).is_ok());
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_point_walks_both_ways() {
        let w = [0.0, 0.1, 0.5, 1.0, 0.6, 0.2, 0.05];
        assert_eq!(decay_point(&w, 3, 0.25, 0, false), Some(1));
        assert_eq!(decay_point(&w, 3, 0.25, 6, true), Some(5));
        assert_eq!(decay_point(&w, 3, 0.25, 4, true), None);
    }

    #[test]
    fn dominant_pair_prefers_stronger_then_earlier() {
        let w = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 2.0, 0.0, -2.0, 0.0];
        let p = dominant_pair(&w, 0, 12, 0.1).unwrap();
        assert_eq!((p.first, p.second), (9, 11));
        let w = [0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0];
        let p = dominant_pair(&w, 0, 10, 0.1).unwrap();
        // (1,3), (3,7), (7,9) tie: earliest wins
        assert_eq!((p.first, p.second), (1, 3));
    }

    #[test]
    fn ordering_repair_drops_outer_fields() {
        let mut b = BeatFiducials::at_r(100);
        b.qrs_onset = Some(90);
        b.p_offset = Some(95);
        b.p_peak = Some(80);
        let fixed = enforce_order(b);
        assert_eq!(fixed.p_offset, None);
        assert_eq!(fixed.p_peak, Some(80));
        assert_eq!(fixed.qrs_onset, Some(90));
    }

    #[test]
    fn empty_beats_rejected() {
        let cfg = DelineatorConfig::default();
        assert!(matches!(
            delineate_signal(&vec![0.0; 1000], &[], &cfg),
            Err(DelineateError::EmptyBeats)
        ));
    }
}
