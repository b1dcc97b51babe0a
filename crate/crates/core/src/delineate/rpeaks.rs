//! R-peak detection on a squared-derivative energy envelope.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use super::resample::resample_internal;
use super::DelineatorConfig;
use crate::record::EcgRecord;

/// Moving-integration window for the energy envelope.
const INTEGRATION_MS: f64 = 120.0;
/// Half-width of the window used for the running envelope peak.
const RUNNING_PEAK_HALF_MS: f64 = 1000.0;
/// Candidates must exceed this fraction of the running envelope peak.
const ENVELOPE_FRACTION: f64 = 0.3;

/// Five-point derivative, clamped at the edges.
fn derivative(x: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let at = |i: isize| x[i.clamp(0, n - 1) as usize];
    (0..n)
        .map(|i| (2.0 * at(i + 1) + at(i + 2) - at(i - 2) - 2.0 * at(i - 1)) / 8.0)
        .collect()
}

/// Centered moving average of odd `width`, shrinking at the edges.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let half = width / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Maximum over `[i - half, i + half]` for every `i`.
pub(crate) fn sliding_max(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while deque.back().is_some_and(|&j| x[j] <= x[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&j| j + half < i) {
            deque.pop_front();
        }
        out.push(x[*deque.front().unwrap()]);
    }
    out
}

/// Energy envelope used for detection.
pub(crate) fn energy_envelope(x: &[f64], fs: f64) -> Vec<f64> {
    let squared: Vec<f64> = derivative(x).into_iter().map(|d| d * d).collect();
    let width = ((INTEGRATION_MS * fs / 1000.0).round() as usize) | 1;
    moving_average(&squared, width)
}

/// Greedy non-maximum suppression: strongest first, earlier index on ties.
pub(crate) fn suppress(candidates: &[(usize, f64)], min_gap: usize) -> Vec<usize> {
    let mut order: Vec<&(usize, f64)> = candidates.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: BTreeSet<usize> = BTreeSet::new();
    for &(i, _) in order {
        let clash_before = kept.range(..=i).next_back().is_some_and(|&k| i - k < min_gap);
        let clash_after = kept.range(i..).next().is_some_and(|&k| k - i < min_gap);
        if !clash_before && !clash_after {
            kept.insert(i);
        }
    }
    kept.into_iter().collect()
}

/// Index of the largest `|x|` in `[lo, hi]`, earliest on ties.
pub(crate) fn abs_argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if x[i].abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Detects R peaks on a signal already at `fs` Hz. Returns indices on the
/// same grid, strictly increasing and at least `refractory_ms` apart.
pub fn detect_on_signal(x: &[f64], fs: f64, cfg: &DelineatorConfig) -> Vec<usize> {
    let n = x.len();
    if n < 5 {
        return Vec::new();
    }
    let env = energy_envelope(x, fs);
    let half = (RUNNING_PEAK_HALF_MS * fs / 1000.0).round() as usize;
    let running = sliding_max(&env, half);

    let mut candidates = Vec::new();
    for i in 1..n - 1 {
        let e = env[i];
        if e > 0.0 && e > env[i - 1] && e >= env[i + 1] && e >= ENVELOPE_FRACTION * running[i] {
            candidates.push((i, e));
        }
    }
    let refractory = (cfg.refractory_ms * fs / 1000.0).round() as usize;
    let coarse = suppress(&candidates, refractory.max(1));

    let search = (cfg.qrs_search_ms / 2.0 * fs / 1000.0).round() as usize;
    let refined: Vec<(usize, f64)> = coarse
        .into_iter()
        .map(|c| {
            let p = abs_argmax(x, c.saturating_sub(search), (c + search).min(n - 1));
            (p, x[p].abs())
        })
        .collect();
    suppress(&refined, refractory.max(1))
}

/// Detects R peaks in a preprocessed record; indices are on the record's
/// own sampling grid.
pub fn detect_r_peaks(record: &EcgRecord, cfg: &DelineatorConfig) -> Vec<usize> {
    let (internal, map) = resample_internal(record, cfg.internal_rate_hz);
    let peaks = detect_on_signal(&internal.samples, cfg.internal_rate_hz, cfg);
    if map.is_identity() {
        return peaks;
    }
    let n = record.len();
    let refractory = record.ms_to_samples(cfg.refractory_ms).round() as usize;
    let native: Vec<(usize, f64)> = peaks
        .into_iter()
        .map(|j| {
            let i = map.to_native(j);
            let p = abs_argmax(&record.samples, i.saturating_sub(1), (i + 1).min(n - 1));
            (p, record.samples[p].abs())
        })
        .collect();
    suppress(&native, refractory.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_max_matches_brute_force() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 7919) % 97) as f64).collect();
        for half in [0, 1, 5, 30, 250] {
            let fast = sliding_max(&x, half);
            for (i, got) in fast.iter().enumerate() {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(x.len() - 1);
                let brute = x[lo..=hi].iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(*got, brute);
            }
        }
    }

    #[test]
    fn suppression_prefers_strongest_then_earliest() {
        let c = vec![(10, 1.0), (15, 2.0), (30, 2.0), (31, 2.0), (100, 0.5)];
        assert_eq!(suppress(&c, 10), vec![15, 30, 100]);
    }

    #[test]
    fn flat_signal_has_no_peaks() {
        let cfg = DelineatorConfig::default();
        assert!(detect_on_signal(&vec![0.0; 5000], 500.0, &cfg).is_empty());
    }
}
