//! Linear-interpolation resampling to the delineator's internal rate and
//! the index maps between the two grids.

use crate::record::EcgRecord;

/// Maps indices between a record's native grid and the internal grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMap {
    pub native_hz: f64,
    pub internal_hz: f64,
    pub native_len: usize,
    pub internal_len: usize,
}

impl RateMap {
    pub fn new(native_hz: f64, internal_hz: f64, native_len: usize) -> Self {
        let internal_len = if native_len == 0 {
            0
        } else if native_hz == internal_hz {
            native_len
        } else {
            // last internal sample never passes the last native one, so
            // the endpoints coincide when the ratio is rational
            ((native_len - 1) as f64 * internal_hz / native_hz + 1e-9).floor() as usize + 1
        };
        RateMap {
            native_hz,
            internal_hz,
            native_len,
            internal_len,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.native_hz == self.internal_hz
    }

    /// Nearest internal index for a native index.
    pub fn to_internal(&self, native: usize) -> usize {
        if self.is_identity() {
            return native;
        }
        let j = (native as f64 * self.internal_hz / self.native_hz).round() as usize;
        j.min(self.internal_len.saturating_sub(1))
    }

    /// Nearest native index for an internal index.
    pub fn to_native(&self, internal: usize) -> usize {
        if self.is_identity() {
            return internal;
        }
        let i = (internal as f64 * self.native_hz / self.internal_hz).round() as usize;
        i.min(self.native_len.saturating_sub(1))
    }
}

/// Linear-interpolation resample of `samples` from `native_hz` to `internal_hz`.
pub fn resample_linear(samples: &[f64], native_hz: f64, internal_hz: f64) -> Vec<f64> {
    let map = RateMap::new(native_hz, internal_hz, samples.len());
    if map.is_identity() {
        return samples.to_vec();
    }
    let last = samples.len() - 1;
    (0..map.internal_len)
        .map(|j| {
            let t = j as f64 * native_hz / internal_hz;
            let i = (t.floor() as usize).min(last);
            let frac = t - i as f64;
            if i == last || frac == 0.0 {
                samples[i]
            } else {
                samples[i] + frac * (samples[i + 1] - samples[i])
            }
        })
        .collect()
}

/// Resamples a record to `internal_hz`, returning the index map alongside.
pub fn resample_internal(record: &EcgRecord, internal_hz: f64) -> (EcgRecord, RateMap) {
    let map = RateMap::new(record.sampling_rate_hz, internal_hz, record.len());
    let samples = resample_linear(&record.samples, record.sampling_rate_hz, internal_hz);
    let mut out = record.with_samples(samples);
    out.sampling_rate_hz = internal_hz;
    (out, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceTag;

    #[test]
    fn identity_at_internal_rate() {
        let r = EcgRecord::new("a", 500.0, vec![0.3, 0.1, 0.7], "I", SourceTag::Wearable).unwrap();
        let (out, map) = resample_internal(&r, 500.0);
        assert_eq!(out.samples, r.samples);
        assert!(map.is_identity());
    }

    #[test]
    fn doubling_preserves_endpoints() {
        let x: Vec<f64> = (0..2500).map(|i| (i as f64 * 0.37).cos()).collect();
        let y = resample_linear(&x, 250.0, 500.0);
        assert_eq!(y.len(), 2 * x.len() - 1);
        assert_eq!(y[0], x[0]);
        assert_eq!(*y.last().unwrap(), *x.last().unwrap());
        for (i, v) in x.iter().enumerate() {
            assert_eq!(y[2 * i], *v);
        }
        assert!((y[1] - 0.5 * (x[0] + x[1])).abs() < 1e-15);
    }

    #[test]
    fn round_trip_index_within_one_sample() {
        for &fs in &[100.0, 128.0, 250.0, 360.0, 500.0, 1000.0] {
            let n = (10.0 * fs) as usize;
            let map = RateMap::new(fs, 500.0, n);
            for i in 0..n {
                let back = map.to_native(map.to_internal(i));
                assert!(back.abs_diff(i) <= 1, "fs {fs} index {i} -> {back}");
            }
        }
    }
}
