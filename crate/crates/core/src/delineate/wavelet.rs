//! Undecimated dyadic wavelet transform with the quadratic-spline
//! derivative wavelet.
//!
//! The band at scale `2^k` is the signal convolved with the derivative of a
//! spline smoothing function of width proportional to `2^k`. Bands are
//! aligned so that `band[n]` measures the smoothed slope between samples
//! `n` and `n + 1`: a local extremum of the signal at sample `p` shows up
//! as a sign change between `band[p - 1]` and `band[p]`.

use super::DelineateError;
use crate::preprocess::reflect;

/// Spline low-pass prototype.
const LOWPASS: [f64; 4] = [0.125, 0.375, 0.375, 0.125];
/// Difference high-pass prototype.
const HIGHPASS: [f64; 2] = [2.0, -2.0];

/// Per-scale coefficient sequences, each as long as the input.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBands {
    pub scale_exponents: Vec<u32>,
    pub bands: Vec<Vec<f64>>,
}

impl WaveletBands {
    /// Band for scale `2^exponent`, if it was computed.
    pub fn band(&self, exponent: u32) -> Option<&[f64]> {
        self.scale_exponents
            .iter()
            .position(|&e| e == exponent)
            .map(|i| self.bands[i].as_slice())
    }
}

fn upsample(filter: &[f64], factor: usize) -> Vec<f64> {
    let mut out = vec![0.0; (filter.len() - 1) * factor + 1];
    for (i, &c) in filter.iter().enumerate() {
        out[i * factor] = c;
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Equivalent FIR of the à-trous cascade at scale `2^exponent`
/// (length `2^(exponent + 1) - 2`).
pub fn equivalent_filter(exponent: u32) -> Vec<f64> {
    assert!(exponent >= 1, "scale exponent starts at 1");
    let mut psi = upsample(&HIGHPASS, 1 << (exponent - 1));
    for j in 1..exponent {
        psi = convolve(&psi, &upsample(&LOWPASS, 1 << (j - 1)));
    }
    psi
}

/// Number of samples the filter at `2^exponent` spans.
pub fn support(exponent: u32) -> usize {
    (1usize << (exponent + 1)) - 2
}

/// Applies the band filter with its antisymmetry centre at `n + 1/2`,
/// reflecting at the record edges.
fn apply(signal: &[f64], psi: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let shift = (psi.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            psi.iter()
                .enumerate()
                .map(|(m, &c)| c * signal[reflect(i + shift - m as isize, n)])
                .sum()
        })
        .collect()
}

/// Computes one band per configured scale exponent.
pub fn wavelet_bands(signal: &[f64], exponents: &[u32]) -> Result<WaveletBands, DelineateError> {
    let widest = exponents.iter().copied().max().unwrap_or(1);
    let need = support(widest);
    if signal.len() < need.max(2) {
        return Err(DelineateError::SignalTooShort {
            len: signal.len(),
            need,
        });
    }
    let bands = exponents
        .iter()
        .map(|&k| apply(signal, &equivalent_filter(k)))
        .collect();
    Ok(WaveletBands {
        scale_exponents: exponents.to_vec(),
        bands,
    })
}
