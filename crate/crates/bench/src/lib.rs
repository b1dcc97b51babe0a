//! Shared fixtures for the benchmarks.

use ecgparam::synth::{generate, NoiseSpec, SynthParams};
use ecgparam::EcgRecord;

/// A 30 s, 70 bpm synthetic record at `fs`, optionally with white noise.
pub fn fixture_record(fs: f64, snr_db: Option<f64>) -> EcgRecord {
    let params = SynthParams {
        sampling_rate_hz: fs,
        duration_s: 30.0,
        noise: snr_db.map(NoiseSpec::white).unwrap_or_default(),
        seed: 11,
        ..Default::default()
    };
    generate(&params).expect("fixture parameters are feasible").0
}
