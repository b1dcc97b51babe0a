//! Butterworth biquad cascades and zero-phase (forward-backward) application.

use std::f64::consts::PI;

/// One second-order section, normalized so `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn normalized(b: [f64; 3], a: [f64; 3]) -> Self {
        let a0 = a[0];
        Biquad {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [1.0, a[1] / a0, a[2] / a0],
        }
    }

    /// Bilinear low-pass section with prewarped cutoff.
    pub fn lowpass(cutoff_hz: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let k = (1.0 - cos) / 2.0;
        Biquad::normalized([k, 1.0 - cos, k], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    /// Bilinear high-pass section with prewarped cutoff.
    pub fn highpass(cutoff_hz: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let k = (1.0 + cos) / 2.0;
        Biquad::normalized([k, -(1.0 + cos), k], [1.0 + alpha, -2.0 * cos, 1.0 - alpha])
    }

    /// Gain at DC.
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[1] + self.a[2])
    }

    /// Transposed direct-form II state that holds the section at rest
    /// for a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = self.dc_gain() * u;
        let z2 = self.b[2] * u - self.a[2] * y;
        let z1 = (self.b[1] + self.b[2]) * u - (self.a[1] + self.a[2]) * y;
        [z1, z2]
    }

    fn run(&self, data: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for x in data.iter_mut() {
            let input = *x;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *x = y;
        }
    }
}

/// Section quality factors of an even-order Butterworth prototype.
fn butterworth_qs(order: usize) -> Vec<f64> {
    debug_assert!(order >= 2 && order.is_multiple_of(2));
    (1..=order / 2)
        .map(|k| {
            let theta = (2 * k - 1) as f64 * PI / (2 * order) as f64;
            1.0 / (2.0 * theta.cos())
        })
        .collect()
}

/// A cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Even-order Butterworth band-pass built as a high-pass cascade
    /// followed by a low-pass cascade.
    pub fn butterworth_bandpass(
        low_hz: f64,
        high_hz: f64,
        fs: f64,
        highpass_order: usize,
        lowpass_order: usize,
    ) -> Self {
        let mut sections: Vec<Biquad> = butterworth_qs(highpass_order)
            .into_iter()
            .map(|q| Biquad::highpass(low_hz, fs, q))
            .collect();
        sections.extend(
            butterworth_qs(lowpass_order)
                .into_iter()
                .map(|q| Biquad::lowpass(high_hz, fs, q)),
        );
        Sos { sections }
    }

    /// Magnitude response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -(c[1] * w.sin() + c[2] * (2.0 * w).sin());
            (re * re + im * im).sqrt()
        };
        self.sections
            .iter()
            .map(|s| eval(&s.b) / eval(&s.a))
            .product()
    }

    /// Single causal pass, starting each section at its steady state
    /// for the first input value.
    fn run(&self, data: &mut [f64]) {
        let Some(&first) = data.first() else {
            return;
        };
        let mut u = first;
        for section in &self.sections {
            let z = section.steady_state(u);
            u *= section.dc_gain();
            section.run(data, z);
        }
    }

    /// Pad length for forward-backward filtering of an `n`-sample signal.
    fn padlen(&self, n: usize) -> usize {
        (3 * (2 * self.sections.len() + 1)).min(n.saturating_sub(1))
    }

    /// Zero-phase filtering: odd extension at both ends, forward pass,
    /// backward pass, then the padding is stripped.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = self.padlen(n);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterworth_qs_match_known_values() {
        let q2 = butterworth_qs(2);
        assert!((q2[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let q4 = butterworth_qs(4);
        assert!((q4[0] - 0.541_196_100_146_197).abs() < 1e-12);
        assert!((q4[1] - 1.306_562_964_876_376_7).abs() < 1e-12);
    }

    #[test]
    fn cutoff_gain_is_minus_three_db() {
        let fs = 500.0;
        let sos = Sos::butterworth_bandpass(0.5, 40.0, fs, 4, 6);
        let lp = Sos {
            sections: sos.sections[2..].to_vec(),
        };
        assert!((lp.gain_at(40.0, fs) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        let hp = Sos {
            sections: sos.sections[..2].to_vec(),
        };
        assert!((hp.gain_at(0.5, fs) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(sos.gain_at(0.0, fs) < 1e-12);
    }

    #[test]
    fn steady_state_holds_constant_input() {
        let s = Biquad::lowpass(10.0, 500.0, 0.8);
        let mut data = vec![3.0; 50];
        s.run(&mut data, s.steady_state(3.0));
        assert!(data.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn filtfilt_is_time_reversal_symmetric() {
        let sos = Sos::butterworth_bandpass(0.5, 40.0, 500.0, 4, 6);
        let x: Vec<f64> = (0..20_000).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let mut xr = x.clone();
        xr.reverse();
        let y = sos.filtfilt(&x);
        let mut yr = sos.filtfilt(&xr);
        yr.reverse();
        // forward-backward is not exactly reversal-symmetric at the edges;
        // the interior, many high-pass time constants in, must agree
        for i in 8000..12_000 {
            assert!((y[i] - yr[i]).abs() < 1e-6, "{i}: {} vs {}", y[i], yr[i]);
        }
    }
}
