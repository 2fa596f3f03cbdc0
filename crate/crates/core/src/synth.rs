//! Deterministic signal synthesis for fixtures and tests.

use crate::audio::AudioBuffer;

use std::f64::consts::PI;

pub fn sine(sample_rate: u32, duration_s: f64, freq: f64, amp: f64) -> AudioBuffer {
    let n = (duration_s * sample_rate as f64).round() as usize;
    let w = 2.0 * PI * freq / sample_rate as f64;
    AudioBuffer::new((0..n).map(|i| amp * (w * i as f64).sin()).collect(), sample_rate)
}

pub fn silence(sample_rate: u32, duration_s: f64) -> AudioBuffer {
    let n = (duration_s * sample_rate as f64).round() as usize;
    AudioBuffer::new(vec![0.0; n], sample_rate)
}

/// Tone with square-wave frequency modulation and continuous phase:
/// f(t) alternates between f0*(1-depth) and f0*(1+depth) at `rate_hz`.
/// A small depth gives a near-monotone delivery, a large one a dynamic one.
pub fn modulated_tone(
    sample_rate: u32,
    duration_s: f64,
    f0: f64,
    depth: f64,
    rate_hz: f64,
) -> AudioBuffer {
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let half = ((t * rate_hz * 2.0).floor() as i64) % 2;
        let f = if half == 0 { f0 * (1.0 - depth) } else { f0 * (1.0 + depth) };
        phase += 2.0 * PI * f / sr;
        out.push(0.8 * phase.sin());
    }
    AudioBuffer::new(out, sample_rate)
}

/// Unit impulse train at the given fundamental.
pub fn pulse_train(sample_rate: u32, duration_s: f64, f0: f64) -> Vec<f64> {
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    let period = sr / f0;
    let mut out = vec![0.0; n];
    let mut t = 0.0f64;
    while (t.round() as usize) < n {
        out[t.round() as usize] = 1.0;
        t += period;
    }
    out
}

/// Glottal-shaped excitation through a cascade of two-pole resonators, one
/// per (center frequency, bandwidth) pair, then normalized to 0.8 peak.
///
/// The impulse train is first smoothed by a one-pole filter (pole 0.97) so
/// the excitation rolls off like a glottal pulse instead of being spectrally
/// flat; formant analysis pre-emphasis assumes exactly that tilt.
pub fn all_pole_vowel(
    sample_rate: u32,
    duration_s: f64,
    f0: f64,
    resonances: &[(f64, f64)],
) -> AudioBuffer {
    let sr = sample_rate as f64;
    let mut x = pulse_train(sample_rate, duration_s, f0);
    let mut g = 0.0f64;
    for v in x.iter_mut() {
        g = *v + 0.97 * g;
        *v = g;
    }
    for &(freq, bw) in resonances {
        let r = (-PI * bw / sr).exp();
        let c1 = 2.0 * r * (2.0 * PI * freq / sr).cos();
        let c2 = -r * r;
        let (mut y1, mut y2) = (0.0f64, 0.0f64);
        for v in x.iter_mut() {
            let y = *v + c1 * y1 + c2 * y2;
            y2 = y1;
            y1 = y;
            *v = y;
        }
    }
    let peak = x.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-12);
    for v in x.iter_mut() {
        *v *= 0.8 / peak;
    }
    AudioBuffer::new(x, sample_rate)
}

/// Deterministic white noise in [-1, 1] from a xorshift64* generator.
pub fn white_noise(sample_rate: u32, n: usize, seed: u64) -> AudioBuffer {
    let mut state = seed.max(1);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let v = (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64
            / (1u64 << 53) as f64;
        out.push(2.0 * v - 1.0);
    }
    AudioBuffer::new(out, sample_rate)
}
