//! MFCC and PLP front ends: 12 cepstral coefficients plus log energy per
//! frame, delta appending to 39 dimensions, and per-phoneme statistics.

use std::f64::consts::PI;

use thiserror::Error;

use crate::audio::{frame_signal, pre_emphasize_frame, window_weights, AudioBuffer, WindowKind};
use crate::dsp::{levinson, next_pow2, power_spectrum};

pub const N_STATIC: usize = 13;
pub const N_TOTAL: usize = 39;
pub const ENERGY_FLOOR: f64 = 1e-10;
pub const VARIANCE_FLOOR: f64 = 1e-4;
const PRE_EMPHASIS: f64 = 0.97;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("buffer shorter than one analysis frame")]
    BufferTooShort,
    #[error("empty input")]
    EmptyInput,
    #[error("malformed feature CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScheme {
    Mfcc,
    Plp,
}

impl std::fmt::Display for FeatureScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureScheme::Mfcc => write!(f, "MFCC"),
            FeatureScheme::Plp => write!(f, "PLP"),
        }
    }
}

/// Per-frame feature rows. `dim` is 13 for static features and 39 once
/// deltas are appended.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
    pub frame_hop_ms: f64,
    pub scheme: FeatureScheme,
}

#[derive(Debug, Clone)]
pub struct MfccConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// Defaults to 26 filters up to 16 kHz material, 40 above.
    pub n_mels: Option<usize>,
    pub n_ceps: usize,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            frame_ms: 25.0,
            hop_ms: 10.0,
            n_mels: None,
            n_ceps: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlpConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub order: usize,
}

impl Default for PlpConfig {
    fn default() -> Self {
        PlpConfig {
            frame_ms: 25.0,
            hop_ms: 10.0,
            order: 12,
        }
    }
}

/// Diagonal-covariance Gaussian statistics for one phoneme.
#[derive(Debug, Clone)]
pub struct PhonemeStats {
    pub label: String,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub count: usize,
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_inv(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters as dense weight rows over the one-sided spectrum.
pub(crate) fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Vec<Vec<f64>> {
    let sr = sample_rate as f64;
    let n_bins = n_fft / 2 + 1;
    let max_mel = mel(sr / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_inv(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut bank = vec![vec![0.0; n_bins]; n_mels];
    for (m, row) in bank.iter_mut().enumerate() {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (bin, w) in row.iter_mut().enumerate() {
            let f = bin as f64 * sr / n_fft as f64;
            if f > lo && f < hi {
                *w = if f <= mid {
                    (f - lo) / (mid - lo)
                } else {
                    (hi - f) / (hi - mid)
                };
            }
        }
    }
    bank
}

pub(crate) fn default_n_mels(sample_rate: u32) -> usize {
    if sample_rate > 32000 {
        40
    } else {
        26
    }
}

fn log_frame_energy(frame: &[f64]) -> f64 {
    frame
        .iter()
        .map(|&x| x * x)
        .sum::<f64>()
        .max(ENERGY_FLOOR)
        .ln()
}

/// DCT-II with orthonormal scaling, coefficients 1..=n_ceps (c0 excluded).
fn dct_cepstra(log_mels: &[f64], n_ceps: usize) -> Vec<f64> {
    let n = log_mels.len() as f64;
    let scale = (2.0 / n).sqrt();
    (1..=n_ceps)
        .map(|k| {
            scale
                * log_mels
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// 12 mel cepstra + log energy per 25 ms frame.
pub fn compute_mfcc(buf: &AudioBuffer, config: &MfccConfig) -> Result<FeatureMatrix, FeatureError> {
    assert_eq!(config.n_ceps, 12, "feature contract is 12 cepstra");
    let frames = frame_signal(buf, config.frame_ms, config.hop_ms)
        .map_err(|_| FeatureError::BufferTooShort)?;
    if buf.samples.len() < frames.frame_len {
        return Err(FeatureError::BufferTooShort);
    }
    let n_fft = next_pow2(frames.frame_len);
    let n_mels = config.n_mels.unwrap_or_else(|| default_n_mels(buf.sample_rate));
    let bank = mel_filterbank(buf.sample_rate, n_fft, n_mels);
    let window = window_weights(frames.frame_len, WindowKind::Hamming);

    let mut rows = Vec::with_capacity(frames.frames.len());
    for frame in &frames.frames {
        let energy = log_frame_energy(frame);
        let mut work = frame.clone();
        pre_emphasize_frame(&mut work, PRE_EMPHASIS);
        for (x, w) in work.iter_mut().zip(&window) {
            *x *= w;
        }
        let ps = power_spectrum(&work, n_fft);
        let log_mels: Vec<f64> = bank
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&ps)
                    .map(|(w, p)| w * p)
                    .sum::<f64>()
                    .max(ENERGY_FLOOR)
                    .ln()
            })
            .collect();
        let mut row = dct_cepstra(&log_mels, config.n_ceps);
        row.push(energy);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        rows,
        dim: N_STATIC,
        frame_hop_ms: config.hop_ms,
        scheme: FeatureScheme::Mfcc,
    })
}

fn bark(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

/// Critical-band masking curve around a band center, in bark offset.
fn bark_weight(offset: f64) -> f64 {
    if (-1.3..=-0.5).contains(&offset) {
        10f64.powf(2.5 * (offset + 0.5))
    } else if offset > -0.5 && offset < 0.5 {
        1.0
    } else if (0.5..=2.5).contains(&offset) {
        10f64.powf(-(offset - 0.5))
    } else {
        0.0
    }
}

fn equal_loudness(f: f64) -> f64 {
    let f2 = f * f;
    let num = (f2 / (f2 + 1.6e5)).powi(2) * (f2 + 1.44e6);
    num / (f2 + 9.61e6)
}

/// Critical-band energies normalized by filter area, one value per band
/// center placed every bark from 1 up to the Nyquist bark. Shared by PLP
/// proper and the flatness diagnostics.
pub(crate) fn bark_spectrum(power: &[f64], sample_rate: u32, n_fft: usize) -> Vec<f64> {
    let sr = sample_rate as f64;
    let nyq_bark = bark(sr / 2.0);
    let n_bands = (nyq_bark.floor() as usize).saturating_sub(1);
    let mut bands = vec![0.0; n_bands];
    for (b, out) in bands.iter_mut().enumerate() {
        let center = (b + 1) as f64;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (bin, &p) in power.iter().enumerate() {
            let f = bin as f64 * sr / n_fft as f64;
            let w = bark_weight(bark(f) - center);
            acc += w * p;
            wsum += w;
        }
        *out = if wsum > 0.0 { acc / wsum } else { 0.0 };
    }
    bands
}

fn lpc_to_cepstra(a: &[f64], n_ceps: usize) -> Vec<f64> {
    // a is in the A(z) = 1 - sum a_k z^-k convention; alpha_k = -a_k
    let order = a.len();
    let mut c = vec![0.0; n_ceps + 1];
    for n in 1..=n_ceps {
        let alpha_n = if n <= order { -a[n - 1] } else { 0.0 };
        let mut acc = -alpha_n;
        for k in 1..n {
            let alpha = if n - k <= order { -a[n - k - 1] } else { 0.0 };
            acc -= (k as f64 / n as f64) * c[k] * alpha;
        }
        c[n] = acc;
    }
    c[1..].to_vec()
}

/// Perceptual linear prediction: bark-band integration, equal-loudness
/// weighting, cube-root compression, all-pole fit, 12 cepstra + log energy.
pub fn compute_plp(buf: &AudioBuffer, config: &PlpConfig) -> Result<FeatureMatrix, FeatureError> {
    let frames = frame_signal(buf, config.frame_ms, config.hop_ms)
        .map_err(|_| FeatureError::BufferTooShort)?;
    if buf.samples.len() < frames.frame_len {
        return Err(FeatureError::BufferTooShort);
    }
    let n_fft = next_pow2(frames.frame_len);
    let window = window_weights(frames.frame_len, WindowKind::Hamming);

    let mut rows = Vec::with_capacity(frames.frames.len());
    for frame in &frames.frames {
        let energy = log_frame_energy(frame);
        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
        let ps = power_spectrum(&windowed, n_fft);
        let bands = bark_spectrum(&ps, buf.sample_rate, n_fft);

        // loudness equalization and intensity-loudness compression
        let compressed: Vec<f64> = bands
            .iter()
            .enumerate()
            .map(|(b, &e)| {
                let center_hz = 600.0 * (((b + 1) as f64) / 6.0).sinh();
                (equal_loudness(center_hz) * e).max(ENERGY_FLOOR).powf(0.33)
            })
            .collect();

        // duplicate the endpoints, then an even-symmetric IDFT gives the
        // autocorrelation of the auditory spectrum
        let mut spectrum = Vec::with_capacity(compressed.len() + 2);
        spectrum.push(compressed[0]);
        spectrum.extend_from_slice(&compressed);
        spectrum.push(*compressed.last().unwrap());
        let m = spectrum.len();
        let r: Vec<f64> = (0..=config.order)
            .map(|k| {
                let mut acc = spectrum[0] + (-1f64).powi(k as i32) * spectrum[m - 1];
                for (j, &s) in spectrum.iter().enumerate().take(m - 1).skip(1) {
                    acc += 2.0 * s * (PI * k as f64 * j as f64 / (m - 1) as f64).cos();
                }
                acc / (2.0 * (m - 1) as f64)
            })
            .collect();
        let (a, _err) = levinson(&r, config.order);
        let mut row = lpc_to_cepstra(&a, 12);
        row.push(energy);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        rows,
        dim: N_STATIC,
        frame_hop_ms: config.hop_ms,
        scheme: FeatureScheme::Plp,
    })
}

/// Append first and second derivatives computed over a +/-2 frame regression
/// window with edge replication; a d-dimensional matrix becomes 3d.
pub fn append_deltas(m: &FeatureMatrix) -> FeatureMatrix {
    assert!(!m.rows.is_empty(), "need at least one frame");
    let d = m.dim;
    let deltas = regression_deltas(&m.rows, d);
    let delta_deltas = regression_deltas(&deltas, d);
    let rows = m
        .rows
        .iter()
        .zip(&deltas)
        .zip(&delta_deltas)
        .map(|((s, d1), d2)| {
            let mut row = Vec::with_capacity(3 * d);
            row.extend_from_slice(s);
            row.extend_from_slice(d1);
            row.extend_from_slice(d2);
            row
        })
        .collect();
    FeatureMatrix {
        rows,
        dim: 3 * d,
        frame_hop_ms: m.frame_hop_ms,
        scheme: m.scheme,
    }
}

fn regression_deltas(rows: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let t_max = rows.len() as isize - 1;
    let at = |t: isize| &rows[t.clamp(0, t_max) as usize];
    (0..rows.len() as isize)
        .map(|t| {
            (0..d)
                .map(|j| {
                    let num: f64 = (1..=2isize)
                        .map(|n| n as f64 * (at(t + n)[j] - at(t - n)[j]))
                        .sum();
                    num / 10.0 // 2 * (1^2 + 2^2)
                })
                .collect()
        })
        .collect()
}

/// Per-dimension mean and population variance, variance floored.
pub fn compute_stats(label: &str, frames: &[Vec<f64>]) -> Result<PhonemeStats, FeatureError> {
    if frames.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let d = frames[0].len();
    let n = frames.len() as f64;
    let mut mean = vec![0.0; d];
    for f in frames {
        debug_assert_eq!(f.len(), d);
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v / n;
        }
    }
    let mut variance = vec![0.0; d];
    for f in frames {
        for ((var, v), m) in variance.iter_mut().zip(f).zip(&mean) {
            *var += (v - m) * (v - m) / n;
        }
    }
    for v in variance.iter_mut() {
        *v = v.max(VARIANCE_FLOOR);
    }
    Ok(PhonemeStats {
        label: label.to_string(),
        mean,
        variance,
        count: frames.len(),
    })
}

/// One row per frame: frame index followed by the feature values.
pub fn export_features_csv(m: &FeatureMatrix) -> String {
    let mut out = String::from("frame");
    for j in 0..m.dim {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for (i, row) in m.rows.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn import_features_csv(
    text: &str,
    frame_hop_ms: f64,
    scheme: FeatureScheme,
) -> Result<FeatureMatrix, FeatureError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(FeatureError::EmptyInput)?;
    let dim = header.split(',').count() - 1;
    if dim == 0 || !header.starts_with("frame") {
        return Err(FeatureError::MalformedCsv {
            line: 1,
            reason: "expected 'frame,v0,...' header".into(),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(FeatureError::MalformedCsv {
                line: idx + 1,
                reason: format!("expected {} fields, got {}", dim + 1, fields.len()),
            });
        }
        let row: Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse::<f64>()).collect();
        rows.push(row.map_err(|e| FeatureError::MalformedCsv {
            line: idx + 1,
            reason: e.to_string(),
        })?);
    }
    if rows.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    Ok(FeatureMatrix {
        rows,
        dim,
        frame_hop_ms,
        scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn mfcc_rows_are_thirteen_wide() {
        let buf = synth::sine(16000, 1.0, 440.0, 0.5);
        let m = compute_mfcc(&buf, &MfccConfig::default()).unwrap();
        assert!(!m.rows.is_empty());
        assert!(m.rows.iter().all(|r| r.len() == 13));
        assert_eq!(m.dim, 13);
    }

    #[test]
    fn silence_hits_the_energy_floor() {
        let buf = synth::silence(16000, 0.3);
        let m = compute_mfcc(&buf, &MfccConfig::default()).unwrap();
        for row in &m.rows {
            assert!((row[12] - ENERGY_FLOOR.ln()).abs() < 1e-12);
            for &c in &row[..12] {
                assert!(c.abs() < 1e-9, "cepstra of silence should vanish, got {c}");
            }
        }
    }

    #[test]
    fn tone_location_matches_dft_bin_oracle() {
        let sr = 16000u32;
        let n_fft = 512; // 25 ms at 16 kHz -> 400 samples -> 512 FFT
        let bank = mel_filterbank(sr, n_fft, 26);
        let argmax_channel = |freq: f64| -> usize {
            let buf = synth::sine(sr, 0.2, freq, 0.8);
            let ps = power_spectrum(&buf.samples[..400], n_fft);
            bank.iter()
                .map(|row| row.iter().zip(&ps).map(|(w, p)| w * p).sum::<f64>())
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        // independent oracle: channel whose weight at the tone's DFT bin is largest
        let oracle_channel = |freq: f64| -> usize {
            let bin = (freq * n_fft as f64 / sr as f64).round() as usize;
            bank.iter()
                .map(|row| row[bin])
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        let (c1k, c3k) = (argmax_channel(1000.0), argmax_channel(3000.0));
        assert_ne!(c1k, c3k);
        assert_eq!(c1k, oracle_channel(1000.0));
        assert_eq!(c3k, oracle_channel(3000.0));
    }

    #[test]
    fn energy_scales_and_cepstra_do_not() {
        let buf = synth::white_noise(16000, 16000, 7);
        let scaled = AudioBuffer::new(buf.samples.iter().map(|&s| s * 0.5).collect(), 16000);
        let a = compute_mfcc(&buf, &MfccConfig::default()).unwrap();
        let b = compute_mfcc(&scaled, &MfccConfig::default()).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!((ra[12] - rb[12] - 2.0 * 2f64.ln()).abs() < 1e-9);
            for (ca, cb) in ra[..12].iter().zip(&rb[..12]) {
                assert!((ca - cb).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plp_rows_are_thirteen_wide() {
        let buf = synth::sine(16000, 0.5, 300.0, 0.5);
        let m = compute_plp(&buf, &PlpConfig::default()).unwrap();
        assert!(m.rows.iter().all(|r| r.len() == 13));
        assert_eq!(m.scheme, FeatureScheme::Plp);
    }

    #[test]
    fn plp_silence_floors_energy() {
        let buf = synth::silence(16000, 0.2);
        let m = compute_plp(&buf, &PlpConfig::default()).unwrap();
        for row in &m.rows {
            assert!((row[12] - ENERGY_FLOOR.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_bark_spectrum_is_flat_in_the_middle() {
        // statistical check over 1000 frames of deterministic noise
        let n_fft = 512;
        let buf = synth::white_noise(16000, 400 * 1000, 42);
        let mut sums: Vec<f64> = Vec::new();
        for i in 0..1000 {
            let frame = &buf.samples[i * 400..(i + 1) * 400];
            let ps = power_spectrum(frame, n_fft);
            let bands = bark_spectrum(&ps, 16000, n_fft);
            if sums.is_empty() {
                sums = vec![0.0; bands.len()];
            }
            for (s, b) in sums.iter_mut().zip(&bands) {
                *s += b;
            }
        }
        let middle = &sums[2..sums.len() - 2];
        let max = middle.iter().fold(f64::MIN, |m, &v| m.max(v));
        let min = middle.iter().fold(f64::MAX, |m, &v| m.min(v));
        assert!(
            max / min < 10f64.powf(0.3),
            "middle bands span {:.2} dB",
            10.0 * (max / min).log10()
        );
    }

    #[test]
    fn buffer_shorter_than_frame_is_rejected() {
        let buf = AudioBuffer::new(vec![0.1; 100], 16000);
        assert!(matches!(
            compute_mfcc(&buf, &MfccConfig::default()),
            Err(FeatureError::BufferTooShort)
        ));
        assert!(matches!(
            compute_plp(&buf, &PlpConfig::default()),
            Err(FeatureError::BufferTooShort)
        ));
    }

    fn matrix_of(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let dim = rows[0].len();
        FeatureMatrix {
            rows,
            dim,
            frame_hop_ms: 10.0,
            scheme: FeatureScheme::Mfcc,
        }
    }

    #[test]
    fn constant_statics_give_zero_deltas() {
        let m = matrix_of(vec![vec![1.5; 13]; 8]);
        let out = append_deltas(&m);
        assert_eq!(out.dim, 39);
        for row in &out.rows {
            assert!(row[13..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_ramp_gives_constant_deltas() {
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64 * 2.0; 13]).collect();
        let out = append_deltas(&matrix_of(rows));
        for row in &out.rows[2..8] {
            for &d in &row[13..26] {
                assert!((d - 2.0).abs() < 1e-12, "interior delta {d}");
            }
        }
        for row in &out.rows[4..6] {
            for &dd in &row[26..39] {
                assert!(dd.abs() < 1e-12, "interior delta-delta {dd}");
            }
        }
    }

    #[test]
    fn single_frame_deltas_are_zero() {
        let out = append_deltas(&matrix_of(vec![vec![3.0; 13]]));
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0][13..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stats_hand_arithmetic() {
        let s = compute_stats("ph", &[vec![0.0; 5], vec![2.0; 5]]).unwrap();
        assert!(s.mean.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert!(s.variance.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(s.count, 2);
    }

    #[test]
    fn degenerate_stats_hit_variance_floor() {
        let single = compute_stats("ph", &[vec![0.7; 4]]).unwrap();
        assert!(single.variance.iter().all(|&v| v == VARIANCE_FLOOR));
        let identical = compute_stats("ph", &vec![vec![0.7; 4]; 10]).unwrap();
        assert!(identical.variance.iter().all(|&v| v == VARIANCE_FLOOR));
        assert!(matches!(
            compute_stats("ph", &[]),
            Err(FeatureError::EmptyInput)
        ));
    }

    #[test]
    fn features_csv_roundtrip() {
        let buf = synth::sine(16000, 0.2, 250.0, 0.5);
        let m = append_deltas(&compute_mfcc(&buf, &MfccConfig::default()).unwrap());
        let csv = export_features_csv(&m);
        let back = import_features_csv(&csv, m.frame_hop_ms, m.scheme).unwrap();
        assert_eq!(back.dim, 39);
        assert_eq!(back.rows.len(), m.rows.len());
        for (a, b) in m.rows.iter().zip(&back.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x, y); // shortest round-trip float formatting
            }
        }
    }
}
