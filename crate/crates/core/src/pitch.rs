//! Autocorrelation pitch tracking on a fixed 7.5 ms grid.

use thiserror::Error;

use crate::audio::{frame_signal, AudioBuffer};
use crate::dsp::autocorrelation;

pub const DEFAULT_F_MIN: f64 = 60.0;
pub const DEFAULT_F_MAX: f64 = 400.0;
pub const PITCH_HOP_MS: f64 = 7.5;
pub const PITCH_FRAME_MS: f64 = 30.0;

const VOICING_THRESHOLD: f64 = 0.30;
const PEAK_PREFERENCE: f64 = 0.85;

#[derive(Debug, Error)]
pub enum PitchError {
    #[error("search band {f_min}-{f_max} Hz too narrow (need f_max/f_min >= 1.1)")]
    BandTooNarrow { f_min: f64, f_max: f64 },
    #[error("invalid search band {f_min}-{f_max} Hz at {sample_rate} Hz")]
    InvalidBand {
        f_min: f64,
        f_max: f64,
        sample_rate: u32,
    },
    #[error("buffer shorter than one analysis frame")]
    BufferTooShort,
}

/// Per-frame fundamental frequency. `f0[i] == 0` exactly when `voiced[i]` is false.
#[derive(Debug, Clone)]
pub struct PitchContour {
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    pub hop_ms: f64,
    pub sample_rate: u32,
}

impl PitchContour {
    pub fn voiced_f0(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0
            .iter()
            .zip(&self.voiced)
            .filter(|(_, &v)| v)
            .map(|(&f, _)| f)
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }
}

/// Track f0 with a normalized autocorrelation peak picker.
///
/// For each 30 ms frame the biased autocorrelation is normalized by r(0)
/// (with the estimator's linear lag taper compensated),
/// local maxima within the lag band are collected, and the smallest lag whose
/// peak reaches 85% of the strongest peak wins (suppressing octave errors).
/// The winning lag is refined by parabolic interpolation. Frames whose best
/// normalized peak falls below 0.30 are marked unvoiced.
pub fn estimate_pitch(
    buf: &AudioBuffer,
    f_min: f64,
    f_max: f64,
) -> Result<PitchContour, PitchError> {
    let sr = buf.sample_rate as f64;
    if !(f_min > 0.0) || f_max > sr / 2.0 || f_max <= f_min {
        return Err(PitchError::InvalidBand {
            f_min,
            f_max,
            sample_rate: buf.sample_rate,
        });
    }
    if f_max / f_min < 1.1 {
        return Err(PitchError::BandTooNarrow { f_min, f_max });
    }
    let frame_len = (PITCH_FRAME_MS * sr / 1000.0).round() as usize;
    if buf.samples.len() < frame_len {
        return Err(PitchError::BufferTooShort);
    }

    let frames = frame_signal(buf, PITCH_FRAME_MS, PITCH_HOP_MS).expect("valid framing constants");
    let lag_min = ((sr / f_max).floor() as usize).max(2);
    let lag_max = ((sr / f_min).ceil() as usize).min(frame_len - 2);

    let mut f0 = Vec::with_capacity(frames.frames.len());
    let mut voiced = Vec::with_capacity(frames.frames.len());
    for frame in &frames.frames {
        match analyze_frame(frame, sr, lag_min, lag_max) {
            Some(hz) => {
                f0.push(hz.clamp(f_min, f_max));
                voiced.push(true);
            }
            None => {
                f0.push(0.0);
                voiced.push(false);
            }
        }
    }
    Ok(PitchContour {
        f0,
        voiced,
        hop_ms: PITCH_HOP_MS,
        sample_rate: buf.sample_rate,
    })
}

fn analyze_frame(frame: &[f64], sr: f64, lag_min: usize, lag_max: usize) -> Option<f64> {
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let centered: Vec<f64> = frame.iter().map(|x| x - mean).collect();
    let r = autocorrelation(&centered, lag_max + 1);
    if r[0] < 1e-10 {
        return None;
    }
    // undo the linear taper of the biased estimator so peaks stay centered
    // on the true period instead of drifting toward smaller lags
    let n = frame.len() as f64;
    let nacf: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(lag, &v)| v / r[0] * (n / (n - lag as f64)))
        .collect();

    // local maxima in the lag band
    let mut peaks: Vec<(usize, f64)> = Vec::new();
    for lag in lag_min..=lag_max {
        let v = nacf[lag];
        if v > nacf[lag - 1] && v >= nacf[lag + 1] {
            peaks.push((lag, v));
        }
    }
    let global = peaks.iter().map(|&(_, v)| v).fold(f64::MIN, f64::max);
    if peaks.is_empty() || global < VOICING_THRESHOLD {
        return None;
    }
    let (lag, _) = *peaks
        .iter()
        .find(|&&(_, v)| v >= PEAK_PREFERENCE * global)
        .expect("global peak satisfies its own bound");

    // parabolic interpolation around the integer lag
    let (ym, y0, yp) = (nacf[lag - 1], nacf[lag], nacf[lag + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let delta = if denom.abs() > 1e-15 {
        (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(sr / (lag as f64 + delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn pure_200hz_sine_at_44100() {
        let buf = synth::sine(44100, 1.0, 200.0, 0.8);
        let c = estimate_pitch(&buf, 60.0, 400.0).unwrap();
        // trailing frames are mostly zero padding and may drop out
        let n = c.voiced.len();
        assert!(
            c.voiced[..n - 2].iter().all(|&v| v),
            "interior frames should be voiced"
        );
        let med = median(c.voiced_f0().collect());
        assert!((med - 200.0).abs() / 200.0 < 0.02, "median {med}");
    }

    #[test]
    fn pure_100hz_sine_at_16k() {
        let buf = synth::sine(16000, 1.0, 100.0, 0.8);
        let c = estimate_pitch(&buf, 60.0, 400.0).unwrap();
        let med = median(c.voiced_f0().collect());
        assert!((med - 100.0).abs() / 100.0 < 0.02, "median {med}");
    }

    #[test]
    fn silence_is_fully_unvoiced() {
        let buf = AudioBuffer::new(vec![0.0; 16000], 16000);
        let c = estimate_pitch(&buf, 60.0, 400.0).unwrap();
        assert_eq!(c.voiced_count(), 0);
        assert!(c.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn narrow_band_rejected() {
        let buf = synth::sine(16000, 0.5, 100.0, 0.5);
        assert!(matches!(
            estimate_pitch(&buf, 100.0, 105.0),
            Err(PitchError::BandTooNarrow { .. })
        ));
    }

    #[test]
    fn band_above_nyquist_rejected() {
        let buf = synth::sine(16000, 0.5, 100.0, 0.5);
        assert!(matches!(
            estimate_pitch(&buf, 60.0, 9000.0),
            Err(PitchError::InvalidBand { .. })
        ));
    }

    #[test]
    fn short_buffer_rejected() {
        let buf = AudioBuffer::new(vec![0.1; 100], 16000);
        assert!(matches!(
            estimate_pitch(&buf, 60.0, 400.0),
            Err(PitchError::BufferTooShort)
        ));
    }

    #[test]
    fn contour_invariant_voiced_iff_nonzero() {
        let buf = synth::modulated_tone(16000, 1.0, 150.0, 0.2, 3.0);
        let c = estimate_pitch(&buf, 60.0, 400.0).unwrap();
        for (f, v) in c.f0.iter().zip(&c.voiced) {
            assert_eq!(*v, *f != 0.0);
        }
    }
}
