//! WAV decoding and the framing / pre-emphasis / windowing front end shared
//! by every analysis module.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("file contains no audio samples")]
    EmptyAudio,
    #[error("invalid framing: frame {frame_ms} ms / hop {hop_ms} ms")]
    InvalidFraming { frame_ms: f64, hop_ms: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Decoded mono audio, samples normalized to [-1.0, 1.0].
#[derive(Debug, Clone)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample_rate must be positive");
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Fixed-length analysis frames cut on a millisecond grid.
///
/// Frame starts are computed as `round(i * hop_ms * sr / 1000)` so that
/// non-integral hops (7.5 ms at 44.1 kHz is 330.75 samples) never accumulate
/// drift. The final partial frame is zero-padded.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

pub fn load_wav<P: AsRef<Path>>(path: P) -> Result<AudioBuffer, AudioError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_wav(&bytes)
}

fn rd_u16(b: &[u8], at: usize) -> Result<u16, AudioError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| AudioError::MalformedContainer("truncated chunk".into()))
}

fn rd_u32(b: &[u8], at: usize) -> Result<u32, AudioError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| AudioError::MalformedContainer("truncated chunk".into()))
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedContainer(
            "missing RIFF/WAVE magic".into(),
        ));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (tag, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = rd_u32(bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| AudioError::MalformedContainer("chunk overruns file".into()))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::MalformedContainer("fmt chunk too small".into()));
                }
                fmt = Some((
                    rd_u16(bytes, body_start)?,
                    rd_u16(bytes, body_start + 2)?,
                    rd_u32(bytes, body_start + 4)?,
                    rd_u16(bytes, body_start + 14)?,
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunks are word-aligned
        pos = body_end + (size & 1);
    }

    let (tag, channels, rate, bits) =
        fmt.ok_or_else(|| AudioError::MalformedContainer("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::MalformedContainer("no data chunk".into()))?;

    if rate == 0 {
        return Err(AudioError::MalformedContainer("zero sample rate".into()));
    }
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{channels} channels (expected mono or stereo)"
        )));
    }

    let interleaved: Vec<f64> = match (tag, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| (f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).clamp(-1.0, 1.0))
            .collect(),
        (1, b) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "{b}-bit PCM (only 16-bit supported)"
            )))
        }
        (3, b) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "{b}-bit float (only 32-bit supported)"
            )))
        }
        (t, _) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "format tag {t} (only PCM and IEEE float supported)"
            )))
        }
    };

    let samples: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|p| 0.5 * (p[0] + p[1]))
            .collect()
    };

    if samples.is_empty() {
        return Err(AudioError::EmptyAudio);
    }
    Ok(AudioBuffer::new(samples, rate))
}

/// Write a mono 16-bit PCM WAV. Used to produce test fixtures.
pub fn write_wav_16bit<P: AsRef<Path>>(
    path: P,
    samples: &[f64],
    sample_rate: u32,
) -> Result<(), AudioError> {
    let n = samples.len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    File::create(path)?.write_all(&out)?;
    Ok(())
}

pub fn frame_signal(
    buf: &AudioBuffer,
    frame_ms: f64,
    hop_ms: f64,
) -> Result<FrameSequence, AudioError> {
    if !(hop_ms > 0.0) || frame_ms < hop_ms {
        return Err(AudioError::InvalidFraming { frame_ms, hop_ms });
    }
    let sr = buf.sample_rate as f64;
    let frame_len = (frame_ms * sr / 1000.0).round() as usize;
    let hop = (hop_ms * sr / 1000.0).round() as usize;
    if frame_len == 0 || hop == 0 {
        return Err(AudioError::InvalidFraming { frame_ms, hop_ms });
    }
    let n = buf.samples.len();
    let n_frames = n.div_ceil(hop).max(1);
    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let start = (i as f64 * hop_ms * sr / 1000.0).round() as usize;
        let mut frame = vec![0.0; frame_len];
        if start < n {
            let take = frame_len.min(n - start);
            frame[..take].copy_from_slice(&buf.samples[start..start + take]);
        }
        frames.push(frame);
    }
    Ok(FrameSequence {
        frames,
        frame_len,
        hop,
        sample_rate: buf.sample_rate,
    })
}

/// First-order pre-emphasis, y[n] = x[n] - alpha * x[n-1] with y[0] = x[0].
pub fn pre_emphasize(buf: &AudioBuffer, alpha: f64) -> AudioBuffer {
    assert!((0.0..1.0).contains(&alpha), "alpha must be in [0, 1)");
    let mut out = Vec::with_capacity(buf.samples.len());
    let mut prev = 0.0;
    for (i, &x) in buf.samples.iter().enumerate() {
        out.push(if i == 0 { x } else { x - alpha * prev });
        prev = x;
    }
    AudioBuffer::new(out, buf.sample_rate)
}

/// In-place variant over a bare frame, same recurrence as [`pre_emphasize`].
pub fn pre_emphasize_frame(frame: &mut [f64], alpha: f64) {
    let mut prev = 0.0;
    for (i, x) in frame.iter_mut().enumerate() {
        let cur = *x;
        if i > 0 {
            *x = cur - alpha * prev;
        }
        prev = cur;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hamming,
    Hann,
    Rectangular,
}

pub fn window_weights(len: usize, kind: WindowKind) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let phase = 2.0 * std::f64::consts::PI * n as f64 / denom;
            match kind {
                WindowKind::Rectangular => 1.0,
                WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
            }
        })
        .collect()
}

pub fn apply_window(frame: &[f64], kind: WindowKind) -> Vec<f64> {
    assert!(!frame.is_empty(), "frame must be non-empty");
    window_weights(frame.len(), kind)
        .iter()
        .zip(frame)
        .map(|(w, x)| w * x)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(magic: &[u8; 4], samples: &[i16], channels: u16, rate: u32) -> Vec<u8> {
        let data_bytes = (samples.len() * 2) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(magic);
        out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_bytes.to_le_bytes());
        for &s in samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    #[test]
    fn one_second_of_silence() {
        let bytes = wav_bytes(b"RIFF", &vec![0i16; 44100], 1, 44100);
        let buf = decode_wav(&bytes).unwrap();
        assert_eq!(buf.sample_rate, 44100);
        assert_eq!(buf.samples.len(), 44100);
        assert!(buf.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn stereo_square_wave_downmixes_sample_exact() {
        // 0.5 s full-scale square wave at 16 kHz, identical L/R channels.
        let sr = 16000u32;
        let period = sr as usize / 100; // 100 Hz square
        let mono: Vec<i16> = (0..8000)
            .map(|i| {
                if (i / (period / 2)) % 2 == 0 {
                    i16::MAX
                } else {
                    i16::MIN
                }
            })
            .collect();
        let stereo: Vec<i16> = mono.iter().flat_map(|&s| [s, s]).collect();
        let buf = decode_wav(&wav_bytes(b"RIFF", &stereo, 2, sr)).unwrap();
        assert_eq!(buf.samples.len(), 8000);
        for (got, &want) in buf.samples.iter().zip(&mono) {
            assert_eq!(*got, want as f64 / 32768.0);
        }
    }

    #[test]
    fn rifx_magic_is_rejected() {
        let bytes = wav_bytes(b"RIFX", &[0i16; 8], 1, 8000);
        assert!(matches!(
            decode_wav(&bytes),
            Err(AudioError::MalformedContainer(_))
        ));
    }

    #[test]
    fn empty_data_chunk_is_empty_audio() {
        let bytes = wav_bytes(b"RIFF", &[], 1, 8000);
        assert!(matches!(decode_wav(&bytes), Err(AudioError::EmptyAudio)));
    }

    #[test]
    fn compressed_codec_is_unsupported() {
        let mut bytes = wav_bytes(b"RIFF", &[0i16; 8], 1, 8000);
        bytes[20] = 0x55; // format tag -> MP3
        assert!(matches!(
            decode_wav(&bytes),
            Err(AudioError::UnsupportedEncoding(_))
        ));
    }

    #[test]
    fn float32_wav_roundtrip() {
        let mut out = Vec::new();
        let samples = [0.25f32, -0.5, 1.5, -2.0]; // out-of-range values clamp
        let data_bytes = (samples.len() * 4) as u32;
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&3u16.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&16000u32.to_le_bytes());
        out.extend_from_slice(&(16000u32 * 4).to_le_bytes());
        out.extend_from_slice(&4u16.to_le_bytes());
        out.extend_from_slice(&32u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_bytes.to_le_bytes());
        for s in samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        let buf = decode_wav(&out).unwrap();
        assert_eq!(buf.samples, vec![0.25, -0.5, 1.0, -1.0]);
    }

    #[test]
    fn write_then_load_roundtrips_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let samples: Vec<f64> = (0..1000)
            .map(|i| (i as f64 * 0.013).sin() * 0.8)
            .collect();
        write_wav_16bit(&path, &samples, 16000).unwrap();
        let buf = load_wav(&path).unwrap();
        assert_eq!(buf.sample_rate, 16000);
        for (a, b) in samples.iter().zip(&buf.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn framing_at_44100() {
        let buf = AudioBuffer::new(vec![0.0; 44100], 44100);
        let fs = frame_signal(&buf, 30.0, 7.5).unwrap();
        // independent arithmetic: hop = round(7.5 * 44.1) = 331
        assert_eq!(fs.hop, 331);
        assert_eq!(fs.frame_len, 1323);
        assert_eq!(fs.frames.len(), 44100usize.div_ceil(331));
        assert!(fs.frames.len() >= 133);
        assert!(fs.frames.iter().all(|f| f.len() == 1323));
        // drift-free starts: frame 4 starts at round(4 * 330.75) = 1323
        let start4 = (4.0f64 * 7.5 * 44.1).round() as usize;
        assert_eq!(start4, 1323);
    }

    #[test]
    fn short_buffer_yields_one_padded_frame() {
        let buf = AudioBuffer::new(vec![0.5; 10], 16000);
        let fs = frame_signal(&buf, 30.0, 10.0).unwrap();
        assert_eq!(fs.frames.len(), 1);
        assert_eq!(fs.frames[0].len(), 480);
        assert_eq!(&fs.frames[0][..10], &[0.5; 10]);
        assert!(fs.frames[0][10..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn zero_hop_is_invalid() {
        let buf = AudioBuffer::new(vec![0.0; 100], 16000);
        assert!(matches!(
            frame_signal(&buf, 30.0, 0.0),
            Err(AudioError::InvalidFraming { .. })
        ));
        assert!(matches!(
            frame_signal(&buf, 5.0, 10.0),
            Err(AudioError::InvalidFraming { .. })
        ));
    }

    #[test]
    fn pre_emphasis_identity_at_zero_alpha() {
        let buf = AudioBuffer::new(vec![0.1, -0.4, 0.9], 8000);
        assert_eq!(pre_emphasize(&buf, 0.0).samples, buf.samples);
    }

    #[test]
    fn pre_emphasis_hand_computed() {
        let buf = AudioBuffer::new(vec![1.0, 1.0, 1.0], 8000);
        let out = pre_emphasize(&buf, 0.97);
        assert!((out.samples[0] - 1.0).abs() < 1e-12);
        assert!((out.samples[1] - 0.03).abs() < 1e-12);
        assert!((out.samples[2] - 0.03).abs() < 1e-12);
    }

    #[test]
    fn dc_signal_near_unit_alpha_keeps_first_sample() {
        let buf = AudioBuffer::new(vec![0.7; 50], 8000);
        let out = pre_emphasize(&buf, 0.999);
        assert!((out.samples[0] - 0.7).abs() < 1e-12);
        for &s in &out.samples[1..] {
            assert!(s.abs() < 0.001);
        }
    }

    #[test]
    fn rectangular_window_is_identity() {
        let frame = vec![0.3, -0.2, 0.9, 0.1];
        assert_eq!(apply_window(&frame, WindowKind::Rectangular), frame);
    }

    #[test]
    fn hamming_length_three() {
        let out = apply_window(&[1.0, 1.0, 1.0], WindowKind::Hamming);
        assert!((out[0] - 0.08).abs() < 1e-12);
        assert!((out[1] - 1.0).abs() < 1e-12);
        assert!((out[2] - 0.08).abs() < 1e-12);
    }

    #[test]
    fn hann_of_ones_is_the_window() {
        let out = apply_window(&[1.0; 5], WindowKind::Hann);
        assert_eq!(out, window_weights(5, WindowKind::Hann));
        assert!((out[0]).abs() < 1e-12);
        assert!((out[2] - 1.0).abs() < 1e-12);
    }
}
