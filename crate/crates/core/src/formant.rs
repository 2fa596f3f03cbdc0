//! Vowel formant estimation via linear prediction, plus the embedded
//! average-formant reference tables for Kazakh vowels.

use std::f64::consts::PI;

use thiserror::Error;

use crate::audio::{apply_window, frame_signal, pre_emphasize, AudioBuffer, WindowKind};
use crate::dsp::{autocorrelation, levinson, polynomial_roots};

#[derive(Debug, Error)]
pub enum FormantError {
    #[error("no usable spectral resonances found")]
    NoResonancesFound,
    #[error("segment shorter than {min_ms} ms")]
    SegmentTooShort { min_ms: f64 },
    #[error("unknown vowel label '{0}'")]
    UnknownVowel(String),
    #[error("empty input")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpeakerGroup {
    Male,
    Female,
}

impl SpeakerGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeakerGroup::Male => "male",
            SpeakerGroup::Female => "female",
        }
    }
}

impl std::fmt::Display for SpeakerGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SpeakerGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "male" => Ok(SpeakerGroup::Male),
            "female" => Ok(SpeakerGroup::Female),
            other => Err(format!("unknown speaker group '{other}'")),
        }
    }
}

/// The three lowest vocal-tract resonances, sorted ascending.
#[derive(Debug, Clone, Copy)]
pub struct FormantEstimate {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub bandwidths: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct VowelChartEntry {
    pub vowel_label: String,
    pub speaker_group: SpeakerGroup,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Average formant frequencies (F1, F2, F3 in Hz) of the nine Kazakh vowels.
const MALE_FORMANTS: [(&str, [f64; 3]); 9] = [
    ("ae", [734.0, 1627.0, 2769.0]),
    ("uo", [517.0, 1437.0, 2500.0]),
    ("i", [540.0, 1700.0, 2705.0]),
    ("y", [513.0, 1405.0, 2505.0]),
    ("a", [811.0, 1258.0, 2640.0]),
    ("o", [577.0, 808.0, 2765.0]),
    ("yi", [590.0, 1307.0, 2652.0]),
    ("uy", [566.0, 961.0, 2605.0]),
    ("e", [443.0, 2087.0, 2900.0]),
];

const FEMALE_FORMANTS: [(&str, [f64; 3]); 9] = [
    ("ae", [858.0, 1929.0, 3180.0]),
    ("uo", [662.0, 1424.0, 2892.0]),
    ("i", [697.0, 1844.0, 2986.0]),
    ("y", [572.0, 1529.0, 2801.0]),
    ("a", [948.0, 1397.0, 3048.0]),
    ("o", [583.0, 969.0, 3220.0]),
    ("yi", [743.0, 1175.0, 3072.0]),
    ("uy", [696.0, 1116.0, 3155.0]),
    ("e", [554.0, 2559.0, 3150.0]),
];

const MIN_SEGMENT_MS: f64 = 30.0;
const MIN_FORMANT_HZ: f64 = 90.0;
const MAX_BANDWIDTH_HZ: f64 = 400.0;
const PRE_EMPHASIS: f64 = 0.97;

/// Estimate F1-F3 of a voiced vowel segment.
///
/// Pre-emphasis, Hamming-windowed frames over the middle 50% of the segment,
/// LPC of order sr/1000 + 2 per frame, then resonances from the prediction
/// polynomial roots: frequency = angle * sr / 2pi, bandwidth =
/// -(sr/pi) * ln|root|. Roots below 90 Hz or wider than 400 Hz are dropped
/// and the surviving per-frame triples are averaged.
pub fn estimate_formants(segment: &AudioBuffer) -> Result<FormantEstimate, FormantError> {
    let sr = segment.sample_rate as f64;
    if segment.duration_s() * 1000.0 < MIN_SEGMENT_MS {
        return Err(FormantError::SegmentTooShort {
            min_ms: MIN_SEGMENT_MS,
        });
    }
    let order = (sr / 1000.0).round() as usize + 2;
    let emphasized = pre_emphasize(segment, PRE_EMPHASIS);
    let frames = frame_signal(&emphasized, 30.0, 10.0).expect("valid framing constants");

    // middle 50% of the segment avoids onset/offset transients
    let n = frames.frames.len();
    let (lo, hi) = (n / 4, (3 * n).div_ceil(4));
    let mut triples: Vec<[f64; 6]> = Vec::new();
    for frame in &frames.frames[lo..hi.max(lo + 1).min(n)] {
        if let Some(t) = frame_formants(frame, sr, order) {
            triples.push(t);
        }
    }
    if triples.is_empty() {
        return Err(FormantError::NoResonancesFound);
    }
    let k = triples.len() as f64;
    let mut acc = [0.0; 6];
    for t in &triples {
        for (a, v) in acc.iter_mut().zip(t) {
            *a += v / k;
        }
    }
    Ok(FormantEstimate {
        f1: acc[0],
        f2: acc[1],
        f3: acc[2],
        bandwidths: [acc[3], acc[4], acc[5]],
    })
}

fn frame_formants(frame: &[f64], sr: f64, order: usize) -> Option<[f64; 6]> {
    let windowed = apply_window(frame, WindowKind::Hamming);
    let r = autocorrelation(&windowed, order);
    if r[0] < 1e-9 {
        return None;
    }
    let (a, _err) = levinson(&r, order);
    // A(z) = 1 - sum a_k z^-k; roots of z^order * A(z) as a monic polynomial
    let coeffs: Vec<f64> = a.iter().map(|&c| -c).collect();
    let mut resonances: Vec<(f64, f64)> = polynomial_roots(&coeffs)
        .into_iter()
        .filter(|root| root.im > 0.0 && root.norm() < 1.0)
        .filter_map(|root| {
            let freq = root.arg() * sr / (2.0 * PI);
            let bw = -(sr / PI) * root.norm().ln();
            (freq > MIN_FORMANT_HZ && bw < MAX_BANDWIDTH_HZ).then_some((freq, bw))
        })
        .collect();
    resonances.sort_by(|a, b| a.0.total_cmp(&b.0));
    if resonances.len() < 3 {
        return None;
    }
    Some([
        resonances[0].0,
        resonances[1].0,
        resonances[2].0,
        resonances[0].1,
        resonances[1].1,
        resonances[2].1,
    ])
}

/// Look up the embedded reference table row for a vowel.
pub fn reference_formants(
    vowel_label: &str,
    group: SpeakerGroup,
) -> Result<VowelChartEntry, FormantError> {
    let table = match group {
        SpeakerGroup::Male => &MALE_FORMANTS,
        SpeakerGroup::Female => &FEMALE_FORMANTS,
    };
    table
        .iter()
        .find(|(label, _)| *label == vowel_label)
        .map(|(label, f)| VowelChartEntry {
            vowel_label: (*label).to_string(),
            speaker_group: group,
            f1: f[0],
            f2: f[1],
            f3: f[2],
        })
        .ok_or_else(|| FormantError::UnknownVowel(vowel_label.to_string()))
}

/// All embedded reference rows for one speaker group, in table order.
pub fn reference_table(group: SpeakerGroup) -> Vec<VowelChartEntry> {
    let table = match group {
        SpeakerGroup::Male => &MALE_FORMANTS,
        SpeakerGroup::Female => &FEMALE_FORMANTS,
    };
    table
        .iter()
        .map(|(label, _)| reference_formants(label, group).expect("label from table"))
        .collect()
}

/// (label, group, f1, f2) CSV for external vowel-chart plotting.
pub fn emit_vowel_chart(entries: &[VowelChartEntry]) -> Result<String, FormantError> {
    if entries.is_empty() {
        return Err(FormantError::EmptyInput);
    }
    let mut out = String::from("label,group,f1,f2\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.vowel_label, e.speaker_group, e.f1, e.f2
        ));
    }
    Ok(out)
}
