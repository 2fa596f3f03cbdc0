// shared by several integration-test binaries; not every binary uses every helper
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prosodia_core::audio::write_wav_16bit;
use prosodia_core::synth;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prosodia"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// monotone.wav / dynamic.wav presentation pair plus manifest and labels.
pub fn presentation_fixtures(dir: &Path) -> (PathBuf, PathBuf) {
    let monotone = synth::modulated_tone(16000, 2.0, 140.0, 0.01, 2.0);
    let dynamic = synth::modulated_tone(16000, 2.0, 140.0, 0.20, 2.0);
    write_wav_16bit(dir.join("monotone.wav"), &monotone.samples, 16000).unwrap();
    write_wav_16bit(dir.join("dynamic.wav"), &dynamic.samples, 16000).unwrap();
    let manifest = dir.join("manifest.csv");
    fs::write(
        &manifest,
        "segment_id,path,kind,label,speaker_group\n\
         seg-dyn,dynamic.wav,presentation,talk,female\n\
         seg-mono,monotone.wav,presentation,talk,male\n",
    )
    .unwrap();
    let labels = dir.join("labels.csv");
    fs::write(
        &labels,
        "segment_id,rater_id,mark\n\
         seg-mono,r1,1\nseg-mono,r2,1\nseg-mono,r3,2\n\
         seg-dyn,r1,3\nseg-dyn,r2,3\nseg-dyn,r3,2\n",
    )
    .unwrap();
    (manifest, labels)
}

/// Phoneme corpus with two well-separated tone classes in both groups.
pub fn phoneme_fixtures(dir: &Path) -> PathBuf {
    let mut rows = String::from("segment_id,path,kind,label,speaker_group\n");
    for group in ["male", "female"] {
        for (label, freq) in [("aa", 300.0), ("oo", 1800.0)] {
            for i in 0..3 {
                let name = format!("{group}-{label}-{i}.wav");
                let buf = synth::sine(16000, 0.3, freq + i as f64 * 2.0, 0.6);
                write_wav_16bit(dir.join(&name), &buf.samples, 16000).unwrap();
                rows.push_str(&format!("{group}-{label}-{i},{name},phoneme,{label},{group}\n"));
            }
        }
    }
    let manifest = dir.join("phonemes.csv");
    fs::write(&manifest, rows).unwrap();
    manifest
}
