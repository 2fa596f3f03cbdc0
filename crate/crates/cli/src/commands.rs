//! Subcommand implementations. Segments are analyzed in parallel and every
//! aggregate is sorted by segment_id before writing, so output bytes never
//! depend on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use prosodia_core::audio::{load_wav, AudioError};
use prosodia_core::corpus::{self, CorpusEntry, CorpusError, EntryKind};
use prosodia_core::features::{
    append_deltas, compute_mfcc, compute_plp, export_features_csv, FeatureMatrix, FeatureScheme,
    MfccConfig, PlpConfig,
};
use prosodia_core::formant::{self, SpeakerGroup};
use prosodia_core::hmm::{self, PhonemeSample};
use prosodia_core::pitch::{estimate_pitch, DEFAULT_F_MAX, DEFAULT_F_MIN};
use prosodia_core::prosody::{
    self, evaluate_agreement, mean_pvq, PvqReport, DEFAULT_MARK_BOUNDARY,
};

#[derive(Debug)]
pub enum CliError {
    /// Malformed input or configuration; maps to exit code 2.
    Input(String),
    /// A segment failed to analyze; maps to exit code 1.
    Analysis(String),
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn analysis<E: std::fmt::Display>(segment: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Analysis(format!("segment '{segment}': {e}"))
}

fn load_entry_audio(entry: &CorpusEntry) -> Result<prosodia_core::AudioBuffer, CliError> {
    load_wav(&entry.path)
        .map_err(|e| CliError::Input(format!("{}: {e}", entry.path.display())))
}

pub fn intonation(
    manifest_path: &Path,
    labels_path: Option<&Path>,
    threshold: f64,
    expected_rate: Option<u32>,
    out: &Path,
) -> Result<(), CliError> {
    if threshold <= 0.0 {
        return Err(CliError::Input("threshold must be positive".into()));
    }
    let manifest = corpus::load_manifest(manifest_path)?;
    let entries: Vec<&CorpusEntry> = manifest.of_kind(EntryKind::Presentation).collect();
    if entries.is_empty() {
        return Err(CliError::Input("manifest has no presentation entries".into()));
    }

    let mut reports: Vec<(String, PvqReport)> = entries
        .par_iter()
        .map(|entry| {
            let buf = load_entry_audio(entry)?;
            if let Some(rate) = expected_rate {
                if buf.sample_rate != rate {
                    return Err(CliError::Input(format!(
                        "{}: sample rate {} does not match expected {rate}",
                        entry.path.display(),
                        buf.sample_rate
                    )));
                }
            }
            let contour = estimate_pitch(&buf, DEFAULT_F_MIN, DEFAULT_F_MAX)
                .map_err(analysis(&entry.segment_id))?;
            let report = prosody::compute_pvq_with(&contour, threshold)
                .map_err(analysis(&entry.segment_id))?;
            Ok((entry.segment_id.clone(), report))
        })
        .collect::<Result<_, CliError>>()?;
    reports.sort_by(|a, b| a.0.cmp(&b.0));

    fs::create_dir_all(out)?;
    let plain_rows: Vec<(String, PvqReport, Option<(f64, bool)>)> = reports
        .iter()
        .map(|(id, r)| (id.clone(), r.clone(), None))
        .collect();
    fs::write(out.join("pvq.csv"), prosody::export_segments_csv(&plain_rows))?;
    eprintln!("wrote {}", out.join("pvq.csv").display());

    if let Some(labels_path) = labels_path {
        let labels = corpus::load_perception_labels(labels_path, &manifest)?;
        let agreement = evaluate_agreement(&reports, &labels, threshold, DEFAULT_MARK_BOUNDARY)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        let rows: Vec<(String, PvqReport, Option<(f64, bool)>)> = reports
            .iter()
            .zip(&agreement.per_segment)
            .map(|((id, r), seg)| (id.clone(), r.clone(), Some((seg.average_mark, seg.agree))))
            .collect();
        fs::write(out.join("agreement.csv"), prosody::export_segments_csv(&rows))?;
        eprintln!("wrote {}", out.join("agreement.csv").display());
        println!("error_rate={}", agreement.error_rate);
    }
    Ok(())
}

pub fn formants(manifest_path: &Path, out: &Path) -> Result<(), CliError> {
    let manifest = corpus::load_manifest(manifest_path)?;
    let entries: Vec<&CorpusEntry> = manifest.of_kind(EntryKind::Phoneme).collect();
    if entries.is_empty() {
        return Err(CliError::Input("manifest has no phoneme entries".into()));
    }
    let mut rows: Vec<String> = entries
        .par_iter()
        .map(|entry| {
            let buf = load_entry_audio(entry)?;
            let est = formant::estimate_formants(&buf).map_err(analysis(&entry.segment_id))?;
            Ok(format!(
                "{},{},{},{:.1},{:.1},{:.1}",
                entry.segment_id, entry.label, entry.speaker_group, est.f1, est.f2, est.f3
            ))
        })
        .collect::<Result<_, CliError>>()?;
    rows.sort();

    fs::create_dir_all(out)?;
    let mut csv = String::from("segment_id,label,group,f1,f2,f3\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    fs::write(out.join("formants.csv"), csv)?;

    let mut reference = formant::reference_table(SpeakerGroup::Male);
    reference.extend(formant::reference_table(SpeakerGroup::Female));
    let chart = formant::emit_vowel_chart(&reference)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    fs::write(out.join("reference_chart.csv"), chart)?;
    eprintln!("wrote formants.csv and reference_chart.csv to {}", out.display());
    Ok(())
}

fn extract_features(
    buf: &prosodia_core::AudioBuffer,
    scheme: FeatureScheme,
) -> Result<FeatureMatrix, prosodia_core::features::FeatureError> {
    let statics = match scheme {
        FeatureScheme::Mfcc => compute_mfcc(buf, &MfccConfig::default())?,
        FeatureScheme::Plp => compute_plp(buf, &PlpConfig::default())?,
    };
    Ok(append_deltas(&statics))
}

pub fn features(manifest_path: &Path, scheme: FeatureScheme, out: &Path) -> Result<(), CliError> {
    let manifest = corpus::load_manifest(manifest_path)?;
    if manifest.entries.is_empty() {
        return Err(CliError::Input("manifest is empty".into()));
    }
    let feature_dir = out.join("features");
    fs::create_dir_all(&feature_dir)?;
    let written: Vec<String> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let buf = load_entry_audio(entry)?;
            let m = extract_features(&buf, scheme).map_err(analysis(&entry.segment_id))?;
            let path = feature_dir.join(format!("{}.csv", entry.segment_id));
            fs::write(&path, export_features_csv(&m))?;
            Ok(entry.segment_id.clone())
        })
        .collect::<Result<_, CliError>>()?;
    eprintln!("wrote {} feature files to {}", written.len(), feature_dir.display());
    Ok(())
}

fn phoneme_samples(
    manifest: &corpus::CorpusManifest,
    scheme: FeatureScheme,
) -> Result<Vec<PhonemeSample>, CliError> {
    let entries: Vec<&CorpusEntry> = manifest.of_kind(EntryKind::Phoneme).collect();
    if entries.is_empty() {
        return Err(CliError::Input("manifest has no phoneme entries".into()));
    }
    let mut samples: Vec<PhonemeSample> = entries
        .par_iter()
        .map(|entry| {
            let buf = load_entry_audio(entry)?;
            let features = extract_features(&buf, scheme).map_err(analysis(&entry.segment_id))?;
            Ok(PhonemeSample {
                segment_id: entry.segment_id.clone(),
                label: entry.label.clone(),
                group: entry.speaker_group,
                features,
            })
        })
        .collect::<Result<_, CliError>>()?;
    samples.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
    Ok(samples)
}

pub fn hmm_train(
    manifest_path: &Path,
    scheme: FeatureScheme,
    topologies: &[usize],
    out: &Path,
) -> Result<(), CliError> {
    let manifest = corpus::load_manifest(manifest_path)?;
    let samples = phoneme_samples(&manifest, scheme)?;
    let mut by_label: BTreeMap<&str, Vec<FeatureMatrix>> = BTreeMap::new();
    for s in &samples {
        by_label.entry(&s.label).or_default().push(s.features.clone());
    }
    for &n in topologies {
        let models: Result<Vec<_>, _> = by_label
            .iter()
            .map(|(label, feats)| hmm::train_model(label, feats, n))
            .collect();
        let set = models
            .and_then(hmm::HmmSet::new)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        let dir = out.join(format!("models-{n}"));
        hmm::save_models(&set, &dir).map_err(|e| CliError::Input(e.to_string()))?;
        eprintln!("wrote {} models to {}", set.models.len(), dir.display());
    }
    Ok(())
}

pub fn hmm_eval(
    manifest_path: &Path,
    scheme: FeatureScheme,
    topologies: &[usize],
    out: &Path,
) -> Result<(), CliError> {
    let manifest = corpus::load_manifest(manifest_path)?;
    let samples = phoneme_samples(&manifest, scheme)?;
    let mut matrices = Vec::new();
    for &n in topologies {
        let rates = hmm::evaluate_rates(&samples, n).map_err(|e| match e {
            hmm::HmmError::InsufficientData(_) => CliError::Input(e.to_string()),
            other => CliError::Analysis(other.to_string()),
        })?;
        matrices.push(rates);
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("rates.csv"), hmm::export_rates_csv(&matrices))?;
    eprintln!("wrote {}", out.join("rates.csv").display());
    Ok(())
}

/// Scatter and boundary data from an agreement CSV written by `intonation`.
pub fn report(results_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(results_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", results_path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("segment_id,pvq,") {
        return Err(CliError::Input(format!(
            "{}: not a per-segment results CSV",
            results_path.display()
        )));
    }
    let mut scatter = String::from("segment_id,average_mark,pvq\n");
    let mut pvqs = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 8 || fields[5].is_empty() {
            return Err(CliError::Input(format!(
                "{} line {}: missing average_mark (run intonation with --labels)",
                results_path.display(),
                idx + 2
            )));
        }
        let pvq: f64 = fields[1].parse().map_err(|e| {
            CliError::Input(format!("{} line {}: {e}", results_path.display(), idx + 2))
        })?;
        scatter.push_str(&format!("{},{},{pvq}\n", fields[0], fields[5]));
        pvqs.push(pvq);
    }
    if pvqs.is_empty() {
        return Err(CliError::Input("results file has no segments".into()));
    }
    let reports: Vec<PvqReport> = pvqs
        .iter()
        .map(|&p| PvqReport {
            mean_f0: 0.0,
            std_f0: 0.0,
            pvq: p,
            voiced_fraction: 0.0,
            label: prosody::classify_intonation(p, prosody::DEFAULT_PVQ_THRESHOLD),
        })
        .collect();
    let mean = mean_pvq(&reports).map_err(|e| CliError::Analysis(e.to_string()))?;

    fs::create_dir_all(out)?;
    fs::write(out.join("scatter.csv"), scatter)?;
    let boundary = format!("name,value\nmark_boundary,{DEFAULT_MARK_BOUNDARY}\nmean_pvq,{mean}\n");
    fs::write(out.join("boundary.csv"), boundary)?;
    eprintln!("wrote scatter.csv and boundary.csv to {}", out.display());
    Ok(())
}
