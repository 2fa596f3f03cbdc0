//! Corpus manifests, perception-test labels and train/test splitting.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::formant::SpeakerGroup;
use crate::prosody::PerceptionRecord;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate segment id '{0}'")]
    DuplicateId(String),
    #[error("referenced audio file missing: {0}")]
    MissingFile(PathBuf),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("mark {mark} out of range 1..=3 at line {line}")]
    MarkOutOfRange { mark: i64, line: usize },
    #[error("perception label references unknown segment '{0}'")]
    UnknownSegment(String),
    #[error("no entries for speaker group '{0}'")]
    EmptyGroup(SpeakerGroup),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Phoneme,
    Presentation,
}

impl std::fmt::Display for EntryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntryKind::Phoneme => write!(f, "phoneme"),
            EntryKind::Presentation => write!(f, "presentation"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub segment_id: String,
    pub path: PathBuf,
    pub kind: EntryKind,
    pub label: String,
    pub speaker_group: SpeakerGroup,
}

#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: Vec<CorpusEntry>,
    pub test: Vec<CorpusEntry>,
}

pub const MANIFEST_HEADER: &str = "segment_id,path,kind,label,speaker_group";
pub const PERCEPTION_HEADER: &str = "segment_id,rater_id,mark";

impl CorpusManifest {
    pub fn ids(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.segment_id.as_str()).collect()
    }

    pub fn of_kind(&self, kind: EntryKind) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    /// Normalized CSV form; loading then re-serializing is idempotent.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.segment_id,
                e.path.display(),
                e.kind,
                e.label,
                e.speaker_group
            ));
        }
        out
    }
}

/// Load and validate a manifest CSV. Relative audio paths are resolved
/// against the manifest's own directory when checking existence.
pub fn load_manifest<P: AsRef<Path>>(path: P) -> Result<CorpusManifest, CorpusError> {
    let text = fs::read_to_string(&path)?;
    let base = path.as_ref().parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<CorpusManifest, CorpusError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
        other => {
            return Err(CorpusError::MalformedRow {
                line: 1,
                reason: format!(
                    "expected header '{MANIFEST_HEADER}', got '{}'",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let segment_id = fields[0].trim().to_string();
        if segment_id.is_empty() {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                reason: "empty segment_id".into(),
            });
        }
        if !seen.insert(segment_id.clone()) {
            return Err(CorpusError::DuplicateId(segment_id));
        }
        let kind = match fields[2].trim() {
            "phoneme" => EntryKind::Phoneme,
            "presentation" => EntryKind::Presentation,
            other => {
                return Err(CorpusError::MalformedRow {
                    line: line_no,
                    reason: format!("unknown kind '{other}'"),
                })
            }
        };
        let speaker_group: SpeakerGroup =
            fields[4].trim().parse().map_err(|reason| CorpusError::MalformedRow {
                line: line_no,
                reason,
            })?;
        let raw_path = PathBuf::from(fields[1].trim());
        let resolved = if raw_path.is_absolute() {
            raw_path.clone()
        } else {
            base.join(&raw_path)
        };
        if !resolved.exists() {
            return Err(CorpusError::MissingFile(resolved));
        }
        entries.push(CorpusEntry {
            segment_id,
            path: resolved,
            kind,
            label: fields[3].trim().to_string(),
            speaker_group,
        });
    }
    Ok(CorpusManifest { entries })
}

/// Load perception marks and group them by segment. Every referenced
/// segment must exist in the manifest.
pub fn load_perception_labels<P: AsRef<Path>>(
    path: P,
    manifest: &CorpusManifest,
) -> Result<Vec<PerceptionRecord>, CorpusError> {
    parse_perception_labels(&fs::read_to_string(path)?, manifest)
}

pub fn parse_perception_labels(
    text: &str,
    manifest: &CorpusManifest,
) -> Result<Vec<PerceptionRecord>, CorpusError> {
    let known = manifest.ids();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PERCEPTION_HEADER => {}
        other => {
            return Err(CorpusError::MalformedRow {
                line: 1,
                reason: format!(
                    "expected header '{PERCEPTION_HEADER}', got '{}'",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    // keep first-appearance order of segments
    let mut order: Vec<String> = Vec::new();
    let mut marks: std::collections::BTreeMap<String, Vec<u8>> = Default::default();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let segment_id = fields[0].trim();
        if !known.contains(segment_id) {
            return Err(CorpusError::UnknownSegment(segment_id.to_string()));
        }
        let mark: i64 = fields[2].trim().parse().map_err(|e| CorpusError::MalformedRow {
            line: line_no,
            reason: format!("bad mark: {e}"),
        })?;
        if !(1..=3).contains(&mark) {
            return Err(CorpusError::MarkOutOfRange { mark, line: line_no });
        }
        if !marks.contains_key(segment_id) {
            order.push(segment_id.to_string());
        }
        marks.entry(segment_id.to_string()).or_default().push(mark as u8);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let m = marks.remove(&id).expect("populated above");
            PerceptionRecord::new(id, m)
        })
        .collect())
}

/// Split by speaker group. Distinct groups: all of train_group trains and
/// all of test_group tests. Equal groups: deterministic 70/30 split of that
/// group in segment_id order.
pub fn split_by_group(
    manifest: &CorpusManifest,
    train_group: SpeakerGroup,
    test_group: SpeakerGroup,
) -> Result<TrainTestSplit, CorpusError> {
    let of = |g: SpeakerGroup| -> Vec<CorpusEntry> {
        manifest
            .entries
            .iter()
            .filter(|e| e.speaker_group == g)
            .cloned()
            .collect()
    };
    let train_pool = of(train_group);
    if train_pool.is_empty() {
        return Err(CorpusError::EmptyGroup(train_group));
    }
    if train_group != test_group {
        let test_pool = of(test_group);
        if test_pool.is_empty() {
            return Err(CorpusError::EmptyGroup(test_group));
        }
        return Ok(TrainTestSplit {
            train: train_pool,
            test: test_pool,
        });
    }
    let mut pool = train_pool;
    pool.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
    let n_train = (pool.len() * 7) / 10;
    if n_train == 0 || n_train == pool.len() {
        return Err(CorpusError::EmptyGroup(train_group));
    }
    let test = pool.split_off(n_train);
    Ok(TrainTestSplit { train: pool, test })
}
