//! Left-to-right Gaussian-emission phoneme HMMs: training from split
//! statistics, Viterbi log-likelihood scoring, maximum-likelihood
//! recognition and the gender-split evaluation harness.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::features::{compute_stats, FeatureMatrix, VARIANCE_FLOOR};
use crate::formant::SpeakerGroup;

pub const FEATURE_DIM: usize = 39;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("empty input")]
    EmptyInput,
    #[error("sample has {got} frames, need at least {need}")]
    SampleTooShort { got: usize, need: usize },
    #[error("empty observation sequence")]
    EmptyObservation,
    #[error("observation dimension {got} does not match model dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("no models in set")]
    EmptyModelSet,
    #[error("insufficient data for cell {0}")]
    InsufficientData(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    MalformedModel(String),
}

#[derive(Debug, Clone)]
pub struct GaussianState {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianState {
    /// Diagonal-Gaussian log density; variances are floored at training time.
    pub fn log_density(&self, obs: &[f64]) -> f64 {
        debug_assert_eq!(obs.len(), self.mean.len());
        let mut acc = 0.0;
        for ((&x, &m), &v) in obs.iter().zip(&self.mean).zip(&self.variance) {
            let d = x - m;
            acc += (2.0 * PI * v).ln() + d * d / v;
        }
        -0.5 * acc
    }
}

/// Strictly left-to-right HMM: non-emitting entry state, 1 or 2 emitting
/// states, non-emitting absorbing exit state. State 0 is the entry, states
/// 1..=n_emitting emit, state n_emitting+1 is the exit.
#[derive(Debug, Clone)]
pub struct PhonemeHmm {
    pub label: String,
    pub n_emitting: usize,
    pub transitions: Vec<Vec<f64>>,
    pub emissions: Vec<GaussianState>,
}

impl PhonemeHmm {
    pub fn dim(&self) -> usize {
        self.emissions[0].mean.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_emitting + 2
    }

    fn log_transition(&self, from: usize, to: usize) -> f64 {
        let p = self.transitions[from][to];
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone)]
pub struct HmmSet {
    pub models: BTreeMap<String, PhonemeHmm>,
    pub n_emitting: usize,
}

impl HmmSet {
    pub fn new(models: Vec<PhonemeHmm>) -> Result<Self, HmmError> {
        if models.is_empty() {
            return Err(HmmError::EmptyModelSet);
        }
        let n_emitting = models[0].n_emitting;
        let dim = models[0].dim();
        for m in &models {
            assert_eq!(m.n_emitting, n_emitting, "mixed topology sizes in set");
            assert_eq!(m.dim(), dim, "mixed feature dimensions in set");
        }
        Ok(HmmSet {
            models: models.into_iter().map(|m| (m.label.clone(), m)).collect(),
            n_emitting,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RecognitionResult {
    pub predicted: String,
    pub log_likelihoods: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RateCell {
    pub train_group: SpeakerGroup,
    pub test_group: SpeakerGroup,
    pub n_emitting: usize,
    pub rate: f64,
    pub n_correct: usize,
    pub n_total: usize,
}

#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub cells: Vec<RateCell>,
}

/// A labeled phoneme exemplar for training and evaluation.
#[derive(Debug, Clone)]
pub struct PhonemeSample {
    pub segment_id: String,
    pub label: String,
    pub group: SpeakerGroup,
    pub features: FeatureMatrix,
}

fn fixed_transitions(n_emitting: usize) -> Vec<Vec<f64>> {
    let n = n_emitting + 2;
    let mut t = vec![vec![0.0; n]; n];
    t[0][1] = 1.0;
    for s in 1..=n_emitting {
        t[s][s] = 0.5;
        t[s][s + 1] = 0.5;
    }
    t[n - 1][n - 1] = 1.0; // absorbing exit
    t
}

/// Train a phoneme model from plain statistics.
///
/// With one emitting state all frames of all samples feed a single Gaussian.
/// With two, each sample is split at its temporal midpoint; first halves
/// train the first emitting state, second halves the second. Emitting-state
/// transitions stay fixed at 0.5 self-loop / 0.5 advance.
pub fn train_model(
    label: &str,
    samples: &[FeatureMatrix],
    n_emitting: usize,
) -> Result<PhonemeHmm, HmmError> {
    assert!(n_emitting == 1 || n_emitting == 2, "topology is 1 or 2 emitting states");
    if samples.is_empty() {
        return Err(HmmError::EmptyInput);
    }
    for s in samples {
        if s.rows.len() < n_emitting {
            return Err(HmmError::SampleTooShort {
                got: s.rows.len(),
                need: n_emitting,
            });
        }
    }
    let emissions = if n_emitting == 1 {
        let frames: Vec<Vec<f64>> = samples.iter().flat_map(|s| s.rows.clone()).collect();
        let stats = compute_stats(label, &frames).expect("non-empty by construction");
        vec![GaussianState {
            mean: stats.mean,
            variance: stats.variance,
        }]
    } else {
        let mut first: Vec<Vec<f64>> = Vec::new();
        let mut second: Vec<Vec<f64>> = Vec::new();
        for s in samples {
            let mid = (s.rows.len() / 2).max(1);
            first.extend(s.rows[..mid].iter().cloned());
            second.extend(s.rows[mid..].iter().cloned());
        }
        [first, second]
            .iter()
            .map(|frames| {
                let stats = compute_stats(label, frames).expect("halves are non-empty");
                GaussianState {
                    mean: stats.mean,
                    variance: stats.variance,
                }
            })
            .collect()
    };
    Ok(PhonemeHmm {
        label: label.to_string(),
        n_emitting,
        transitions: fixed_transitions(n_emitting),
        emissions,
    })
}

/// Max-path log-likelihood of the observation sequence under the model,
/// including the entry transition and the final hop into the exit state.
pub fn viterbi_score(model: &PhonemeHmm, obs: &FeatureMatrix) -> Result<f64, HmmError> {
    if obs.rows.is_empty() {
        return Err(HmmError::EmptyObservation);
    }
    if obs.dim != model.dim() {
        return Err(HmmError::DimensionMismatch {
            got: obs.dim,
            want: model.dim(),
        });
    }
    let n = model.n_emitting;
    // delta over emitting states only; entry/exit handled at the boundaries
    let mut delta: Vec<f64> = (0..n)
        .map(|s| model.log_transition(0, s + 1) + model.emissions[s].log_density(&obs.rows[0]))
        .collect();
    for row in &obs.rows[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        for (s, slot) in next.iter_mut().enumerate() {
            let b = model.emissions[s].log_density(row);
            let mut best = f64::NEG_INFINITY;
            for (sp, &d) in delta.iter().enumerate() {
                let t = model.log_transition(sp + 1, s + 1);
                if d + t > best {
                    best = d + t;
                }
            }
            *slot = best + b;
        }
        delta = next;
    }
    let exit = model.n_states() - 1;
    Ok(delta
        .iter()
        .enumerate()
        .map(|(s, &d)| d + model.log_transition(s + 1, exit))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Score every model and pick the maximum-likelihood phoneme; exact ties go
/// to the lexicographically first label.
pub fn recognize(set: &HmmSet, obs: &FeatureMatrix) -> Result<RecognitionResult, HmmError> {
    if set.models.is_empty() {
        return Err(HmmError::EmptyModelSet);
    }
    let mut log_likelihoods = BTreeMap::new();
    for (label, model) in &set.models {
        log_likelihoods.insert(label.clone(), viterbi_score(model, obs)?);
    }
    let predicted = log_likelihoods
        .iter()
        .fold(None::<(&String, f64)>, |best, (label, &ll)| match best {
            Some((_, b)) if ll <= b => best,
            _ => Some((label, ll)),
        })
        .expect("non-empty set")
        .0
        .clone();
    Ok(RecognitionResult {
        predicted,
        log_likelihoods,
    })
}

/// Deterministic same-group split: per phoneme, 70% of segments (sorted by
/// segment id) train, the rest test.
fn split_same_group<'a>(
    segments: &[&'a PhonemeSample],
) -> (Vec<&'a PhonemeSample>, Vec<&'a PhonemeSample>) {
    let mut by_label: BTreeMap<&str, Vec<&PhonemeSample>> = BTreeMap::new();
    for s in segments {
        by_label.entry(&s.label).or_default().push(s);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut group) in by_label {
        group.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
        let n_train = ((group.len() * 7) / 10).max(1).min(group.len());
        train.extend(group[..n_train].iter().copied());
        test.extend(group[n_train..].iter().copied());
    }
    (train, test)
}

/// Fill the four train-group/test-group cells with recognition rates.
pub fn evaluate_rates(
    segments: &[PhonemeSample],
    n_emitting: usize,
) -> Result<RateMatrix, HmmError> {
    use SpeakerGroup::{Female, Male};
    let pairs = [(Female, Female), (Male, Male), (Male, Female), (Female, Male)];
    let mut cells = Vec::with_capacity(4);
    for (train_group, test_group) in pairs {
        let cell_name = format!("{train_group}/{test_group}");
        let (train, test): (Vec<&PhonemeSample>, Vec<&PhonemeSample>) =
            if train_group == test_group {
                let of_group: Vec<&PhonemeSample> =
                    segments.iter().filter(|s| s.group == train_group).collect();
                split_same_group(&of_group)
            } else {
                (
                    segments.iter().filter(|s| s.group == train_group).collect(),
                    segments.iter().filter(|s| s.group == test_group).collect(),
                )
            };
        if train.is_empty() || test.is_empty() {
            return Err(HmmError::InsufficientData(cell_name));
        }
        let mut by_label: BTreeMap<&str, Vec<FeatureMatrix>> = BTreeMap::new();
        for s in &train {
            by_label.entry(&s.label).or_default().push(s.features.clone());
        }
        for s in &test {
            if !by_label.contains_key(s.label.as_str()) {
                return Err(HmmError::InsufficientData(format!(
                    "{cell_name}: phoneme '{}' has no training data",
                    s.label
                )));
            }
        }
        let models: Result<Vec<PhonemeHmm>, HmmError> = by_label
            .iter()
            .map(|(label, samples)| train_model(label, samples, n_emitting))
            .collect();
        let set = HmmSet::new(models?)?;
        let mut correct = 0;
        for s in &test {
            if recognize(&set, &s.features)?.predicted == s.label {
                correct += 1;
            }
        }
        cells.push(RateCell {
            train_group,
            test_group,
            n_emitting,
            rate: correct as f64 / test.len() as f64 * 100.0,
            n_correct: correct,
            n_total: test.len(),
        });
    }
    Ok(RateMatrix { cells })
}

/// CSV mirroring the rate table layout, one row per group pair.
pub fn export_rates_csv(matrices: &[RateMatrix]) -> String {
    let mut out = String::from("train_group,test_group,emitting_states,recognition_rate\n");
    for m in matrices {
        for c in &m.cells {
            out.push_str(&format!(
                "{},{},{},{:.2}\n",
                c.train_group, c.test_group, c.n_emitting, c.rate
            ));
        }
    }
    out
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Serialize a model as versioned decimal text.
pub fn model_to_string(model: &PhonemeHmm) -> String {
    let mut out = format!(
        "phoneme-hmm v{MODEL_FORMAT_VERSION}\nlabel {}\nn_emitting {}\ndim {}\n",
        model.label,
        model.n_emitting,
        model.dim()
    );
    out.push_str("transitions\n");
    for row in &model.transitions {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    for (i, g) in model.emissions.iter().enumerate() {
        out.push_str(&format!("state {i}\nmean "));
        out.push_str(&join_floats(&g.mean));
        out.push_str("\nvariance ");
        out.push_str(&join_floats(&g.variance));
        out.push('\n');
    }
    out
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>, HmmError> {
    s.split_whitespace()
        .map(|f| f.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| HmmError::MalformedModel(format!("{what}: {e}")))
}

pub fn model_from_string(text: &str) -> Result<PhonemeHmm, HmmError> {
    let bad = |m: &str| HmmError::MalformedModel(m.to_string());
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if header != format!("phoneme-hmm v{MODEL_FORMAT_VERSION}") {
        return Err(bad(&format!("unsupported header '{header}'")));
    }
    let field = |line: Option<&str>, key: &str| -> Result<String, HmmError> {
        line.and_then(|l| l.strip_prefix(key))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| bad(&format!("expected '{key}' line")))
    };
    let label = field(lines.next(), "label ")?;
    let n_emitting: usize = field(lines.next(), "n_emitting ")?
        .parse()
        .map_err(|_| bad("bad n_emitting"))?;
    let dim: usize = field(lines.next(), "dim ")?
        .parse()
        .map_err(|_| bad("bad dim"))?;
    if lines.next() != Some("transitions") {
        return Err(bad("expected 'transitions' line"));
    }
    let n_states = n_emitting + 2;
    let mut transitions = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let row = parse_floats(lines.next().ok_or_else(|| bad("truncated transitions"))?, "transition row")?;
        if row.len() != n_states {
            return Err(bad("transition row length mismatch"));
        }
        transitions.push(row);
    }
    let mut emissions = Vec::with_capacity(n_emitting);
    for i in 0..n_emitting {
        field(lines.next(), "state ")?;
        let mean = parse_floats(&field(lines.next(), "mean ")?, "mean")?;
        let variance = parse_floats(&field(lines.next(), "variance ")?, "variance")?;
        if mean.len() != dim || variance.len() != dim {
            return Err(bad(&format!("state {i} vector length mismatch")));
        }
        if variance.iter().any(|&v| v < VARIANCE_FLOOR) {
            return Err(bad(&format!("state {i} variance below floor")));
        }
        emissions.push(GaussianState { mean, variance });
    }
    Ok(PhonemeHmm {
        label,
        n_emitting,
        transitions,
        emissions,
    })
}

/// Persist every model of a set as `<label>.hmm` inside `dir`.
pub fn save_models<P: AsRef<Path>>(set: &HmmSet, dir: P) -> Result<(), HmmError> {
    fs::create_dir_all(&dir)?;
    for (label, model) in &set.models {
        fs::write(dir.as_ref().join(format!("{label}.hmm")), model_to_string(model))?;
    }
    Ok(())
}

pub fn load_models<P: AsRef<Path>>(dir: P) -> Result<HmmSet, HmmError> {
    let mut models = Vec::new();
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "hmm"))
        .collect();
    paths.sort();
    for path in paths {
        models.push(model_from_string(&fs::read_to_string(path)?)?);
    }
    HmmSet::new(models)
}
