//! Speech prosody analysis toolkit.
//!
//! Pipeline: WAV ingestion ([`audio`]) feeds pitch tracking ([`pitch`]) and
//! the pitch-variation intonation score ([`prosody`]), vowel formant
//! estimation ([`formant`]), MFCC/PLP feature extraction ([`features`]) and
//! Gaussian-emission phoneme HMMs with Viterbi scoring ([`hmm`]). The
//! [`corpus`] module handles manifests, perception-test labels and
//! train/test splits; [`synth`] generates deterministic test signals.

pub mod audio;
pub mod corpus;
pub mod dsp;
pub mod features;
pub mod formant;
pub mod hmm;
pub mod pitch;
pub mod prosody;
pub mod synth;

pub use audio::{AudioBuffer, FrameSequence};
pub use corpus::{CorpusEntry, CorpusManifest, TrainTestSplit};
pub use features::{FeatureMatrix, FeatureScheme, PhonemeStats};
pub use formant::{FormantEstimate, SpeakerGroup, VowelChartEntry};
pub use hmm::{HmmSet, PhonemeHmm, PhonemeSample, RateMatrix, RecognitionResult};
pub use pitch::PitchContour;
pub use prosody::{AgreementReport, Intonation, PerceptionRecord, PvqReport};
