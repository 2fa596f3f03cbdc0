//! Command-line front end for the prosodia toolkit.
//!
//! Exit codes: 0 on success, 1 on analysis failure, 2 on malformed input or
//! configuration. Logs go to standard error, data to files and standard out.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prosodia_core::features::FeatureScheme;

#[derive(Parser)]
#[command(
    name = "prosodia",
    about = "Speech prosody analysis: intonation scoring, formants, features and phoneme HMMs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Mfcc,
    Plp,
}

impl From<SchemeArg> for FeatureScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Mfcc => FeatureScheme::Mfcc,
            SchemeArg::Plp => FeatureScheme::Plp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmittingArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl EmittingArg {
    fn topologies(self) -> Vec<usize> {
        match self {
            EmittingArg::One => vec![1],
            EmittingArg::Two => vec![2],
            EmittingArg::Both => vec![1, 2],
        }
    }
}

#[derive(Args)]
struct ManifestOut {
    /// Corpus manifest CSV (segment_id,path,kind,label,speaker_group)
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for report files
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Score intonation per segment via the pitch variation quotient
    Intonation {
        #[command(flatten)]
        io: ManifestOut,
        /// Perception-test labels CSV (segment_id,rater_id,mark)
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Monotone/dynamic boundary on the quotient
        #[arg(long, default_value_t = 0.16)]
        threshold: f64,
        /// Reject audio whose sample rate differs from this value
        #[arg(long)]
        sample_rate: Option<u32>,
    },
    /// Estimate F1-F3 of vowel segments and emit vowel-chart data
    Formants {
        #[command(flatten)]
        io: ManifestOut,
    },
    /// Extract 39-dimensional MFCC or PLP features per segment
    Features {
        #[command(flatten)]
        io: ManifestOut,
        #[arg(long, value_enum, default_value = "mfcc")]
        scheme: SchemeArg,
    },
    /// Train phoneme HMMs and persist them as flat files
    HmmTrain {
        #[command(flatten)]
        io: ManifestOut,
        #[arg(long, value_enum, default_value = "mfcc")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "both")]
        emitting_states: EmittingArg,
    },
    /// Fill the train/test speaker-group rate table
    HmmEval {
        #[command(flatten)]
        io: ManifestOut,
        #[arg(long, value_enum, default_value = "mfcc")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "both")]
        emitting_states: EmittingArg,
    },
    /// Turn intonation results into plot-ready scatter and boundary data
    Report {
        /// Per-segment agreement CSV produced by `intonation` with labels
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Intonation {
            io,
            labels,
            threshold,
            sample_rate,
        } => commands::intonation(&io.manifest, labels.as_deref(), threshold, sample_rate, &io.out),
        Command::Formants { io } => commands::formants(&io.manifest, &io.out),
        Command::Features { io, scheme } => {
            commands::features(&io.manifest, scheme.into(), &io.out)
        }
        Command::HmmTrain {
            io,
            scheme,
            emitting_states,
        } => commands::hmm_train(&io.manifest, scheme.into(), &emitting_states.topologies(), &io.out),
        Command::HmmEval {
            io,
            scheme,
            emitting_states,
        } => commands::hmm_eval(&io.manifest, scheme.into(), &emitting_states.topologies(), &io.out),
        Command::Report { results, out } => commands::report(&results, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Analysis(msg)) => {
            eprintln!("analysis error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::CliError::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
    }
}
