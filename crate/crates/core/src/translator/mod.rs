//! A small trainable translator: an EM-trained word lexicon, an add-α
//! bigram language model over the target side, and a monotone beam-search
//! decoder that returns n-best lists scored by average log-likelihood.
//!
//! Training persists a checkpoint after every EM iteration; later
//! checkpoints fit the training corpus at least as well as earlier ones.

mod checkpoint;
mod decode;
mod lexicon;
mod lm;
mod train;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub use checkpoint::{
    load_checkpoint, load_series, save_checkpoint, save_series, Checkpoint, CheckpointSeries,
};
pub use decode::{decode_nbest, exhaustive_nbest, BeamParams, Hypothesis, MAX_EXHAUSTIVE_SPACE};
pub use lexicon::LexiconTable;
pub use lm::BigramLm;
pub use train::{corpus_loglikelihood, train_toy, TrainOptions, Trained};

/// Probabilities are clamped to this value before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Emission log-probability of copying an unknown source word through.
pub const UNKNOWN_WORD_LOGPROB: f64 = -10.0;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub(crate) fn floored_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Rounds to 12 significant digits so the value survives a decimal round
/// trip through the checkpoint files bit-for-bit.
pub(crate) fn quantize(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// source → target
    Forward,
    /// target → source
    Backward,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Backward => "bwd",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fwd" | "forward" => Ok(Direction::Forward),
            "bwd" | "backward" => Ok(Direction::Backward),
            other => Err(format!("unknown direction {other:?} (expected fwd or bwd)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranslatorError {
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("training corpus has no usable sentence pairs")]
    EmptyCorpus,
    #[error("invalid beam parameters: {0}")]
    InvalidParams(String),
    #[error("search space of {size} hypotheses exceeds the exhaustive limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("{}: missing checkpoint file", .0.display())]
    MissingFile(PathBuf),
    #[error("{}:{line}: {message}", .path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: checksum mismatch (expected {expected}, computed {actual})", .path.display())]
    Integrity {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("invalid checkpoint series: {0}")]
    Series(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, TranslatorError>;
