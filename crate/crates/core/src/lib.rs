//! Weighted macro-F1 scoring for prompts with many weighted reference
//! translations, and three ways of generating high-coverage translation
//! sets from a small trainable translator:
//!
//! * `nbest`: the n best beam-search hypotheses of one checkpoint
//! * `paraphrase`: round-trip paraphrasing through a backward model
//! * `ensemble`: the de-duplicated union over the last m checkpoints
//!
//! ```
//! use staple_forge_core::corpus::{parse_gold, NormalizationPolicy, PredictionSet};
//! use staple_forge_core::metrics::score_corpus;
//!
//! let policy = NormalizationPolicy::DEFAULT;
//! let gold = parse_gold("q1|hello\nolá|0.6\noi|0.4\n".as_bytes(), &policy).unwrap();
//! let pred = vec![PredictionSet::new("q1", vec!["Olá!".to_string()])];
//! let score = score_corpus(&gold, &pred, &policy).unwrap();
//! assert!((score.macro_f1 - 0.75).abs() < 1e-12);
//! ```

pub mod corpus;
pub mod methods;
pub mod metrics;
pub mod textproc;
pub mod translator;

pub use corpus::{GoldSet, NormalizationPolicy, PredictionSet, Prompt, WeightedTranslation};
pub use methods::{Generation, GenerationMethod, MethodParams, MethodRegistry, Models};
pub use metrics::{CorpusScore, PromptScore};
pub use textproc::TokenSeq;
pub use translator::{BeamParams, Checkpoint, CheckpointSeries, Direction, Hypothesis};
