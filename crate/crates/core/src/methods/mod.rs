//! Translation-set generation methods.
//!
//! Every method implements [`GenerationMethod`] and is looked up by name in
//! a [`MethodRegistry`]. The built-ins are `nbest`, `paraphrase` and
//! `ensemble`; each turns a list of prompts into de-duplicated
//! [`PredictionSet`]s, degrading a failing prompt to an empty set plus a
//! warning instead of aborting the batch.

mod ensemble;
mod nbest;
mod paraphrase;

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{normalize, NormalizationPolicy, Prompt, PredictionSet};
use crate::textproc::{detokenize, preprocess};
use crate::translator::{decode_nbest, BeamParams, Checkpoint, CheckpointSeries, TranslatorError};

pub use ensemble::{multi_checkpoint_predict, EnsembleMethod};
pub use nbest::{nbest_predict, NBestMethod};
pub use paraphrase::{paraphrase_predict, paraphrase_prompt, ParaphraseMethod, ParaphraseTrace};

#[derive(Debug, thiserror::Error)]
pub enum MethodError {
    #[error("invalid method parameters: {0}")]
    InvalidParams(String),
    #[error("method {0:?} needs a backward (target→source) model")]
    MissingBackward(&'static str),
    #[error("m={m} checkpoints requested but the series has only {available}")]
    NotEnoughCheckpoints { m: usize, available: usize },
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error(transparent)]
    Translator(#[from] TranslatorError),
}

pub type Result<T> = std::result::Result<T, MethodError>;

/// Knobs shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    /// Hypotheses kept per forward decode.
    pub n: usize,
    /// Back-translations kept per forward hypothesis (paraphrasing).
    pub n_prime: usize,
    /// Checkpoints in the ensemble.
    pub m: usize,
    pub beam: BeamParams,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            n: 10,
            n_prime: 3,
            m: 6,
            beam: BeamParams::default(),
        }
    }
}

impl MethodParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_prime == 0 || self.m == 0 {
            return Err(MethodError::InvalidParams(format!(
                "n ({}), n_prime ({}) and m ({}) must all be at least 1",
                self.n, self.n_prime, self.m
            )));
        }
        if self.n > self.beam.beam_width || self.n_prime > self.beam.beam_width {
            return Err(MethodError::InvalidParams(format!(
                "n ({}) and n_prime ({}) may not exceed the beam width ({})",
                self.n, self.n_prime, self.beam.beam_width
            )));
        }
        let probe = BeamParams {
            n_best: 1,
            ..self.beam
        };
        probe.validate()?;
        Ok(())
    }

    /// `key=value` rendering used in run manifests.
    pub fn describe(&self) -> String {
        format!(
            "n={} beam={} m={} n_prime={} top_k={} max_len_ratio={}",
            self.n, self.beam.beam_width, self.m, self.n_prime, self.beam.top_k_lexicon, self.beam.max_len_ratio
        )
    }
}

/// The models a method may draw on.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub forward: &'a CheckpointSeries,
    pub backward: Option<&'a Checkpoint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodWarning {
    pub prompt_id: String,
    pub stage: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generation {
    pub sets: Vec<PredictionSet>,
    pub warnings: Vec<MethodWarning>,
}

impl Generation {
    /// `prompt_id<TAB>stage<TAB>message` rows under a header line.
    pub fn render_warnings(&self) -> String {
        let mut out = String::from("prompt_id\tstage\tmessage\n");
        for w in &self.warnings {
            let message = w.message.replace(['\t', '\n'], " ");
            let _ = writeln!(out, "{}\t{}\t{}", w.prompt_id, w.stage, message);
        }
        out
    }
}

pub trait GenerationMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn generate(
        &self,
        models: Models<'_>,
        prompts: &[Prompt],
        params: &MethodParams,
        policy: &NormalizationPolicy,
    ) -> Result<Generation>;
}

#[derive(Default)]
pub struct MethodRegistry {
    methods: Vec<Box<dyn GenerationMethod>>,
}

impl MethodRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `nbest`, `paraphrase` and `ensemble`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Box::new(NBestMethod));
        r.register(Box::new(ParaphraseMethod));
        r.register(Box::new(EnsembleMethod));
        r
    }

    /// Adds a method; a later registration under the same name replaces
    /// the earlier one.
    pub fn register(&mut self, method: Box<dyn GenerationMethod>) {
        self.methods.retain(|m| m.name() != method.name());
        self.methods.push(method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn GenerationMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| MethodError::UnknownMethod(name.to_owned()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }
}

/// Stable de-duplication: the first candidate of each normalization class
/// survives with its original surface form.
pub fn dedup<I, S>(candidates: I, policy: &NormalizationPolicy) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .map(Into::into)
        .filter(|c| seen.insert(normalize(c, policy)))
        .collect()
}

/// Translates one sentence with `ckpt` and returns up to `n` detokenized
/// hypotheses, best first. Hypotheses that detokenize to nothing are dropped.
pub(crate) fn translate_n(
    ckpt: &Checkpoint,
    text: &str,
    n: usize,
    beam: &BeamParams,
) -> std::result::Result<Vec<String>, TranslatorError> {
    let params = BeamParams { n_best: n, ..*beam };
    let hyps = decode_nbest(ckpt, &preprocess(text), &params)?;
    Ok(hyps
        .iter()
        .map(|h| detokenize(&h.tokens))
        .filter(|s| !s.trim().is_empty())
        .collect())
}

/// Per-prompt output of a method before assembly.
pub(crate) struct PromptOutcome {
    pub candidates: Vec<String>,
    pub warnings: Vec<MethodWarning>,
}

/// Runs `per_prompt` over all prompts (in parallel) and assembles the
/// results in input order.
pub(crate) fn run_batch<F>(prompts: &[Prompt], policy: &NormalizationPolicy, per_prompt: F) -> Generation
where
    F: Fn(&Prompt) -> PromptOutcome + Sync,
{
    let outcomes: Vec<PromptOutcome> = prompts.par_iter().map(&per_prompt).collect();
    let mut generation = Generation::default();
    for (prompt, mut outcome) in prompts.iter().zip(outcomes) {
        let candidates = dedup(
            outcome
                .candidates
                .into_iter()
                .filter(|c| !normalize(c, policy).is_empty()),
            policy,
        );
        if candidates.is_empty() && outcome.warnings.is_empty() {
            outcome.warnings.push(MethodWarning {
                prompt_id: prompt.id().to_owned(),
                stage: "output",
                message: "no candidates produced".into(),
            });
        }
        generation.warnings.append(&mut outcome.warnings);
        generation.sets.push(PredictionSet::new(prompt.id(), candidates));
    }
    generation
}
