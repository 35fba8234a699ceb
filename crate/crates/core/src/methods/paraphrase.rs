//! Round-trip paraphrasing.
//!
//! 1. forward-translate the prompt to its `n` best hypotheses
//! 2. back-translate each hypothesis to its `n'` best source sentences,
//!    pool them, de-duplicate, and drop the original prompt
//! 3. forward-translate every surviving paraphrase, keeping the 1-best
//!
//! The result is the union of step 1 and step 3, step 1 first.

use super::{
    dedup, run_batch, translate_n, Generation, GenerationMethod, MethodError, MethodParams, MethodWarning, Models,
    PromptOutcome, Result,
};
use crate::corpus::{NormalizationPolicy, Prompt};
use crate::textproc::preprocess;
use crate::translator::Checkpoint;

/// Intermediate lists for one prompt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParaphraseTrace {
    pub forward: Vec<String>,
    /// Back-translations before de-duplication (at most `n * n'`).
    pub pool: Vec<String>,
    pub paraphrases: Vec<String>,
    pub retranslated: Vec<String>,
    pub candidates: Vec<String>,
    pub warnings: Vec<MethodWarning>,
}

pub fn paraphrase_prompt(
    fwd: &Checkpoint,
    bwd: &Checkpoint,
    prompt: &Prompt,
    params: &MethodParams,
    policy: &NormalizationPolicy,
) -> ParaphraseTrace {
    let mut trace = ParaphraseTrace::default();
    let mut warn = |stage: &'static str, message: String| {
        trace.warnings.push(MethodWarning {
            prompt_id: prompt.id().to_owned(),
            stage,
            message,
        })
    };

    let forward = match translate_n(fwd, prompt.text(), params.n, &params.beam) {
        Ok(f) => f,
        Err(e) => {
            warn("forward", e.to_string());
            Vec::new()
        }
    };
    let mut pool = Vec::new();
    for hyp in &forward {
        match translate_n(bwd, hyp, params.n_prime, &params.beam) {
            Ok(back) => pool.extend(back),
            Err(e) => warn("backward", e.to_string()),
        }
    }
    let original = preprocess(prompt.text());
    let paraphrases: Vec<String> = dedup(pool.iter().cloned(), policy)
        .into_iter()
        .filter(|p| preprocess(p) != original)
        .collect();
    let mut retranslated = Vec::new();
    for para in &paraphrases {
        match translate_n(fwd, para, 1, &params.beam) {
            Ok(best) => retranslated.extend(best.into_iter().take(1)),
            Err(e) => warn("retranslate", e.to_string()),
        }
    }
    trace.candidates = dedup(forward.iter().chain(&retranslated).cloned(), policy);
    trace.forward = forward;
    trace.pool = pool;
    trace.paraphrases = paraphrases;
    trace.retranslated = retranslated;
    trace
}

pub fn paraphrase_predict(
    fwd: &Checkpoint,
    bwd: &Checkpoint,
    prompts: &[Prompt],
    params: &MethodParams,
    policy: &NormalizationPolicy,
) -> Result<Generation> {
    params.validate()?;
    Ok(run_batch(prompts, policy, |prompt| {
        let trace = paraphrase_prompt(fwd, bwd, prompt, params, policy);
        PromptOutcome {
            candidates: trace.candidates,
            warnings: trace.warnings,
        }
    }))
}

/// `paraphrase`: latest forward checkpoint plus the backward model.
#[derive(Debug, Default, Clone, Copy)]
pub struct ParaphraseMethod;

impl GenerationMethod for ParaphraseMethod {
    fn name(&self) -> &'static str {
        "paraphrase"
    }

    fn generate(
        &self,
        models: Models<'_>,
        prompts: &[Prompt],
        params: &MethodParams,
        policy: &NormalizationPolicy,
    ) -> Result<Generation> {
        let bwd = models.backward.ok_or(MethodError::MissingBackward("paraphrase"))?;
        paraphrase_predict(models.forward.latest(), bwd, prompts, params, policy)
    }
}
