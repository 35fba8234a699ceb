use super::{run_batch, translate_n, GenerationMethod, MethodParams, MethodWarning, Models, PromptOutcome, Result};
use super::Generation;
use crate::corpus::{NormalizationPolicy, Prompt};
use crate::translator::Checkpoint;

/// The `n` best hypotheses of one checkpoint for every prompt.
pub fn nbest_predict(
    ckpt: &Checkpoint,
    prompts: &[Prompt],
    params: &MethodParams,
    policy: &NormalizationPolicy,
) -> Result<Generation> {
    params.validate()?;
    Ok(run_batch(prompts, policy, |prompt| match translate_n(ckpt, prompt.text(), params.n, &params.beam) {
        Ok(candidates) => PromptOutcome {
            candidates,
            warnings: Vec::new(),
        },
        Err(e) => PromptOutcome {
            candidates: Vec::new(),
            warnings: vec![MethodWarning {
                prompt_id: prompt.id().to_owned(),
                stage: "nbest",
                message: e.to_string(),
            }],
        },
    }))
}

/// `nbest`: decodes with the latest forward checkpoint.
#[derive(Debug, Default, Clone, Copy)]
pub struct NBestMethod;

impl GenerationMethod for NBestMethod {
    fn name(&self) -> &'static str {
        "nbest"
    }

    fn generate(
        &self,
        models: Models<'_>,
        prompts: &[Prompt],
        params: &MethodParams,
        policy: &NormalizationPolicy,
    ) -> Result<Generation> {
        nbest_predict(models.forward.latest(), prompts, params, policy)
    }
}
