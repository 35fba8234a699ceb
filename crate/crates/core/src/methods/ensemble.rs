use super::{
    run_batch, translate_n, Generation, GenerationMethod, MethodError, MethodParams, MethodWarning, Models,
    PromptOutcome, Result,
};
use crate::corpus::{NormalizationPolicy, Prompt};
use crate::translator::CheckpointSeries;

/// Union of the n-best lists of the `m` latest checkpoints, latest first.
pub fn multi_checkpoint_predict(
    series: &CheckpointSeries,
    prompts: &[Prompt],
    params: &MethodParams,
    policy: &NormalizationPolicy,
) -> Result<Generation> {
    params.validate()?;
    if params.m > series.len() {
        return Err(MethodError::NotEnoughCheckpoints {
            m: params.m,
            available: series.len(),
        });
    }
    let members = series.last_m(params.m)?;
    Ok(run_batch(prompts, policy, |prompt| {
        let mut outcome = PromptOutcome {
            candidates: Vec::new(),
            warnings: Vec::new(),
        };
        for ckpt in &members {
            match translate_n(ckpt, prompt.text(), params.n, &params.beam) {
                Ok(c) => outcome.candidates.extend(c),
                Err(e) => outcome.warnings.push(MethodWarning {
                    prompt_id: prompt.id().to_owned(),
                    stage: "ensemble",
                    message: format!("checkpoint {}: {e}", ckpt.iteration),
                }),
            }
        }
        outcome
    }))
}

/// `ensemble`: multi-checkpoint translation over the forward series.
#[derive(Debug, Default, Clone, Copy)]
pub struct EnsembleMethod;

impl GenerationMethod for EnsembleMethod {
    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn generate(
        &self,
        models: Models<'_>,
        prompts: &[Prompt],
        params: &MethodParams,
        policy: &NormalizationPolicy,
    ) -> Result<Generation> {
        multi_checkpoint_predict(models.forward, prompts, params, policy)
    }
}
