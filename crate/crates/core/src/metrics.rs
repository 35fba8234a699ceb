//! Weighted macro-F1 scoring.
//!
//! Per prompt `s`, with gold translations `G` carrying weights and a
//! de-duplicated prediction set `P`:
//!
//! * precision is unweighted: `|TP| / (|TP| + |FP|)`
//! * weighted recall is `WTP / (WTP + WFN)`, where `WTP` sums the weights
//!   of matched gold translations and `WFN` those of missed ones
//! * weighted F1 is the harmonic mean of the two
//!
//! The corpus score is the unweighted mean of per-prompt weighted F1 over
//! every gold prompt. Any quantity with a zero denominator is defined as 0.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::corpus::{normalize, GoldSet, NormalizationPolicy, PredictionSet};

/// Published full-scale English→Portuguese test-set scores (percent), kept
/// as reference points for desk-scale sweep tables.
pub mod reference {
    pub const BEST_MULTI_CHECKPOINT_MACRO_F1: f64 = 37.57;
    pub const AWS_BASELINE_MACRO_F1: f64 = 21.29;
    pub const FAIRSEQ_BASELINE_MACRO_F1: f64 = 13.57;
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("duplicate gold prompt id {0:?}")]
    DuplicateGold(String),
    #[error("duplicate prediction set for prompt id {0:?}")]
    DuplicatePrediction(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    /// (prediction surface form, matched gold text)
    pub tp: Vec<(String, String)>,
    pub fp: Vec<String>,
    pub fn_: Vec<String>,
    pub wtp: f64,
    pub wfn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptScore {
    pub prompt_id: String,
    pub precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub matched: MatchResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScore {
    pub macro_f1: f64,
    pub mean_precision: f64,
    pub mean_weighted_recall: f64,
    pub per_prompt: Vec<PromptScore>,
    pub num_prompts: usize,
    /// Prediction ids with no gold counterpart; excluded from the score.
    pub unknown_predictions: Vec<String>,
}

/// Exact set intersection of normalized predictions and gold texts.
pub fn match_sets(gold: &GoldSet, pred: &PredictionSet, policy: &NormalizationPolicy) -> MatchResult {
    let mut pred_by_key: HashMap<String, usize> = HashMap::with_capacity(pred.candidates.len());
    for (i, c) in pred.candidates.iter().enumerate() {
        pred_by_key.entry(normalize(c, policy)).or_insert(i);
    }
    let mut result = MatchResult::default();
    let mut used = HashSet::new();
    for t in gold.translations() {
        match pred_by_key.get(&normalize(&t.text, policy)) {
            Some(&i) => {
                used.insert(i);
                result.tp.push((pred.candidates[i].clone(), t.text.clone()));
                result.wtp += t.weight;
            }
            None => {
                result.fn_.push(t.text.clone());
                result.wfn += t.weight;
            }
        }
    }
    result.fp = pred
        .candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    result
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p == 0.0 || r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn score_prompt(gold: &GoldSet, pred: &PredictionSet, policy: &NormalizationPolicy) -> PromptScore {
    let matched = match_sets(gold, pred, policy);
    let tp = matched.tp.len() as f64;
    let precision = ratio(tp, tp + matched.fp.len() as f64);
    let weighted_recall = ratio(matched.wtp, matched.wtp + matched.wfn);
    PromptScore {
        prompt_id: gold.id().to_owned(),
        precision,
        weighted_recall,
        weighted_f1: harmonic(precision, weighted_recall),
        matched,
    }
}

/// Scores every gold prompt; a prompt without predictions scores 0.
pub fn score_corpus(
    golds: &[GoldSet],
    preds: &[PredictionSet],
    policy: &NormalizationPolicy,
) -> Result<CorpusScore, MetricsError> {
    let mut gold_ids = HashSet::with_capacity(golds.len());
    for g in golds {
        if !gold_ids.insert(g.id()) {
            return Err(MetricsError::DuplicateGold(g.id().to_owned()));
        }
    }
    let mut by_id: HashMap<&str, &PredictionSet> = HashMap::with_capacity(preds.len());
    let mut unknown_predictions = Vec::new();
    for p in preds {
        if by_id.insert(p.prompt_id.as_str(), p).is_some() {
            return Err(MetricsError::DuplicatePrediction(p.prompt_id.clone()));
        }
        if !gold_ids.contains(p.prompt_id.as_str()) {
            log::warn!("prediction set {:?} has no gold prompt; ignored", p.prompt_id);
            unknown_predictions.push(p.prompt_id.clone());
        }
    }

    let per_prompt: Vec<PromptScore> = golds
        .par_iter()
        .map(|g| match by_id.get(g.id()) {
            Some(p) => score_prompt(g, p, policy),
            None => score_prompt(g, &PredictionSet::empty(g.id()), policy),
        })
        .collect();

    // summed sequentially in gold order so the result is schedule-independent
    let n = per_prompt.len();
    let mean = |f: fn(&PromptScore) -> f64| ratio(per_prompt.iter().map(f).sum(), n as f64);
    Ok(CorpusScore {
        macro_f1: mean(|s| s.weighted_f1),
        mean_precision: mean(|s| s.precision),
        mean_weighted_recall: mean(|s| s.weighted_recall),
        num_prompts: n,
        per_prompt,
        unknown_predictions,
    })
}

/// Percent with two decimals, the rendering used in every report table.
pub fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub const REPORT_NOTE: &str =
    "# precision = TP/(TP+FP) (unweighted); weighted_recall = WTP/(WTP+WFN); values in percent";

/// Renders the per-prompt TSV report, ending with a `MACRO` row of means.
pub fn render_report(score: &CorpusScore) -> String {
    let mut out = String::new();
    out.push_str(REPORT_NOTE);
    out.push('\n');
    out.push_str("prompt_id\tprecision\tweighted_recall\tweighted_f1\n");
    for s in &score.per_prompt {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.prompt_id,
            percent(s.precision),
            percent(s.weighted_recall),
            percent(s.weighted_f1)
        );
    }
    let _ = writeln!(
        out,
        "MACRO\t{}\t{}\t{}",
        percent(score.mean_precision),
        percent(score.mean_weighted_recall),
        percent(score.macro_f1)
    );
    out
}

/// The one-line machine-readable summary.
pub fn summary_line(score: &CorpusScore) -> String {
    format!("macro_f1={:.6}", score.macro_f1)
}

pub fn write_report<W: Write>(score: &CorpusScore, mut sink: W) -> io::Result<()> {
    sink.write_all(render_report(score).as_bytes())?;
    sink.flush()
}
