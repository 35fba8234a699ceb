use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::checkpoint::{save_checkpoint, Checkpoint, CheckpointSeries};
use super::lm::is_reserved;
use super::{floored_ln, quantize, BigramLm, Direction, LexiconTable, Result, TranslatorError};
use crate::textproc::TokenSeq;

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub iterations: usize,
    pub direction: Direction,
    /// Add-α constant for the target bigram model.
    pub lm_alpha: f64,
    /// Seconds since the Unix epoch stamped on every checkpoint.
    pub created_at: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            iterations: 5,
            direction: Direction::Forward,
            lm_alpha: 0.1,
            created_at: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub series: CheckpointSeries,
    /// Indices of input pairs skipped because a side was empty or used a
    /// reserved token.
    pub skipped: Vec<usize>,
}

/// Interned corpus plus the current `t(f|e)` table keyed by word ids.
struct Em {
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    pairs: Vec<(Vec<usize>, Vec<usize>)>,
    // t[e] maps target id -> probability
    t: Vec<HashMap<usize, f64>>,
}

fn intern(word: &str, vocab: &mut Vec<String>, ids: &mut HashMap<String, usize>) -> usize {
    if let Some(&id) = ids.get(word) {
        return id;
    }
    vocab.push(word.to_owned());
    ids.insert(word.to_owned(), vocab.len() - 1);
    vocab.len() - 1
}

impl Em {
    fn new(pairs: &[(&TokenSeq, &TokenSeq)]) -> Self {
        let (mut src_vocab, mut tgt_vocab) = (Vec::new(), Vec::new());
        let (mut src_ids, mut tgt_ids) = (HashMap::new(), HashMap::new());
        let pairs: Vec<(Vec<usize>, Vec<usize>)> = pairs
            .iter()
            .map(|(s, t)| {
                (
                    s.iter().map(|w| intern(w, &mut src_vocab, &mut src_ids)).collect(),
                    t.iter().map(|w| intern(w, &mut tgt_vocab, &mut tgt_ids)).collect(),
                )
            })
            .collect();

        // uniform over co-occurring targets
        let mut t: Vec<HashMap<usize, f64>> = vec![HashMap::new(); src_vocab.len()];
        for (s, f) in &pairs {
            for &e in s {
                for &w in f {
                    t[e].insert(w, 0.0);
                }
            }
        }
        for row in &mut t {
            let p = 1.0 / row.len() as f64;
            row.values_mut().for_each(|v| *v = p);
        }
        Self {
            src_vocab,
            tgt_vocab,
            pairs,
            t,
        }
    }

    fn step(&mut self) {
        let mut counts: Vec<HashMap<usize, f64>> = vec![HashMap::new(); self.src_vocab.len()];
        let mut totals = vec![0.0; self.src_vocab.len()];
        for (s, f) in &self.pairs {
            for &w in f {
                let denom: f64 = s.iter().map(|&e| self.t[e][&w]).sum();
                for &e in s {
                    let c = self.t[e][&w] / denom;
                    *counts[e].entry(w).or_default() += c;
                    totals[e] += c;
                }
            }
        }
        for (e, row) in counts.into_iter().enumerate() {
            let total = totals[e];
            self.t[e] = row.into_iter().map(|(w, c)| (w, c / total)).collect();
        }
    }

    fn loglik(&self) -> f64 {
        let mut ll = 0.0;
        for (s, f) in &self.pairs {
            let l = s.len() as f64;
            for &w in f {
                let sum: f64 = s.iter().map(|&e| self.t[e].get(&w).copied().unwrap_or(0.0)).sum();
                ll += floored_ln(sum / l);
            }
        }
        ll
    }

    fn lexicon(&self) -> LexiconTable {
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (e, row) in self.t.iter().enumerate() {
            let out = rows.entry(self.src_vocab[e].clone()).or_default();
            for (&w, &p) in row {
                out.insert(self.tgt_vocab[w].clone(), quantize(p));
            }
        }
        LexiconTable::from_rows(rows)
    }
}

/// Runs `opts.iterations` EM iterations of the word-translation model and
/// snapshots a checkpoint after each one, writing `ckpt-NNNN/` directories
/// under `checkpoint_dir` when given.
///
/// Each checkpoint records the corpus log-likelihood of the exact EM
/// iterate; its persisted tables are rounded to 12 significant digits.
pub fn train_toy(
    parallel: &[(TokenSeq, TokenSeq)],
    opts: &TrainOptions,
    checkpoint_dir: Option<&Path>,
) -> Result<Trained> {
    if opts.iterations == 0 {
        return Err(TranslatorError::ZeroIterations);
    }
    let mut usable = Vec::with_capacity(parallel.len());
    let mut skipped = Vec::new();
    for (i, (s, t)) in parallel.iter().enumerate() {
        let reserved = s.iter().chain(t.iter()).any(|w| is_reserved(w));
        if s.is_empty() || t.is_empty() || reserved {
            log::warn!("skipping sentence pair {}: empty side or reserved token", i + 1);
            skipped.push(i);
        } else {
            usable.push((s, t));
        }
    }
    if usable.is_empty() {
        return Err(TranslatorError::EmptyCorpus);
    }

    let lm = BigramLm::estimate(usable.iter().map(|(_, t)| *t), opts.lm_alpha);
    let mut em = Em::new(&usable);
    let mut checkpoints = Vec::with_capacity(opts.iterations);
    for iteration in 1..=opts.iterations {
        em.step();
        let corpus_loglik = em.loglik();
        log::info!("iteration {iteration}: corpus log-likelihood {corpus_loglik:.6}");
        let ckpt = Checkpoint {
            iteration: iteration as u32,
            direction: opts.direction,
            lexicon: em.lexicon(),
            lm: lm.clone(),
            corpus_loglik,
            created_at: opts.created_at,
        };
        if let Some(dir) = checkpoint_dir {
            save_checkpoint(&ckpt, &dir.join(Checkpoint::dir_name(ckpt.iteration)))?;
        }
        checkpoints.push(ckpt);
    }
    let series = CheckpointSeries::new(opts.direction, checkpoints)?;
    if let Some(dir) = checkpoint_dir {
        series.write_manifest(dir)?;
    }
    Ok(Trained { series, skipped })
}

/// `Σ_pairs Σ_j log((1/l) Σ_i t(f_j | e_i))` with `l` the source length.
pub fn corpus_loglikelihood(lexicon: &LexiconTable, parallel: &[(TokenSeq, TokenSeq)]) -> f64 {
    let mut ll = 0.0;
    for (s, f) in parallel {
        if s.is_empty() {
            continue;
        }
        let l = s.len() as f64;
        for w in f {
            let sum: f64 = s.iter().map(|e| lexicon.prob(e, w)).sum();
            ll += floored_ln(sum / l);
        }
    }
    ll
}
