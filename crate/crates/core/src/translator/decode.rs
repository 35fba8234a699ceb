use std::cmp::Ordering;

use super::{floored_ln, Checkpoint, Result, TranslatorError, BOS, EOS, UNKNOWN_WORD_LOGPROB};
use crate::textproc::TokenSeq;

/// Largest candidate space [`exhaustive_nbest`] will enumerate.
pub const MAX_EXHAUSTIVE_SPACE: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub beam_width: usize,
    pub n_best: usize,
    /// Upper bound on target/source length. Decoding is one-for-one, so
    /// any ratio of at least 1 is never binding.
    pub max_len_ratio: f64,
    /// Translation candidates considered per source word.
    pub top_k_lexicon: usize,
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            beam_width: 100,
            n_best: 10,
            max_len_ratio: 2.0,
            top_k_lexicon: 8,
        }
    }
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_best == 0 || self.n_best > self.beam_width {
            return Err(TranslatorError::InvalidParams(format!(
                "need 1 <= n_best ({}) <= beam_width ({})",
                self.n_best, self.beam_width
            )));
        }
        if !(self.max_len_ratio > 0.0) {
            return Err(TranslatorError::InvalidParams(format!(
                "max_len_ratio must be positive, got {}",
                self.max_len_ratio
            )));
        }
        if self.top_k_lexicon == 0 {
            return Err(TranslatorError::InvalidParams("top_k_lexicon must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: TokenSeq,
    pub total_logprob: f64,
    pub avg_logprob: f64,
}

impl Hypothesis {
    /// Length-normalizes `raw_total`. The stored total is recomputed from
    /// the average so that `avg * max(1, len) == total` holds exactly.
    fn from_raw(tokens: Vec<String>, raw_total: f64) -> Self {
        let len = tokens.len().max(1) as f64;
        let avg_logprob = raw_total / len;
        Self {
            tokens: TokenSeq::new(tokens).expect("decoder emits whitespace-free tokens"),
            total_logprob: avg_logprob * len,
            avg_logprob,
        }
    }

    fn empty() -> Self {
        Self {
            tokens: TokenSeq::default(),
            total_logprob: 0.0,
            avg_logprob: 0.0,
        }
    }
}

/// Best average score first, then lexicographically smallest tokens.
fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.avg_logprob
        .total_cmp(&a.avg_logprob)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Per-position emission options: `(target word, log t(target|source))`.
fn emission_options(ckpt: &Checkpoint, source: &TokenSeq, top_k: usize) -> Vec<Vec<(String, f64)>> {
    source
        .iter()
        .map(|src| {
            let cands = ckpt.lexicon.top_k(src, top_k);
            if cands.is_empty() {
                vec![(src.clone(), UNKNOWN_WORD_LOGPROB)]
            } else {
                cands
                    .into_iter()
                    .map(|(t, p)| (t.to_owned(), floored_ln(p)))
                    .collect()
            }
        })
        .collect()
}

struct Partial {
    tokens: Vec<String>,
    score: f64,
}

/// Monotone beam search: position `j` emits one translation of source word
/// `j`. Partial scores add `log t(target|source)` and the bigram LM term at
/// each step; completion adds the end-of-sentence LM term. Returns up to
/// `n_best` distinct hypotheses ordered by average log-probability.
pub fn decode_nbest(ckpt: &Checkpoint, source: &TokenSeq, params: &BeamParams) -> Result<Vec<Hypothesis>> {
    params.validate()?;
    if source.is_empty() {
        return Ok(vec![Hypothesis::empty()]);
    }
    let options = emission_options(ckpt, source, params.top_k_lexicon);
    let mut beam = vec![Partial {
        tokens: Vec::new(),
        score: 0.0,
    }];
    for opts in &options {
        let mut next = Vec::with_capacity(beam.len() * opts.len());
        for p in &beam {
            let prev = p.tokens.last().map_or(BOS, String::as_str);
            for (word, emit) in opts {
                let mut tokens = p.tokens.clone();
                tokens.push(word.clone());
                next.push(Partial {
                    score: p.score + emit + ckpt.lm.logprob(prev, word),
                    tokens,
                });
            }
        }
        next.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tokens.cmp(&b.tokens)));
        next.truncate(params.beam_width);
        beam = next;
    }
    let mut finished: Vec<Hypothesis> = beam
        .into_iter()
        .map(|p| {
            let last = p.tokens.last().expect("source is non-empty");
            let raw = p.score + ckpt.lm.logprob(last, EOS);
            Hypothesis::from_raw(p.tokens, raw)
        })
        .collect();
    finished.sort_by(rank);
    finished.dedup_by(|a, b| a.tokens == b.tokens);
    finished.truncate(params.n_best);
    Ok(finished)
}

/// Scores every candidate sequence under the same emission model as
/// [`decode_nbest`] and returns the global top `n_best`.
pub fn exhaustive_nbest(
    ckpt: &Checkpoint,
    source: &TokenSeq,
    n_best: usize,
    top_k_lexicon: usize,
) -> Result<Vec<Hypothesis>> {
    if source.is_empty() {
        return Ok(vec![Hypothesis::empty()]);
    }
    let options = emission_options(ckpt, source, top_k_lexicon.max(1));
    let size = options
        .iter()
        .fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128));
    if size > MAX_EXHAUSTIVE_SPACE {
        return Err(TranslatorError::SearchSpaceTooLarge {
            size,
            limit: MAX_EXHAUSTIVE_SPACE,
        });
    }
    let mut all = Vec::with_capacity(size as usize);
    let mut choice = vec![0usize; options.len()];
    loop {
        let mut score = 0.0;
        let mut prev = BOS;
        let mut tokens = Vec::with_capacity(options.len());
        for (opts, &c) in options.iter().zip(&choice) {
            let (word, emit) = &opts[c];
            score = score + emit + ckpt.lm.logprob(prev, word);
            prev = word;
            tokens.push(word.clone());
        }
        score += ckpt.lm.logprob(prev, EOS);
        all.push(Hypothesis::from_raw(tokens, score));

        // odometer increment, last position fastest
        let mut pos = options.len();
        loop {
            if pos == 0 {
                all.sort_by(rank);
                all.truncate(n_best);
                return Ok(all);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < options[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translator::{BigramLm, Direction, LexiconTable};

    fn flat_lm() -> BigramLm {
        BigramLm::estimate(std::iter::empty(), 1.0)
    }

    fn ckpt(entries: &[(&str, &str, f64)]) -> Checkpoint {
        let mut lexicon = LexiconTable::new();
        for (s, t, p) in entries {
            lexicon.insert(*s, *t, *p);
        }
        Checkpoint {
            iteration: 1,
            direction: Direction::Forward,
            lexicon,
            lm: flat_lm(),
            corpus_loglik: 0.0,
            created_at: 0,
        }
    }

    fn words(h: &[Hypothesis]) -> Vec<String> {
        h.iter().map(|h| h.tokens.to_string()).collect()
    }

    fn params(beam_width: usize, n_best: usize) -> BeamParams {
        BeamParams {
            beam_width,
            n_best,
            ..BeamParams::default()
        }
    }

    #[test]
    fn two_best_single_word() {
        let c = ckpt(&[("a", "x", 0.9), ("a", "z", 0.1)]);
        let src = TokenSeq::from_whitespace("a");
        let h = decode_nbest(&c, &src, &params(10, 2)).unwrap();
        assert_eq!(words(&h), ["x", "z"]);
        // the LM is flat, so the gap is exactly the lexicon gap
        let gap = h[0].avg_logprob - h[1].avg_logprob;
        assert!((gap - (0.9f64.ln() - 0.1f64.ln())).abs() < 1e-12);
        assert_eq!(h, exhaustive_nbest(&c, &src, 2, 8).unwrap());
    }

    #[test]
    fn one_best_is_argmax() {
        let c = ckpt(&[("a", "x", 0.3), ("a", "y", 0.7)]);
        let h = decode_nbest(&c, &TokenSeq::from_whitespace("a a"), &params(10, 1)).unwrap();
        assert_eq!(words(&h), ["y y"]);
    }

    #[test]
    fn empty_source_gives_empty_hypothesis() {
        let c = ckpt(&[("a", "x", 1.0)]);
        let h = decode_nbest(&c, &TokenSeq::default(), &params(10, 3)).unwrap();
        assert_eq!(h.len(), 1);
        assert!(h[0].tokens.is_empty());
        assert_eq!(h[0].total_logprob, 0.0);
    }

    #[test]
    fn unknown_word_copied_with_penalty() {
        let c = ckpt(&[("a", "x", 1.0)]);
        let h = decode_nbest(&c, &TokenSeq::from_whitespace("q"), &params(10, 5)).unwrap();
        assert_eq!(words(&h), ["q"]);
        let lm = flat_lm();
        let expected = UNKNOWN_WORD_LOGPROB + lm.logprob(BOS, "q") + lm.logprob("q", EOS);
        assert!((h[0].total_logprob - expected).abs() < 1e-12);
    }

    #[test]
    fn single_candidate_lexicon() {
        let c = ckpt(&[("a", "x", 1.0)]);
        let h = exhaustive_nbest(&c, &TokenSeq::from_whitespace("a a"), 5, 8).unwrap();
        assert_eq!(words(&h), ["x x"]);
    }

    #[test]
    fn n_best_beyond_space_returns_everything_sorted() {
        let c = ckpt(&[("a", "x", 0.6), ("a", "y", 0.4)]);
        let h = exhaustive_nbest(&c, &TokenSeq::from_whitespace("a a"), 10, 8).unwrap();
        assert_eq!(h.len(), 4);
        assert!(h.windows(2).all(|w| w[0].avg_logprob >= w[1].avg_logprob));
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = ckpt(&[("a", "y", 0.5), ("a", "x", 0.5)]);
        let h = decode_nbest(&c, &TokenSeq::from_whitespace("a"), &params(10, 2)).unwrap();
        assert_eq!(words(&h), ["x", "y"]);
    }

    #[test]
    fn exhaustive_refuses_huge_spaces() {
        let entries: Vec<(String, String)> = (0..8).map(|i| ("a".to_string(), format!("t{i}"))).collect();
        let refs: Vec<(&str, &str, f64)> = entries.iter().map(|(s, t)| (s.as_str(), t.as_str(), 0.125)).collect();
        let c = ckpt(&refs);
        let src = TokenSeq::from_whitespace("a a a a a a a");
        match exhaustive_nbest(&c, &src, 1, 8) {
            Err(TranslatorError::SearchSpaceTooLarge { size, .. }) => assert_eq!(size, 8u128.pow(7)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let c = ckpt(&[("a", "x", 1.0)]);
        let src = TokenSeq::from_whitespace("a");
        assert!(decode_nbest(&c, &src, &params(2, 3)).is_err());
        assert!(decode_nbest(&c, &src, &params(2, 0)).is_err());
        let bad = BeamParams { max_len_ratio: 0.0, ..BeamParams::default() };
        assert!(decode_nbest(&c, &src, &bad).is_err());
    }

    #[test]
    fn average_identity_is_exact() {
        let c = ckpt(&[("a", "x", 0.3), ("a", "y", 0.7), ("b", "z", 0.9), ("b", "x", 0.1)]);
        for h in decode_nbest(&c, &TokenSeq::from_whitespace("a b a"), &params(50, 8)).unwrap() {
            assert_eq!(h.avg_logprob * h.tokens.len().max(1) as f64, h.total_logprob);
            assert!(h.total_logprob <= 0.0);
        }
    }
}
