use std::collections::{BTreeMap, BTreeSet};

use super::{quantize, BOS, EOS, UNK};
use crate::textproc::TokenSeq;

/// Row key for the unseen-continuation log-probability of a history.
pub(crate) const UNSEEN: &str = "<*>";
/// History key for unigram backoff rows.
pub(crate) const UNIGRAM: &str = "<unigram>";

pub(crate) fn is_reserved(token: &str) -> bool {
    matches!(token, BOS | EOS | UNK) || token == UNSEEN || token == UNIGRAM
}

/// Add-α smoothed bigram model over target sentences.
///
/// The vocabulary is every training token plus `</s>` and `<unk>`; any
/// out-of-vocabulary word is scored as `<unk>`. A history never seen in
/// training falls back to the smoothed unigram distribution. For every
/// history the conditional distribution sums to one over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramLm {
    alpha: f64,
    vocab: BTreeSet<String>,
    bigrams: BTreeMap<(String, String), f64>,
    unseen: BTreeMap<String, f64>,
    unigrams: BTreeMap<String, f64>,
}

impl BigramLm {
    /// Estimates the model from target-side sentences. Log-probabilities
    /// are stored rounded to 12 significant digits.
    pub fn estimate<'a, I>(sentences: I, alpha: f64) -> Self
    where
        I: IntoIterator<Item = &'a TokenSeq>,
    {
        assert!(alpha > 0.0, "smoothing constant must be positive");
        let mut pair_counts: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut history_counts: BTreeMap<String, f64> = BTreeMap::new();
        let mut unigram_counts: BTreeMap<String, f64> = BTreeMap::new();
        let mut vocab: BTreeSet<String> = [EOS, UNK].into_iter().map(String::from).collect();
        history_counts.insert(BOS.to_owned(), 0.0);

        for sent in sentences {
            let mut prev = BOS;
            for w in sent.iter().map(String::as_str).chain(std::iter::once(EOS)) {
                vocab.insert(w.to_owned());
                *pair_counts.entry((prev.to_owned(), w.to_owned())).or_default() += 1.0;
                *history_counts.entry(prev.to_owned()).or_default() += 1.0;
                *unigram_counts.entry(w.to_owned()).or_default() += 1.0;
                prev = w;
            }
        }

        let v = vocab.len() as f64;
        let bigrams = pair_counts
            .into_iter()
            .map(|((h, w), c)| {
                let lp = ((c + alpha) / (history_counts[&h] + alpha * v)).ln();
                ((h, w), quantize(lp))
            })
            .collect();
        let unseen = history_counts
            .iter()
            .map(|(h, c)| (h.clone(), quantize((alpha / (c + alpha * v)).ln())))
            .collect();
        let total: f64 = unigram_counts.values().sum();
        let unigrams = vocab
            .iter()
            .map(|w| {
                let c = unigram_counts.get(w).copied().unwrap_or(0.0);
                (w.clone(), quantize(((c + alpha) / (total + alpha * v)).ln()))
            })
            .collect();
        Self {
            alpha,
            vocab,
            bigrams,
            unseen,
            unigrams,
        }
    }

    /// `log P(word | prev)`.
    pub fn logprob(&self, prev: &str, word: &str) -> f64 {
        let word = if self.vocab.contains(word) { word } else { UNK };
        match self.unseen.get(prev) {
            Some(&unseen) => self
                .bigrams
                .get(&(prev.to_owned(), word.to_owned()))
                .copied()
                .unwrap_or(unseen),
            None => self.unigrams[word],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// Every history with its own distribution (`<s>` included).
    pub fn histories(&self) -> impl Iterator<Item = &String> {
        self.unseen.keys()
    }

    /// All stored rows as `(w1, w2, logprob)`, sorted by `(w1, w2)`.
    pub(crate) fn rows(&self) -> Vec<(&str, &str, f64)> {
        let mut rows: Vec<(&str, &str, f64)> = self
            .bigrams
            .iter()
            .map(|((h, w), lp)| (h.as_str(), w.as_str(), *lp))
            .chain(self.unseen.iter().map(|(h, lp)| (h.as_str(), UNSEEN, *lp)))
            .chain(self.unigrams.iter().map(|(w, lp)| (UNIGRAM, w.as_str(), *lp)))
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        rows
    }

    /// Rebuilds a model from rows produced by [`BigramLm::rows`].
    pub(crate) fn from_rows(
        alpha: f64,
        rows: impl IntoIterator<Item = (String, String, f64)>,
    ) -> Result<Self, String> {
        let mut bigrams = BTreeMap::new();
        let mut unseen = BTreeMap::new();
        let mut unigrams = BTreeMap::new();
        for (h, w, lp) in rows {
            if h == UNIGRAM {
                unigrams.insert(w, lp);
            } else if w == UNSEEN {
                unseen.insert(h, lp);
            } else {
                bigrams.insert((h, w), lp);
            }
        }
        let vocab: BTreeSet<String> = unigrams.keys().cloned().collect();
        if !vocab.contains(EOS) || !vocab.contains(UNK) {
            return Err("unigram rows must cover </s> and <unk>".into());
        }
        if !unseen.contains_key(BOS) {
            return Err("missing <s> history".into());
        }
        for (h, w) in bigrams.keys() {
            if !unseen.contains_key(h) || !vocab.contains(w) {
                return Err(format!("bigram ({h}, {w}) outside the model vocabulary"));
            }
        }
        Ok(Self {
            alpha,
            vocab,
            bigrams,
            unseen,
            unigrams,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(lines: &[&str]) -> Vec<TokenSeq> {
        lines.iter().map(|l| TokenSeq::from_whitespace(l)).collect()
    }

    fn mass(lm: &BigramLm, h: &str) -> f64 {
        lm.vocab().iter().map(|w| lm.logprob(h, w).exp()).sum()
    }

    #[test]
    fn every_history_normalizes() {
        let lm = BigramLm::estimate(&sents(&["x y", "x", "y y z"]), 0.1);
        for h in lm.histories() {
            assert!((mass(&lm, h) - 1.0).abs() < 1e-9, "history {h}");
        }
        // unknown history backs off to unigrams
        assert!((mass(&lm, "never-seen") - 1.0).abs() < 1e-9);
    }

    #[test]
    fn add_alpha_values() {
        // vocab {x, </s>, <unk>}; <s> seen once followed by x
        let lm = BigramLm::estimate(&sents(&["x"]), 1.0);
        assert!((lm.logprob(BOS, "x") - (2.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!((lm.logprob(BOS, EOS) - (1.0f64 / 4.0).ln()).abs() < 1e-12);
        assert_eq!(lm.logprob(BOS, "oov"), lm.logprob(BOS, UNK));
    }

    #[test]
    fn rows_round_trip() {
        let lm = BigramLm::estimate(&sents(&["a b", "b a c"]), 0.5);
        let rows: Vec<_> = lm
            .rows()
            .into_iter()
            .map(|(h, w, lp)| (h.to_owned(), w.to_owned(), lp))
            .collect();
        assert_eq!(BigramLm::from_rows(0.5, rows).unwrap(), lm);
    }
}
