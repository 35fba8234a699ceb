//! Joint byte-pair encoding: learn merges, segment words, undo segmentation.
//!
//! Words are split into characters and the end-of-word marker is attached
//! to the final character (`"t</w>"`). Segmented output marks every
//! non-final subword with an `@@` suffix so decoding can rejoin words.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use super::TokenSeq;

pub const DEFAULT_EOW: &str = "</w>";
pub const CONTINUATION: &str = "@@";
const HEADER_PREFIX: &str = "#bpe v1 eow=";

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("cannot learn merges from an empty corpus")]
    EmptyCorpus,
    #[error("duplicate merge ({0:?}, {1:?})")]
    DuplicateMerge(String, String),
    #[error("invalid merge symbol {0:?}")]
    InvalidSymbol(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

type Pair = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<Pair>,
    ranks: HashMap<Pair, usize>,
    eow: String,
}

impl BpeModel {
    pub fn new(merges: Vec<Pair>) -> Result<Self, BpeError> {
        Self::with_eow(merges, DEFAULT_EOW)
    }

    pub fn with_eow(merges: Vec<Pair>, eow: &str) -> Result<Self, BpeError> {
        if eow.is_empty() || eow.chars().any(char::is_whitespace) {
            return Err(BpeError::InvalidSymbol(eow.to_owned()));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            for s in [l, r] {
                if s.is_empty() || s.chars().any(char::is_whitespace) {
                    return Err(BpeError::InvalidSymbol(s.clone()));
                }
            }
            if ranks.insert((l.clone(), r.clone()), rank).is_some() {
                return Err(BpeError::DuplicateMerge(l.clone(), r.clone()));
            }
        }
        Ok(Self {
            merges,
            ranks,
            eow: eow.to_owned(),
        })
    }

    pub fn merges(&self) -> &[Pair] {
        &self.merges
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    pub fn eow_marker(&self) -> &str {
        &self.eow
    }

    /// The first `k` merges as a model of their own.
    pub fn truncated(&self, k: usize) -> Self {
        let merges = self.merges[..k.min(self.merges.len())].to_vec();
        Self::with_eow(merges, &self.eow).expect("prefix of a valid model is valid")
    }

    /// Splits one word into its internal symbols (end-of-word marker still
    /// attached to the last one).
    pub fn segment(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word, &self.eow);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|&r| (r, w)))
                .min_by_key(|(r, _)| *r);
            let Some((_, pair)) = best else { break };
            let (left, right) = (pair[0].clone(), pair[1].clone());
            symbols = merge_pair(&symbols, &left, &right);
        }
        symbols
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{HEADER_PREFIX}{}", self.eow)?;
        for (l, r) in &self.merges {
            writeln!(w, "{l}\t{r}")?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, BpeError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or(BpeError::Format {
            line: 1,
            message: "missing header".into(),
        })?;
        let eow = header
            .strip_prefix(HEADER_PREFIX)
            .filter(|e| !e.is_empty())
            .ok_or_else(|| BpeError::Format {
                line: 1,
                message: format!("expected `{HEADER_PREFIX}<marker>`, found {header:?}"),
            })?
            .to_owned();
        let mut merges = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_owned(), r.to_owned()))
                }
                _ => {
                    return Err(BpeError::Format {
                        line: lineno,
                        message: format!("expected `left<TAB>right`, found {line:?}"),
                    })
                }
            }
        }
        Self::with_eow(merges, &eow).map_err(|e| match e {
            BpeError::DuplicateMerge(..) | BpeError::InvalidSymbol(_) => BpeError::Format {
                line: 0,
                message: e.to_string(),
            },
            other => other,
        })
    }
}

fn initial_symbols(word: &str, eow: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(eow);
    }
    symbols
}

/// Replaces non-overlapping occurrences of `left right`, scanning left to right.
fn merge_pair(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

struct PairCounts {
    counts: HashMap<Pair, i64>,
    // highest count first, then lexicographically smallest pair
    ordered: BTreeSet<(Reverse<i64>, String, String)>,
    occurs_in: HashMap<Pair, BTreeSet<usize>>,
}

impl PairCounts {
    fn bump(&mut self, pair: &Pair, delta: i64) {
        let old = self.counts.get(pair).copied().unwrap_or(0);
        if old > 0 {
            self.ordered.remove(&(Reverse(old), pair.0.clone(), pair.1.clone()));
        }
        let new = old + delta;
        if new > 0 {
            self.counts.insert(pair.clone(), new);
            self.ordered.insert((Reverse(new), pair.0.clone(), pair.1.clone()));
        } else {
            self.counts.remove(pair);
        }
    }

    fn add_word(&mut self, idx: usize, symbols: &[String], weight: i64) {
        for w in symbols.windows(2) {
            let pair = (w[0].clone(), w[1].clone());
            self.bump(&pair, weight);
            if weight > 0 {
                self.occurs_in.entry(pair).or_default().insert(idx);
            }
        }
    }
}

/// Learns up to `num_merges` merges from word frequencies in `corpus`.
///
/// Pass source and target sides together for a joint model. Each round
/// merges the pair with the highest frequency-weighted count; ties go to
/// the lexicographically smallest `(left, right)`. Learning stops early
/// when every word is a single symbol.
pub fn bpe_learn<'a, I>(corpus: I, num_merges: usize) -> Result<BpeModel, BpeError>
where
    I: IntoIterator<Item = &'a TokenSeq>,
{
    let mut freqs: BTreeMap<&str, i64> = BTreeMap::new();
    let mut any = false;
    for seq in corpus {
        any = true;
        for tok in seq {
            *freqs.entry(tok.as_str()).or_default() += 1;
        }
    }
    if !any {
        return Err(BpeError::EmptyCorpus);
    }

    let mut words: Vec<(Vec<String>, i64)> = freqs
        .into_iter()
        .map(|(w, f)| (initial_symbols(w, DEFAULT_EOW), f))
        .collect();
    let mut stats = PairCounts {
        counts: HashMap::new(),
        ordered: BTreeSet::new(),
        occurs_in: HashMap::new(),
    };
    for (idx, (symbols, freq)) in words.iter().enumerate() {
        stats.add_word(idx, symbols, *freq);
    }

    let mut merges = Vec::with_capacity(num_merges);
    while merges.len() < num_merges {
        let Some((_, left, right)) = stats.ordered.iter().next().cloned() else {
            break;
        };
        let pair = (left, right);
        let affected = stats.occurs_in.remove(&pair).unwrap_or_default();
        for idx in affected {
            let (symbols, freq) = &words[idx];
            let has_pair = symbols.windows(2).any(|w| w[0] == pair.0 && w[1] == pair.1);
            if !has_pair {
                continue;
            }
            let merged = merge_pair(symbols, &pair.0, &pair.1);
            let freq = *freq;
            let old = std::mem::replace(&mut words[idx].0, merged);
            stats.add_word(idx, &old, -freq);
            let new = words[idx].0.clone();
            stats.add_word(idx, &new, freq);
        }
        merges.push(pair);
    }
    BpeModel::new(merges)
}

/// Segments every token of `tokens` into subwords; non-final subwords carry
/// the `@@` continuation suffix.
pub fn bpe_apply(model: &BpeModel, tokens: &TokenSeq) -> TokenSeq {
    let mut out = Vec::with_capacity(tokens.len() * 2);
    for word in tokens {
        let mut symbols = model.segment(word);
        let last = symbols.pop().expect("tokens are non-empty");
        for s in symbols {
            out.push(format!("{s}{CONTINUATION}"));
        }
        let last = last.strip_suffix(model.eow_marker()).unwrap_or(&last).to_owned();
        out.push(last);
    }
    TokenSeq(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub tokens: TokenSeq,
    /// The input ended in a continuation subword with nothing to attach to.
    pub dangling: bool,
}

/// Rejoins `@@`-continued subwords with the subword that follows them.
pub fn bpe_decode(tokens: &TokenSeq) -> Decoded {
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut open = false;
    for tok in tokens {
        match tok.strip_suffix(CONTINUATION) {
            Some(stem) => {
                buf.push_str(stem);
                open = true;
            }
            None => {
                buf.push_str(tok);
                out.push(std::mem::take(&mut buf));
                open = false;
            }
        }
    }
    if open {
        log::warn!("segmented input ends with a dangling continuation marker");
        if !buf.is_empty() {
            out.push(buf);
        }
    }
    Decoded {
        tokens: TokenSeq(out),
        dangling: open,
    }
}
