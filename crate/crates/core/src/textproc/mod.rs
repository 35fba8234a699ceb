//! Rule-based tokenization and byte-pair encoding.

pub mod bpe;

use std::fmt;

use crate::corpus::{is_punctuation, normalize, NormalizationPolicy};

pub use bpe::{bpe_apply, bpe_decode, bpe_learn, BpeError, BpeModel, Decoded};

/// A sequence of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TokenSeq(Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
pub struct InvalidToken(pub String);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self, InvalidToken> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(InvalidToken(bad.clone()));
        }
        Ok(Self(tokens))
    }

    /// Splits on whitespace only.
    pub fn from_whitespace(text: &str) -> Self {
        Self(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}' | '\u{2011}')
}

/// Splits on whitespace, then separates each maximal run of punctuation
/// into its own token. Apostrophes and hyphens with an alphanumeric
/// character on both sides stay inside the word.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        let mut current_is_punct = false;
        for (i, &c) in chars.iter().enumerate() {
            let inner_joiner = is_joiner(c)
                && i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_alphanumeric()
                && chars[i + 1].is_alphanumeric();
            let punct = is_punctuation(c) && !inner_joiner;
            if !current.is_empty() && punct != current_is_punct {
                tokens.push(std::mem::take(&mut current));
            }
            current_is_punct = punct;
            current.push(c);
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSeq(tokens)
}

fn attaches_left(token: &str) -> bool {
    token
        .chars()
        .all(|c| matches!(c, '?' | '!' | '.' | ',' | ';' | ':' | ')' | ']' | '}' | '\u{2026}'))
}

/// Joins tokens with single spaces; closing punctuation tokens are glued to
/// the preceding token.
pub fn detokenize(tokens: &TokenSeq) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 && !attaches_left(tok) {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// The pipeline used for translator input: default normalization (which
/// drops punctuation) followed by tokenization.
pub fn preprocess(text: &str) -> TokenSeq {
    tokenize(&normalize(text, &NormalizationPolicy::DEFAULT))
}
