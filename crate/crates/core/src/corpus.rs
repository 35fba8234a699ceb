//! Prompt / weighted-translation corpora in the block format.
//!
//! A gold file is a sequence of blocks separated by one blank line:
//!
//! ```text
//! q1|is my explanation clear?
//! minha explicação está clara?|0.26739
//! minha explicação é clara?|0.16168
//!
//! q2|this is my fault.
//! isto é minha culpa.|0.17991
//! ```
//!
//! Prediction files use the same layout with bare candidate lines. Every
//! writer emits LF line endings; gold writers emit blocks sorted by weight.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

/// Upper bound on the per-prompt weight sum. Weights are response fractions
/// and published sets are often truncated, so anything below 1 is legal.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Maximum fractional digits accepted in a weight field.
pub const MAX_WEIGHT_DECIMALS: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("invalid corpus entry: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        CorpusError::Parse {
            line,
            message: message.into(),
        }
    }

    fn validation(line: usize, message: impl Into<String>) -> Self {
        CorpusError::Validation {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Text canonicalization applied before two sentences are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub collapse_whitespace: bool,
    pub unicode_nfc: bool,
}

impl NormalizationPolicy {
    /// Byte-for-byte comparison.
    pub const EXACT: Self = Self {
        lowercase: false,
        strip_punctuation: false,
        collapse_whitespace: false,
        unicode_nfc: false,
    };

    pub const DEFAULT: Self = Self {
        lowercase: true,
        strip_punctuation: true,
        collapse_whitespace: true,
        unicode_nfc: true,
    };

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::DEFAULT),
            "exact" => Some(Self::EXACT),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        if *self == Self::DEFAULT {
            "default"
        } else if *self == Self::EXACT {
            "exact"
        } else {
            "custom"
        }
    }
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// True for every character in the Unicode punctuation categories (P*).
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Canonicalizes `text` under `policy`.
///
/// Stages run in a fixed order: NFC, punctuation removal, whitespace
/// collapse, lowercasing, then a closing NFC pass. Removing punctuation can
/// bring a combining mark next to a new base character, and lowercasing can
/// emit decomposed sequences, so the final NFC pass is what makes the
/// function idempotent.
pub fn normalize(text: &str, policy: &NormalizationPolicy) -> String {
    let mut out: String = if policy.unicode_nfc {
        text.nfc().collect()
    } else {
        text.to_owned()
    };
    if policy.strip_punctuation {
        out.retain(|c| !is_punctuation(c));
    }
    if policy.collapse_whitespace {
        out = out.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    if policy.lowercase {
        out = out.to_lowercase();
    }
    if policy.unicode_nfc {
        out = out.nfc().collect();
    }
    out
}

/// A source-language sentence with its identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    id: String,
    text: String,
}

impl Prompt {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        validate_id(&id).map_err(CorpusError::Invalid)?;
        if text.trim().is_empty() {
            return Err(CorpusError::Invalid(format!("prompt {id:?} has empty text")));
        }
        if text.contains(['\n', '\r']) {
            return Err(CorpusError::Invalid(format!(
                "prompt {id:?} text contains a line break"
            )));
        }
        Ok(Self { id, text })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn validate_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() {
        return Err("empty prompt id".into());
    }
    if id.contains(['|', '\n', '\r']) {
        return Err(format!("prompt id {id:?} contains '|' or a line break"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTranslation {
    pub text: String,
    pub weight: f64,
}

impl WeightedTranslation {
    pub fn new(text: impl Into<String>, weight: f64) -> Self {
        Self {
            text: text.into(),
            weight,
        }
    }
}

/// A prompt with its accepted translations, heaviest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldSet {
    prompt: Prompt,
    translations: Vec<WeightedTranslation>,
}

impl GoldSet {
    /// Validates and sorts the translations by weight (stable, non-increasing).
    pub fn new(
        prompt: Prompt,
        mut translations: Vec<WeightedTranslation>,
        policy: &NormalizationPolicy,
    ) -> Result<Self> {
        let id = prompt.id().to_owned();
        if translations.is_empty() {
            return Err(CorpusError::Invalid(format!("gold set {id:?} has no translations")));
        }
        let mut seen = HashSet::new();
        for t in &translations {
            check_weight(t.weight).map_err(CorpusError::Invalid)?;
            if t.text.contains(['\n', '\r', '|']) {
                return Err(CorpusError::Invalid(format!(
                    "translation {:?} contains '|' or a line break",
                    t.text
                )));
            }
            let key = normalize(&t.text, policy);
            if key.is_empty() || t.text.trim().is_empty() {
                return Err(CorpusError::Invalid(format!(
                    "translation {:?} is empty after normalization",
                    t.text
                )));
            }
            if !seen.insert(key) {
                return Err(CorpusError::Invalid(format!(
                    "duplicate translation {:?} in gold set {id:?}",
                    t.text
                )));
            }
        }
        let sum: f64 = translations.iter().map(|t| t.weight).sum();
        if sum > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(CorpusError::Invalid(format!(
                "weights of gold set {id:?} sum to {sum}, above 1"
            )));
        }
        translations.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        Ok(Self {
            prompt,
            translations,
        })
    }

    pub fn prompt(&self) -> &Prompt {
        &self.prompt
    }

    pub fn id(&self) -> &str {
        self.prompt.id()
    }

    pub fn translations(&self) -> &[WeightedTranslation] {
        &self.translations
    }

    pub fn total_weight(&self) -> f64 {
        self.translations.iter().map(|t| t.weight).sum()
    }
}

fn check_weight(weight: f64) -> std::result::Result<(), String> {
    if weight.is_finite() && weight > 0.0 && weight <= 1.0 {
        Ok(())
    } else {
        Err(format!("weight {weight} outside (0, 1]"))
    }
}

/// De-duplicated candidate translations for one prompt, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub prompt_id: String,
    pub candidates: Vec<String>,
}

impl PredictionSet {
    pub fn new(prompt_id: impl Into<String>, candidates: Vec<String>) -> Self {
        Self {
            prompt_id: prompt_id.into(),
            candidates,
        }
    }

    pub fn empty(prompt_id: impl Into<String>) -> Self {
        Self::new(prompt_id, Vec::new())
    }
}

/// Why a non-empty input line did not make it into a parsed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WarningKind {
    EmptyCandidate,
    DuplicateCandidate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub prompt_id: String,
    pub kind: WarningKind,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            WarningKind::EmptyCandidate => "empty candidate skipped",
            WarningKind::DuplicateCandidate => "duplicate candidate skipped",
        };
        write!(f, "line {}: {} ({})", self.line, what, self.prompt_id)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedPredictions {
    pub sets: Vec<PredictionSet>,
    pub warnings: Vec<ParseWarning>,
}

struct RawBlock {
    header_line: usize,
    header: String,
    body: Vec<(usize, String)>,
}

/// Splits a stream into blank-line separated blocks. Lines are kept as-is
/// apart from a trailing `\r`.
fn read_blocks<R: BufRead>(reader: R) -> Result<Vec<RawBlock>> {
    let mut blocks = Vec::new();
    let mut current: Option<RawBlock> = None;
    for (idx, line) in reader.lines().enumerate() {
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        let lineno = idx + 1;
        if line.is_empty() {
            if let Some(block) = current.take() {
                blocks.push(block);
            }
            continue;
        }
        match current.as_mut() {
            None => {
                current = Some(RawBlock {
                    header_line: lineno,
                    header: line,
                    body: Vec::new(),
                })
            }
            Some(block) => block.body.push((lineno, line)),
        }
    }
    blocks.extend(current);
    Ok(blocks)
}

fn split_header(block: &RawBlock) -> Result<(String, String)> {
    let (id, text) = block
        .header
        .split_once('|')
        .ok_or_else(|| CorpusError::parse(block.header_line, "header is missing '|' (expected `id|prompt`)"))?;
    validate_id(id).map_err(|m| CorpusError::validation(block.header_line, m))?;
    Ok((id.to_owned(), text.to_owned()))
}

fn parse_weight(field: &str, line: usize) -> Result<f64> {
    let (int_part, frac_part) = match field.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (field, None),
    };
    let well_formed = !int_part.is_empty()
        && int_part.bytes().all(|b| b.is_ascii_digit())
        && frac_part.is_none_or(|f| {
            !f.is_empty() && f.len() <= MAX_WEIGHT_DECIMALS && f.bytes().all(|b| b.is_ascii_digit())
        });
    if !well_formed {
        return Err(CorpusError::parse(
            line,
            format!("weight {field:?} is not a decimal with at most {MAX_WEIGHT_DECIMALS} fractional digits"),
        ));
    }
    let weight: f64 = field
        .parse()
        .map_err(|_| CorpusError::parse(line, format!("unparseable weight {field:?}")))?;
    check_weight(weight).map_err(|m| CorpusError::validation(line, m))?;
    Ok(weight)
}

/// Parses a gold file. Translations are compared under `policy` when
/// checking for duplicates.
pub fn parse_gold<R: BufRead>(reader: R, policy: &NormalizationPolicy) -> Result<Vec<GoldSet>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for block in read_blocks(reader)? {
        let (id, text) = split_header(&block)?;
        if !ids.insert(id.clone()) {
            return Err(CorpusError::validation(
                block.header_line,
                format!("duplicate prompt id {id:?}"),
            ));
        }
        let prompt = Prompt::new(id.clone(), text)
            .map_err(|e| CorpusError::validation(block.header_line, e.to_string()))?;
        if block.body.is_empty() {
            return Err(CorpusError::validation(
                block.header_line,
                format!("block {id:?} has no translations"),
            ));
        }
        let mut translations = Vec::with_capacity(block.body.len());
        let mut seen = HashSet::new();
        for (lineno, line) in &block.body {
            let (text, weight) = line.rsplit_once('|').ok_or_else(|| {
                CorpusError::parse(*lineno, "translation line is missing '|' (expected `text|weight`)")
            })?;
            let weight = parse_weight(weight, *lineno)?;
            let key = normalize(text, policy);
            if key.is_empty() || text.trim().is_empty() {
                return Err(CorpusError::validation(*lineno, "translation is empty after normalization"));
            }
            if !seen.insert(key) {
                return Err(CorpusError::validation(
                    *lineno,
                    format!("duplicate translation {text:?}"),
                ));
            }
            translations.push(WeightedTranslation::new(text, weight));
        }
        let gold = GoldSet::new(prompt, translations, policy)
            .map_err(|e| CorpusError::validation(block.header_line, e.to_string()))?;
        out.push(gold);
    }
    Ok(out)
}

/// Parses a prediction file, de-duplicating candidates under `policy`
/// (first occurrence wins, surface form kept). Skipped lines are reported
/// as warnings rather than dropped silently.
pub fn parse_predictions<R: BufRead>(
    reader: R,
    policy: &NormalizationPolicy,
) -> Result<ParsedPredictions> {
    let mut parsed = ParsedPredictions::default();
    let mut ids = HashSet::new();
    for block in read_blocks(reader)? {
        let (id, _prompt_text) = split_header(&block)?;
        if !ids.insert(id.clone()) {
            return Err(CorpusError::validation(
                block.header_line,
                format!("duplicate prompt id {id:?}"),
            ));
        }
        let mut seen = HashSet::new();
        let mut candidates = Vec::with_capacity(block.body.len());
        for (lineno, line) in block.body {
            let key = normalize(&line, policy);
            let kind = if line.trim().is_empty() || key.is_empty() {
                WarningKind::EmptyCandidate
            } else if !seen.insert(key) {
                WarningKind::DuplicateCandidate
            } else {
                candidates.push(line);
                continue;
            };
            parsed.warnings.push(ParseWarning {
                line: lineno,
                prompt_id: id.clone(),
                kind,
            });
        }
        parsed.sets.push(PredictionSet::new(id, candidates));
    }
    Ok(parsed)
}

fn check_writable_line(text: &str) -> Result<()> {
    if text.trim().is_empty() {
        return Err(CorpusError::Invalid("cannot write an empty line".into()));
    }
    if text.contains(['\n', '\r']) {
        return Err(CorpusError::Invalid(format!("{text:?} contains a line break")));
    }
    Ok(())
}

/// Writes prediction sets in block format. The header carries only the id.
pub fn write_predictions<W: Write>(sets: &[PredictionSet], mut sink: W) -> Result<()> {
    for (i, set) in sets.iter().enumerate() {
        validate_id(&set.prompt_id).map_err(CorpusError::Invalid)?;
        if i > 0 {
            sink.write_all(b"\n")?;
        }
        writeln!(sink, "{}|", set.prompt_id)?;
        for c in &set.candidates {
            check_writable_line(c)?;
            writeln!(sink, "{c}")?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// Renders a weight with at most six fractional digits, trailing zeros trimmed.
pub fn format_weight(weight: f64) -> String {
    let s = format!("{weight:.6}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_owned()
}

pub fn write_gold<W: Write>(sets: &[GoldSet], mut sink: W) -> Result<()> {
    for (i, set) in sets.iter().enumerate() {
        if i > 0 {
            sink.write_all(b"\n")?;
        }
        writeln!(sink, "{}|{}", set.id(), set.prompt().text())?;
        for t in set.translations() {
            writeln!(sink, "{}|{}", t.text, format_weight(t.weight))?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// Reads a prompt list: one `id|text` per line, blank lines ignored.
pub fn parse_prompts<R: BufRead>(reader: R) -> Result<Vec<Prompt>> {
    let mut prompts = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (id, text) = line
            .split_once('|')
            .ok_or_else(|| CorpusError::parse(lineno, "prompt line is missing '|' (expected `id|prompt`)"))?;
        let prompt =
            Prompt::new(id, text).map_err(|e| CorpusError::validation(lineno, e.to_string()))?;
        if !ids.insert(id.to_owned()) {
            return Err(CorpusError::validation(lineno, format!("duplicate prompt id {id:?}")));
        }
        prompts.push(prompt);
    }
    Ok(prompts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXPLANATION: &str = "q1|is my explanation clear?\n\
minha explicação está clara?|0.26739\n\
minha explicação é clara?|0.16168\n\
a minha explicação é clara?|0.11109\n\
está clara minha explicação?|0.08778\n\
minha explanação está clara?|0.05717\n";

    fn gold(s: &str) -> Result<Vec<GoldSet>> {
        parse_gold(s.as_bytes(), &NormalizationPolicy::DEFAULT)
    }

    fn preds(s: &str) -> ParsedPredictions {
        parse_predictions(s.as_bytes(), &NormalizationPolicy::DEFAULT).unwrap()
    }

    #[test]
    fn normalize_default_policy() {
        let p = NormalizationPolicy::DEFAULT;
        assert_eq!(normalize("Minha explicação está CLARA?", &p), "minha explicação está clara");
        assert_eq!(normalize("a  b\tc ", &p), "a b c");
        assert_eq!(normalize("?!.", &p), "");
    }

    #[test]
    fn normalize_exact_is_identity() {
        let s = "  Olá,  Mundo! ";
        assert_eq!(normalize(s, &NormalizationPolicy::EXACT), s);
    }

    #[test]
    fn normalize_composes_decomposed_input() {
        let decomposed = "explicac\u{0327}a\u{0303}o";
        assert_eq!(normalize(decomposed, &NormalizationPolicy::DEFAULT), "explicação");
    }

    #[test]
    fn parses_explanation_block() {
        let sets = gold(EXPLANATION).unwrap();
        assert_eq!(sets.len(), 1);
        let g = &sets[0];
        assert_eq!(g.id(), "q1");
        assert_eq!(g.prompt().text(), "is my explanation clear?");
        assert_eq!(g.translations().len(), 5);
        assert_eq!(g.translations()[0].weight, 0.26739);
        assert_eq!(g.translations()[0].text, "minha explicação está clara?");
    }

    #[test]
    fn single_translation_block() {
        let sets = gold("q|hello\nolá|1.0\n").unwrap();
        assert_eq!(sets[0].translations().len(), 1);
        assert_eq!(sets[0].translations()[0].weight, 1.0);
    }

    #[test]
    fn parser_sorts_by_weight() {
        let sets = gold("q|x\na|0.1\nb|0.5\nc|0.3\n").unwrap();
        let w: Vec<f64> = sets[0].translations().iter().map(|t| t.weight).collect();
        assert_eq!(w, vec![0.5, 0.3, 0.1]);
    }

    #[test]
    fn weight_out_of_range_is_validation_error() {
        match gold("q|x\nfoo|1.5\n") {
            Err(CorpusError::Validation { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(gold("q|x\nfoo|0\n"), Err(CorpusError::Validation { .. })));
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = gold("q|x\na|0.5\n\nno pipe here\nb|0.2\n").unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_translation_rejected() {
        // equal after punctuation stripping and lowercasing
        let err = gold("q|x\nOlá!|0.5\nolá|0.2\n").unwrap_err();
        assert!(matches!(err, CorpusError::Validation { line: 3, .. }));
    }

    #[test]
    fn empty_block_rejected() {
        assert!(matches!(gold("q|x\n"), Err(CorpusError::Validation { .. })));
    }

    #[test]
    fn overweight_block_rejected() {
        assert!(gold("q|x\na|0.6\nb|0.6\n").is_err());
        // truncated sets below 1 are fine
        assert!(gold("q|x\na|0.2\nb|0.1\n").is_ok());
    }

    #[test]
    fn too_many_weight_decimals_rejected() {
        assert!(matches!(gold("q|x\na|0.1234567\n"), Err(CorpusError::Parse { .. })));
        assert!(matches!(gold("q|x\na|1e-3\n"), Err(CorpusError::Parse { .. })));
    }

    #[test]
    fn prediction_dedup_keeps_first() {
        let p = preds("q1|hello\na\nb\na\n");
        assert_eq!(p.sets, vec![PredictionSet::new("q1", vec!["a".into(), "b".into()])]);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].kind, WarningKind::DuplicateCandidate);
        assert_eq!(p.warnings[0].line, 4);
    }

    #[test]
    fn empty_prediction_stream() {
        assert!(preds("").sets.is_empty());
    }

    #[test]
    fn prediction_blocks_keep_order() {
        let p = preds("q1|\na\n\nq2|\nb\n");
        let ids: Vec<_> = p.sets.iter().map(|s| s.prompt_id.as_str()).collect();
        assert_eq!(ids, ["q1", "q2"]);
    }

    #[test]
    fn duplicate_prediction_id_rejected() {
        let err = parse_predictions("q1|\na\n\nq1|\nb\n".as_bytes(), &NormalizationPolicy::DEFAULT);
        assert!(matches!(err, Err(CorpusError::Validation { line: 4, .. })));
    }

    #[test]
    fn whitespace_and_punctuation_only_candidates_warned() {
        let p = preds("q1|\n  \n?!\nok\n");
        assert_eq!(p.sets[0].candidates, vec!["ok".to_string()]);
        assert_eq!(p.warnings.len(), 2);
        assert!(p.warnings.iter().all(|w| w.kind == WarningKind::EmptyCandidate));
    }

    #[test]
    fn write_predictions_shapes() {
        let mut buf = Vec::new();
        write_predictions(&[], &mut buf).unwrap();
        assert!(buf.is_empty());

        let mut buf = Vec::new();
        write_predictions(&[PredictionSet::new("q1", vec!["a".into()])], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "q1|\na\n");
    }

    #[test]
    fn write_rejects_multiline_candidate() {
        let set = PredictionSet::new("q1", vec!["a\nb".into()]);
        assert!(write_predictions(&[set], Vec::new()).is_err());
    }

    #[test]
    fn gold_write_round_trip() {
        let sets = gold(EXPLANATION).unwrap();
        let mut buf = Vec::new();
        write_gold(&sets, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), EXPLANATION);
        assert_eq!(gold(std::str::from_utf8(&buf).unwrap()).unwrap(), sets);
    }

    #[test]
    fn crlf_input_accepted() {
        let sets = gold("q|x\r\na|0.5\r\n").unwrap();
        assert_eq!(sets[0].translations()[0].text, "a");
    }

    #[test]
    fn prompts_file() {
        let p = parse_prompts("q1|hello there\n\nq2|bye\n".as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].text(), "bye");
        assert!(parse_prompts("q1|a\nq1|b\n".as_bytes()).is_err());
        assert!(parse_prompts("nope\n".as_bytes()).is_err());
    }

    fn candidate() -> impl Strategy<Value = String> {
        "[a-zA-Zçãé?!., |-]{1,12}".prop_filter("must survive normalization", |s| {
            !s.trim().is_empty() && !normalize(s, &NormalizationPolicy::DEFAULT).is_empty()
        })
    }

    fn prediction_corpus() -> impl Strategy<Value = Vec<PredictionSet>> {
        prop::collection::vec(prop::collection::vec(candidate(), 0..6), 0..5).prop_map(|blocks| {
            blocks
                .into_iter()
                .enumerate()
                .map(|(i, cands)| {
                    let mut seen = HashSet::new();
                    let cands = cands
                        .into_iter()
                        .filter(|c| seen.insert(normalize(c, &NormalizationPolicy::DEFAULT)))
                        .collect();
                    PredictionSet::new(format!("p{i}"), cands)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn prediction_round_trip(sets in prediction_corpus()) {
            let mut buf = Vec::new();
            write_predictions(&sets, &mut buf).unwrap();
            let back = parse_predictions(buf.as_slice(), &NormalizationPolicy::DEFAULT).unwrap();
            prop_assert!(back.warnings.is_empty());
            prop_assert_eq!(back.sets, sets);
        }

        #[test]
        fn normalize_idempotent_default(s in "\\PC*") {
            let p = NormalizationPolicy::DEFAULT;
            let once = normalize(&s, &p);
            prop_assert_eq!(normalize(&once, &p), once);
        }

        #[test]
        fn normalize_idempotent_any_policy(
            s in any::<String>(),
            flags in any::<(bool, bool, bool, bool)>(),
        ) {
            let p = NormalizationPolicy {
                lowercase: flags.0,
                strip_punctuation: flags.1,
                collapse_whitespace: flags.2,
                unicode_nfc: flags.3,
            };
            let once = normalize(&s, &p);
            prop_assert_eq!(normalize(&once, &p), once);
        }

        #[test]
        fn gold_weights_sorted(ws in prop::collection::vec(1u32..=100_000, 1..8)) {
            let total: u32 = ws.iter().sum();
            let mut text = String::from("q|prompt\n");
            for (i, w) in ws.iter().enumerate() {
                // scale so the block sums to at most 1
                let weight = (*w as f64 / total.max(1) as f64 * 1e6).floor() / 1e6;
                let weight = if weight <= 0.0 { 0.000001 } else { weight };
                text.push_str(&format!("t{i}|{}\n", format_weight(weight)));
            }
            if let Ok(sets) = gold(&text) {
                let w: Vec<f64> = sets[0].translations().iter().map(|t| t.weight).collect();
                prop_assert!(w.windows(2).all(|p| p[0] >= p[1]));
                prop_assert_eq!(w.len(), ws.len());
            }
        }

        #[test]
        fn no_line_silently_dropped(lines in prop::collection::vec("[ab?]{0,3}", 0..10)) {
            let mut text = String::from("q|p\n");
            let mut nonempty = 0;
            for l in &lines {
                if !l.is_empty() {
                    text.push_str(l);
                    text.push('\n');
                    nonempty += 1;
                }
            }
            let parsed = preds(&text);
            let kept: usize = parsed.sets.iter().map(|s| s.candidates.len()).sum();
            prop_assert_eq!(kept + parsed.warnings.len(), nonempty);
        }
    }
}
