//! Checkpoint persistence.
//!
//! A checkpoint directory holds three UTF-8 files:
//!
//! * `meta.tsv`: `key<TAB>value` lines (iteration, direction, corpus_loglik,
//!   lm_alpha, created_at, checksum)
//! * `lexicon.tsv`: `source<TAB>target<TAB>prob`, sorted
//! * `lm.tsv`: `w1<TAB>w2<TAB>logprob`, sorted; `<s>`/`</s>` boundary rows,
//!   `w1<TAB><*>` unseen-continuation rows and `<unigram><TAB>w` backoff rows
//!
//! The checksum is SHA-256 over the meta fields other than `created_at`
//! and `checksum`, followed by the bytes of the two tables. A series is a
//! directory of `ckpt-NNNN/` checkpoints plus a `series.tsv` manifest.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{BigramLm, Direction, LexiconTable, Result, TranslatorError};

/// Tolerance for the non-decreasing likelihood check on series load.
pub const LOGLIK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: u32,
    pub direction: Direction,
    pub lexicon: LexiconTable,
    pub lm: BigramLm,
    pub corpus_loglik: f64,
    pub created_at: u64,
}

impl Checkpoint {
    pub fn dir_name(iteration: u32) -> String {
        format!("ckpt-{iteration:04}")
    }

    fn render(&self) -> Rendered {
        let mut lexicon = String::new();
        for (src, row) in self.lexicon.rows() {
            for (tgt, p) in row {
                let _ = writeln!(lexicon, "{src}\t{tgt}\t{p}");
            }
        }
        let mut lm = String::new();
        for (h, w, lp) in self.lm.rows() {
            let _ = writeln!(lm, "{h}\t{w}\t{lp}");
        }
        let fields = format!(
            "iteration\t{}\ndirection\t{}\ncorpus_loglik\t{}\nlm_alpha\t{}\n",
            self.iteration,
            self.direction,
            self.corpus_loglik,
            self.lm.alpha()
        );
        let checksum = checksum(&fields, &lexicon, &lm);
        let meta = format!("{fields}created_at\t{}\nchecksum\t{checksum}\n", self.created_at);
        Rendered {
            meta,
            lexicon,
            lm,
            checksum,
        }
    }

    /// Hex SHA-256 identifying this checkpoint's content.
    pub fn checksum(&self) -> String {
        self.render().checksum
    }
}

struct Rendered {
    meta: String,
    lexicon: String,
    lm: String,
    checksum: String,
}

fn checksum(fields: &str, lexicon: &str, lm: &str) -> String {
    let mut h = Sha256::new();
    h.update(fields.as_bytes());
    h.update(lexicon.as_bytes());
    h.update(lm.as_bytes());
    hex::encode(h.finalize())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TranslatorError + '_ {
    move |source| TranslatorError::Io {
        path: path.to_owned(),
        source,
    }
}

fn corrupt(path: &Path, line: usize, message: impl Into<String>) -> TranslatorError {
    TranslatorError::Corrupt {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let r = ckpt.render();
    for (name, body) in [("lexicon.tsv", &r.lexicon), ("lm.tsv", &r.lm), ("meta.tsv", &r.meta)] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(TranslatorError::MissingFile(path.to_owned()))
        }
        Err(e) => Err(io_err(path)(e)),
    }
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| corrupt(path, line, format!("bad number {s:?}")))
}

fn parse_triples(path: &Path, body: &str) -> Result<Vec<(String, String, f64)>> {
    body.lines()
        .enumerate()
        .map(|(i, line)| {
            let mut f = line.split('\t');
            match (f.next(), f.next(), f.next(), f.next()) {
                (Some(a), Some(b), Some(v), None) if !a.is_empty() && !b.is_empty() => {
                    Ok((a.to_owned(), b.to_owned(), parse_f64(path, i + 1, v)?))
                }
                _ => Err(corrupt(path, i + 1, "expected three tab-separated fields")),
            }
        })
        .collect()
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let meta_path = dir.join("meta.tsv");
    let lex_path = dir.join("lexicon.tsv");
    let lm_path = dir.join("lm.tsv");
    let meta_body = read_file(&meta_path)?;
    let lex_body = read_file(&lex_path)?;
    let lm_body = read_file(&lm_path)?;

    let mut meta: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, line) in meta_body.lines().enumerate() {
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| corrupt(&meta_path, i + 1, "expected `key<TAB>value`"))?;
        meta.insert(k, (i + 1, v));
    }
    let get = |key: &str| {
        meta.get(key)
            .copied()
            .ok_or_else(|| corrupt(&meta_path, 0, format!("missing key {key:?}")))
    };
    let (l, v) = get("iteration")?;
    let iteration: u32 = v
        .parse()
        .ok()
        .filter(|&i| i >= 1)
        .ok_or_else(|| corrupt(&meta_path, l, format!("bad iteration {v:?}")))?;
    let (l, v) = get("direction")?;
    let direction: Direction = v.parse().map_err(|e: String| corrupt(&meta_path, l, e))?;
    let (l, v) = get("corpus_loglik")?;
    let corpus_loglik = parse_f64(&meta_path, l, v)?;
    let (l, v) = get("lm_alpha")?;
    let lm_alpha = parse_f64(&meta_path, l, v)?;
    let (l, v) = get("created_at")?;
    let created_at: u64 = v
        .parse()
        .map_err(|_| corrupt(&meta_path, l, format!("bad created_at {v:?}")))?;
    let (_, expected) = get("checksum")?;

    let fields = format!(
        "iteration\t{}\ndirection\t{}\ncorpus_loglik\t{}\nlm_alpha\t{}\n",
        get("iteration")?.1,
        get("direction")?.1,
        get("corpus_loglik")?.1,
        get("lm_alpha")?.1
    );
    let actual = checksum(&fields, &lex_body, &lm_body);
    if actual != expected {
        return Err(TranslatorError::Integrity {
            path: meta_path,
            expected: expected.to_owned(),
            actual,
        });
    }

    let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (src, tgt, p) in parse_triples(&lex_path, &lex_body)? {
        rows.entry(src).or_default().insert(tgt, p);
    }
    let lm = BigramLm::from_rows(lm_alpha, parse_triples(&lm_path, &lm_body)?)
        .map_err(|m| corrupt(&lm_path, 0, m))?;

    let ckpt = Checkpoint {
        iteration,
        direction,
        lexicon: LexiconTable::from_rows(rows),
        lm,
        corpus_loglik,
        created_at,
    };
    Ok(ckpt)
}

/// Checkpoints of one training run, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSeries {
    direction: Direction,
    checkpoints: Vec<Checkpoint>,
}

impl CheckpointSeries {
    /// Checks ordering, direction, and that likelihood never decreases.
    pub fn new(direction: Direction, checkpoints: Vec<Checkpoint>) -> Result<Self> {
        if checkpoints.is_empty() {
            return Err(TranslatorError::Series("no checkpoints".into()));
        }
        for c in &checkpoints {
            if c.direction != direction {
                return Err(TranslatorError::Series(format!(
                    "checkpoint {} has direction {}, series is {direction}",
                    c.iteration, c.direction
                )));
            }
        }
        for w in checkpoints.windows(2) {
            if w[1].iteration <= w[0].iteration {
                return Err(TranslatorError::Series(format!(
                    "iterations not strictly increasing ({} then {})",
                    w[0].iteration, w[1].iteration
                )));
            }
            if w[1].corpus_loglik < w[0].corpus_loglik - LOGLIK_TOLERANCE {
                return Err(TranslatorError::Series(format!(
                    "corpus log-likelihood decreased from {} (iteration {}) to {} (iteration {})",
                    w[0].corpus_loglik, w[0].iteration, w[1].corpus_loglik, w[1].iteration
                )));
            }
        }
        Ok(Self {
            direction,
            checkpoints,
        })
    }

    pub fn single(ckpt: Checkpoint) -> Self {
        Self {
            direction: ckpt.direction,
            checkpoints: vec![ckpt],
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    pub fn latest(&self) -> &Checkpoint {
        self.checkpoints.last().expect("series is never empty")
    }

    /// The `m` highest-iteration checkpoints, latest first.
    pub fn last_m(&self, m: usize) -> Result<Vec<&Checkpoint>> {
        if m == 0 || m > self.checkpoints.len() {
            return Err(TranslatorError::Series(format!(
                "requested m={m} checkpoints but the series has {}",
                self.checkpoints.len()
            )));
        }
        Ok(self.checkpoints.iter().rev().take(m).collect())
    }

    pub(crate) fn write_manifest(&self, dir: &Path) -> Result<()> {
        let mut body = String::from("iteration\tdirection\tcorpus_loglik\tchecksum\n");
        for c in &self.checkpoints {
            let _ = writeln!(
                body,
                "{}\t{}\t{}\t{}",
                c.iteration,
                c.direction,
                c.corpus_loglik,
                c.checksum()
            );
        }
        let path = dir.join("series.tsv");
        fs::write(&path, body).map_err(io_err(&path))
    }
}

/// Writes every checkpoint as `dir/ckpt-NNNN/` plus `dir/series.tsv`.
pub fn save_series(series: &CheckpointSeries, dir: &Path) -> Result<()> {
    for c in series.checkpoints() {
        save_checkpoint(c, &dir.join(Checkpoint::dir_name(c.iteration)))?;
    }
    series.write_manifest(dir)
}

fn is_ckpt_dir_name(name: &str) -> bool {
    name.strip_prefix("ckpt-")
        .is_some_and(|d| d.len() >= 4 && d.bytes().all(|b| b.is_ascii_digit()))
}

pub fn load_series(dir: &Path) -> Result<CheckpointSeries> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter(|e| e.file_name().to_str().is_some_and(is_ckpt_dir_name))
        .map(|e| e.path())
        .collect();
    if dirs.is_empty() {
        return Err(TranslatorError::Series(format!(
            "{} contains no ckpt-NNNN directories",
            dir.display()
        )));
    }
    dirs.sort();
    let checkpoints = dirs.iter().map(|d| load_checkpoint(d)).collect::<Result<Vec<_>>>()?;
    let mut checkpoints = checkpoints;
    checkpoints.sort_by_key(|c| c.iteration);
    let direction = checkpoints[0].direction;
    CheckpointSeries::new(direction, checkpoints)
}
