use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use staple_forge_core::corpus::{
    parse_gold, parse_predictions, parse_prompts, write_predictions, GoldSet, NormalizationPolicy, Prompt,
};
use staple_forge_core::methods::{MethodParams, MethodRegistry, Models};
use staple_forge_core::metrics::{render_report, score_corpus, summary_line};
use staple_forge_core::textproc::{self, preprocess, BpeModel, TokenSeq};
use staple_forge_core::translator::{
    load_checkpoint, load_series, train_toy, BeamParams, Checkpoint, CheckpointSeries, Direction, TrainOptions,
};

use crate::error::{CliError, Result};
use crate::manifest::{sha256_file, sha256_hex, sha256_model, RunManifest};
use crate::sweep::{self, SweepSpec};
use crate::DecodeArgs;

pub const SOURCE_DATE_ENV: &str = "SOURCE_DATE_EPOCH";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::from(e).context(path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::from(e).context(path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn read_gold(path: &Path, policy: &NormalizationPolicy) -> Result<Vec<GoldSet>> {
    let gold = parse_gold(open(path)?, policy).map_err(|e| CliError::from(e).context(path.display()))?;
    if gold.is_empty() {
        return Err(CliError::empty(format!("{}: no gold prompts", path.display())));
    }
    Ok(gold)
}

fn read_prompts(path: &Path) -> Result<Vec<Prompt>> {
    let prompts = parse_prompts(open(path)?).map_err(|e| CliError::from(e).context(path.display()))?;
    if prompts.is_empty() {
        return Err(CliError::empty(format!("{}: no prompts", path.display())));
    }
    Ok(prompts)
}

fn log_elapsed(what: &str, start: Instant) {
    log::info!("{what} finished in {:.3}s", start.elapsed().as_secs_f64());
}

pub(crate) fn method_params(n: usize, n_prime: usize, m: usize, decode: &DecodeArgs) -> MethodParams {
    MethodParams {
        n,
        n_prime,
        m,
        beam: BeamParams {
            beam_width: decode.beam,
            n_best: n,
            max_len_ratio: decode.max_len_ratio,
            top_k_lexicon: decode.top_k,
        },
    }
}

pub fn score(gold_path: &Path, pred_path: &Path, policy: NormalizationPolicy, out: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let gold = read_gold(gold_path, &policy)?;
    let parsed =
        parse_predictions(open(pred_path)?, &policy).map_err(|e| CliError::from(e).context(pred_path.display()))?;
    for w in &parsed.warnings {
        log::warn!(
            "{}:{}: {:?} candidate in block {:?} skipped",
            pred_path.display(),
            w.line,
            w.kind,
            w.prompt_id
        );
    }
    let score = score_corpus(&gold, &parsed.sets, &policy).map_err(|e| CliError::input(e.to_string()))?;
    let report = render_report(&score);
    match out {
        Some(path) => write_file(path, report.as_bytes())?,
        None => print!("{report}"),
    }
    println!("{}", summary_line(&score));
    log_elapsed("score", start);
    Ok(())
}

fn read_parallel(path: &Path, direction: Direction) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    let mut pairs = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::from(e).context(path.display()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (src, tgt) = line.split_once('\t').ok_or_else(|| {
            CliError::input(format!(
                "{}: line {}: expected `source<TAB>target`",
                path.display(),
                idx + 1
            ))
        })?;
        if tgt.contains('\t') {
            return Err(CliError::input(format!(
                "{}: line {}: more than one tab",
                path.display(),
                idx + 1
            )));
        }
        let (src, tgt) = (preprocess(src), preprocess(tgt));
        pairs.push(match direction {
            Direction::Forward => (src, tgt),
            Direction::Backward => (tgt, src),
        });
    }
    Ok(pairs)
}

fn source_date() -> Result<u64> {
    match std::env::var(SOURCE_DATE_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{SOURCE_DATE_ENV} must be an integer, got {raw:?}"))),
        Err(_) => Ok(0),
    }
}

pub fn train(parallel: &Path, iterations: usize, out: &Path, direction: Direction, lm_alpha: f64) -> Result<()> {
    let start = Instant::now();
    if !(lm_alpha > 0.0) {
        return Err(CliError::input(format!("--lm-alpha must be positive, got {lm_alpha}")));
    }
    let pairs = read_parallel(parallel, direction)?;
    if out.exists() {
        let occupied = fs::read_dir(out)
            .map_err(|e| CliError::from(e).context(out.display()))?
            .filter_map(|e| e.ok())
            .any(|e| e.file_name().to_string_lossy().starts_with("ckpt-"));
        if occupied {
            return Err(CliError::input(format!("{} already holds checkpoints", out.display())));
        }
    }
    create_dir(out)?;
    let opts = TrainOptions {
        iterations,
        direction,
        lm_alpha,
        created_at: source_date()?,
    };
    let trained = train_toy(&pairs, &opts, Some(out))?;
    if !trained.skipped.is_empty() {
        log::warn!("{} sentence pairs skipped", trained.skipped.len());
    }

    println!("iteration\tcorpus_loglik");
    for c in trained.series.checkpoints() {
        println!("{}\t{}", c.iteration, c.corpus_loglik);
    }
    let mut manifest = RunManifest::new(
        "train",
        format!("iterations={iterations} direction={direction} lm_alpha={lm_alpha}"),
    );
    manifest.input("parallel", sha256_file(parallel)?);
    let series_bytes = fs::read(out.join("series.tsv"))?;
    manifest.output("series.tsv", &series_bytes);
    manifest.write(out)?;
    log_elapsed("train", start);
    Ok(())
}

fn load_model(path: &Path) -> Result<CheckpointSeries> {
    let series = if path.join("meta.tsv").is_file() {
        CheckpointSeries::single(load_checkpoint(path)?)
    } else {
        load_series(path)?
    };
    Ok(series)
}

fn load_forward(path: &Path) -> Result<CheckpointSeries> {
    let series = load_model(path)?;
    if series.direction() != Direction::Forward {
        return Err(CliError::input(format!(
            "{}: expected a forward (fwd) model, found {}",
            path.display(),
            series.direction()
        )));
    }
    Ok(series)
}

fn load_backward(path: &Path) -> Result<Checkpoint> {
    let series = load_model(path)?;
    if series.direction() != Direction::Backward {
        return Err(CliError::input(format!(
            "{}: expected a backward (bwd) model, found {}",
            path.display(),
            series.direction()
        )));
    }
    Ok(series.latest().clone())
}

pub struct GenerateRequest<'a> {
    pub method: &'a str,
    pub model: &'a Path,
    pub backward: Option<&'a Path>,
    pub prompts: &'a Path,
    pub out: &'a Path,
    pub params: MethodParams,
    pub policy: NormalizationPolicy,
}

pub fn generate(req: &GenerateRequest<'_>) -> Result<()> {
    let start = Instant::now();
    let registry = MethodRegistry::with_builtins();
    let method = registry.get(req.method)?;
    let prompts = read_prompts(req.prompts)?;
    let forward = load_forward(req.model)?;
    let backward = req.backward.map(load_backward).transpose()?;
    let models = Models {
        forward: &forward,
        backward: backward.as_ref(),
    };
    let generation = method.generate(models, &prompts, &req.params, &req.policy)?;
    for w in &generation.warnings {
        log::warn!("{} [{}]: {}", w.prompt_id, w.stage, w.message);
    }

    let mut predictions = Vec::new();
    write_predictions(&generation.sets, &mut predictions).map_err(|e| CliError::internal(e.to_string()))?;
    let warnings = generation.render_warnings();
    create_dir(req.out)?;
    write_file(&req.out.join("predictions.txt"), &predictions)?;
    write_file(&req.out.join("warnings.tsv"), warnings.as_bytes())?;

    let mut manifest = RunManifest::new(
        format!("generate {}", req.method),
        format!("{} policy={}", req.params.describe(), req.policy.name()),
    );
    manifest.input("model", sha256_model(req.model)?);
    if let Some(b) = req.backward {
        manifest.input("backward", sha256_model(b)?);
    }
    manifest.input("prompts", sha256_file(req.prompts)?);
    manifest.output("predictions.txt", &predictions);
    manifest.output("warnings.tsv", warnings.as_bytes());
    manifest.write(req.out)?;
    log_elapsed("generate", start);
    Ok(())
}

pub struct SweepRequest<'a> {
    pub model: &'a Path,
    pub backward: Option<&'a Path>,
    pub gold: &'a Path,
    pub prompts: &'a Path,
    pub out: Option<&'a Path>,
    pub spec: SweepSpec,
    pub base: MethodParams,
    pub policy: NormalizationPolicy,
}

pub fn sweep(req: &SweepRequest<'_>) -> Result<()> {
    let start = Instant::now();
    req.spec.validate()?;
    if req.spec.is_empty() {
        println!("{}", sweep::HEADER);
        return Err(CliError::empty("sweep spec has no cells"));
    }
    let gold = read_gold(req.gold, &req.policy)?;
    let prompts = read_prompts(req.prompts)?;
    let forward = load_forward(req.model)?;
    let backward = req.backward.map(load_backward).transpose()?;
    let models = Models {
        forward: &forward,
        backward: backward.as_ref(),
    };
    let registry = MethodRegistry::with_builtins();
    let cells = req.spec.cells(&req.base);
    let rows = sweep::run(&registry, models, &cells, &gold, &prompts, &req.policy);
    let table = sweep::render(&rows);
    print!("{table}");

    if let Some(out) = req.out {
        create_dir(out)?;
        write_file(&out.join("sweep.tsv"), table.as_bytes())?;
        let b = &req.base.beam;
        let mut manifest = RunManifest::new(
            "sweep",
            format!(
                "{} beam={} top_k={} max_len_ratio={} policy={}",
                req.spec.describe(),
                b.beam_width,
                b.top_k_lexicon,
                b.max_len_ratio,
                req.policy.name()
            ),
        );
        manifest.input("model", sha256_model(req.model)?);
        if let Some(bwd) = req.backward {
            manifest.input("backward", sha256_model(bwd)?);
        }
        manifest.input("gold", sha256_file(req.gold)?);
        manifest.input("prompts", sha256_file(req.prompts)?);
        manifest.output("sweep.tsv", table.as_bytes());
        manifest.write(out)?;
    }
    log_elapsed("sweep", start);
    if rows.iter().all(|r| r.score.is_err()) {
        return Err(CliError::input("every sweep cell failed"));
    }
    Ok(())
}

fn read_token_lines<R: BufRead>(reader: R, what: &str) -> Result<Vec<TokenSeq>> {
    reader
        .lines()
        .map(|l| {
            l.map(|l| TokenSeq::from_whitespace(&l))
                .map_err(|e| CliError::from(e).context(what))
        })
        .collect()
}

pub fn bpe_learn(inputs: &[std::path::PathBuf], merges: usize, out: &Path) -> Result<()> {
    let mut corpus = Vec::new();
    for path in inputs {
        corpus.extend(read_token_lines(open(path)?, &path.display().to_string())?);
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(CliError::empty("BPE corpus has no tokens"));
    }
    let model = textproc::bpe_learn(&corpus, merges)?;
    if model.num_merges() < merges {
        log::info!("stopped after {} merges: every word is a single symbol", model.num_merges());
    }
    let mut bytes = Vec::new();
    model.write_to(&mut bytes)?;
    write_file(out, &bytes)?;
    log::info!("wrote {} merges ({})", model.num_merges(), sha256_hex(&bytes));
    Ok(())
}

/// Streams `input` (or stdin) line by line through `f` into `out` (or stdout).
fn stream_lines<F>(input: Option<&Path>, out: Option<&Path>, mut f: F) -> Result<()>
where
    F: FnMut(TokenSeq) -> TokenSeq,
{
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(open(p)?),
        None => Box::new(io::stdin().lock()),
    };
    let mut writer: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::from(e).context(p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for line in reader.lines() {
        let seq = TokenSeq::from_whitespace(&line?);
        writeln!(writer, "{}", f(seq))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn bpe_apply(model_path: &Path, input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let model =
        BpeModel::read_from(open(model_path)?).map_err(|e| CliError::from(e).context(model_path.display()))?;
    stream_lines(input, out, |seq| textproc::bpe_apply(&model, &seq))
}

pub fn bpe_decode(input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    stream_lines(input, out, |seq| textproc::bpe_decode(&seq).tokens)
}
