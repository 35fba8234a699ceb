use std::collections::HashSet;

use staple_forge_core::corpus::{normalize, parse_gold, GoldSet, NormalizationPolicy, Prompt};
use staple_forge_core::methods::{
    multi_checkpoint_predict, nbest_predict, paraphrase_predict, paraphrase_prompt, MethodParams, MethodRegistry,
    Models,
};
use staple_forge_core::metrics::score_corpus;
use staple_forge_core::textproc::{preprocess, TokenSeq};
use staple_forge_core::translator::{
    train_toy, BigramLm, Checkpoint, CheckpointSeries, Direction, LexiconTable, TrainOptions,
};

const POLICY: NormalizationPolicy = NormalizationPolicy::DEFAULT;

const PARALLEL: &[(&str, &str)] = &[
    ("i eat bread", "eu como pão"),
    ("i eat bread", "eu como o pão"),
    ("you eat bread", "você come pão"),
    ("you eat bread", "tu comes pão"),
    ("the boy drinks water", "o menino bebe água"),
    ("the boy drinks water", "o garoto toma água"),
    ("the girl drinks milk", "a menina bebe leite"),
    ("i drink water", "eu bebo água"),
    ("i drink milk", "eu tomo leite"),
    ("you drink milk", "você bebe leite"),
    ("the dog eats bread", "o cachorro come pão"),
    ("the dog drinks water", "o cão bebe água"),
];

const GOLD: &str = "a|I eat bread.\neu como pão.|0.5\ncomo pão.|0.3\n\n\
b|The boy drinks water.\no menino bebe água.|0.6\no garoto bebe água.|0.2\n\n\
c|You drink milk.\nvocê bebe leite.|0.4\ntu bebes leite.|0.4\n\n\
d|The dog eats bread.\no cão come pão.|0.5\no cachorro come pão.|0.4\n";

fn train(direction: Direction, iterations: usize) -> CheckpointSeries {
    let pairs: Vec<(TokenSeq, TokenSeq)> = PARALLEL
        .iter()
        .map(|(s, t)| match direction {
            Direction::Forward => (preprocess(s), preprocess(t)),
            Direction::Backward => (preprocess(t), preprocess(s)),
        })
        .collect();
    let opts = TrainOptions {
        iterations,
        direction,
        ..Default::default()
    };
    train_toy(&pairs, &opts, None).unwrap().series
}

fn gold() -> Vec<GoldSet> {
    parse_gold(GOLD.as_bytes(), &POLICY).unwrap()
}

fn prompts() -> Vec<Prompt> {
    gold().iter().map(|g| g.prompt().clone()).collect()
}

fn keys(cands: &[String]) -> HashSet<String> {
    cands.iter().map(|c| normalize(c, &POLICY)).collect()
}

#[test]
fn nbest_method_lists_nest() {
    let fwd = train(Direction::Forward, 4);
    let small = nbest_predict(fwd.latest(), &prompts(), &MethodParams { n: 3, ..Default::default() }, &POLICY).unwrap();
    let large = nbest_predict(fwd.latest(), &prompts(), &MethodParams { n: 8, ..Default::default() }, &POLICY).unwrap();
    for (s, l) in small.sets.iter().zip(&large.sets) {
        assert!(s.candidates.len() <= 3);
        assert_eq!(s.candidates[..], l.candidates[..s.candidates.len()]);
    }
}

#[test]
fn paraphrasing_extends_nbest() {
    let fwd = train(Direction::Forward, 4);
    let bwd = train(Direction::Backward, 4);
    let gold = gold();
    for n in [1, 3, 5, 10] {
        for n_prime in [1, 3, 5] {
            let params = MethodParams { n, n_prime, ..Default::default() };
            let nb = nbest_predict(fwd.latest(), &prompts(), &params, &POLICY).unwrap();
            let pp = paraphrase_predict(fwd.latest(), bwd.latest(), &prompts(), &params, &POLICY).unwrap();
            for (a, b) in nb.sets.iter().zip(&pp.sets) {
                assert!(keys(&a.candidates).is_subset(&keys(&b.candidates)), "{a:?} vs {b:?}");
                assert_eq!(b.candidates[..a.candidates.len()], a.candidates[..]);
            }
            let (sa, sb) = (
                score_corpus(&gold, &nb.sets, &POLICY).unwrap(),
                score_corpus(&gold, &pp.sets, &POLICY).unwrap(),
            );
            for (x, y) in sa.per_prompt.iter().zip(&sb.per_prompt) {
                assert!(y.weighted_recall >= x.weighted_recall);
            }
        }
    }
}

#[test]
fn paraphrase_pool_is_bounded() {
    let fwd = train(Direction::Forward, 3);
    let bwd = train(Direction::Backward, 3);
    for n in [1, 2, 4] {
        for n_prime in [1, 2, 3] {
            let params = MethodParams { n, n_prime, ..Default::default() };
            for p in prompts() {
                let trace = paraphrase_prompt(fwd.latest(), bwd.latest(), &p, &params, &POLICY);
                assert!(trace.forward.len() <= n);
                assert!(trace.pool.len() <= n * n_prime);
                assert!(trace.paraphrases.len() <= trace.pool.len());
                assert_eq!(trace.retranslated.len(), trace.paraphrases.len());
                let original = preprocess(p.text());
                assert!(trace.paraphrases.iter().all(|q| preprocess(q) != original));
            }
        }
    }
}

fn identity_checkpoint(direction: Direction) -> Checkpoint {
    let words = ["a", "b", "c"];
    let mut lexicon = LexiconTable::new();
    for w in words {
        lexicon.insert(w, w, 1.0);
    }
    let sentences = [TokenSeq::from_whitespace("a b c"), TokenSeq::from_whitespace("c b a")];
    Checkpoint {
        iteration: 1,
        direction,
        lexicon,
        lm: BigramLm::estimate(sentences.iter(), 0.1),
        corpus_loglik: 0.0,
        created_at: 0,
    }
}

#[test]
fn identity_models_paraphrase_to_nbest() {
    let fwd = identity_checkpoint(Direction::Forward);
    let bwd = identity_checkpoint(Direction::Backward);
    let prompts = vec![
        Prompt::new("x", "a b").unwrap(),
        Prompt::new("y", "c a b").unwrap(),
        Prompt::new("z", "B, c!").unwrap(),
    ];
    let params = MethodParams::default();
    let nb = nbest_predict(&fwd, &prompts, &params, &POLICY).unwrap();
    let pp = paraphrase_predict(&fwd, &bwd, &prompts, &params, &POLICY).unwrap();
    assert_eq!(nb.sets, pp.sets);
    for p in &prompts {
        let trace = paraphrase_prompt(&fwd, &bwd, p, &params, &POLICY);
        assert!(trace.paraphrases.is_empty());
    }
}

#[test]
fn single_checkpoint_ensemble_is_nbest() {
    let fwd = train(Direction::Forward, 5);
    for n in [1, 5, 10] {
        let params = MethodParams { n, m: 1, ..Default::default() };
        let nb = nbest_predict(fwd.latest(), &prompts(), &params, &POLICY).unwrap();
        let en = multi_checkpoint_predict(&fwd, &prompts(), &params, &POLICY).unwrap();
        assert_eq!(nb, en);
    }
}

#[test]
fn ensemble_recall_grows_with_m() {
    let fwd = train(Direction::Forward, 6);
    let gold = gold();
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_sets: Option<Vec<HashSet<String>>> = None;
    for m in 1..=6 {
        let params = MethodParams { m, ..Default::default() };
        let g = multi_checkpoint_predict(&fwd, &prompts(), &params, &POLICY).unwrap();
        let sets: Vec<HashSet<String>> = g.sets.iter().map(|s| keys(&s.candidates)).collect();
        let score = score_corpus(&gold, &g.sets, &POLICY).unwrap();
        let recall: Vec<f64> = score.per_prompt.iter().map(|p| p.weighted_recall).collect();
        if let (Some(r0), Some(s0)) = (&prev, &prev_sets) {
            for i in 0..recall.len() {
                assert!(recall[i] >= r0[i], "m={m} prompt {i}");
                assert!(s0[i].is_subset(&sets[i]));
            }
        }
        prev = Some(recall);
        prev_sets = Some(sets);
    }
}

#[test]
fn ensemble_needs_enough_checkpoints() {
    let fwd = train(Direction::Forward, 2);
    let params = MethodParams { m: 3, ..Default::default() };
    assert!(multi_checkpoint_predict(&fwd, &prompts(), &params, &POLICY).is_err());
}

#[test]
fn paraphrase_requires_backward_model() {
    let fwd = train(Direction::Forward, 2);
    let registry = MethodRegistry::with_builtins();
    let models = Models { forward: &fwd, backward: None };
    let err = registry
        .get("paraphrase")
        .unwrap()
        .generate(models, &prompts(), &MethodParams::default(), &POLICY);
    assert!(err.is_err());
}

#[test]
fn output_independent_of_thread_count() {
    let fwd = train(Direction::Forward, 4);
    let bwd = train(Direction::Backward, 4);
    let registry = MethodRegistry::with_builtins();
    let models = Models { forward: &fwd, backward: Some(bwd.latest()) };
    let params = MethodParams { m: 4, ..Default::default() };
    for name in registry.names() {
        let method = registry.get(name).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| method.generate(models, &prompts(), &params, &POLICY).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4), "{name}");
        assert_eq!(one, run(1), "{name}");
    }
}
