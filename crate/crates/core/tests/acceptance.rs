//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! cargo test --release --test acceptance

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use repocat::config::RunConfig;
use repocat::corpus::{make_splits, records_for_labeled, records_for_projects};
use repocat::embedding::{
    build_cooccurrence, cooccurrence_for, cosine, encode_sentences, train_glove, EmbeddingMatrix, EmbeddingStrategy,
    GloveConfig,
};
use repocat::evaluation::{classification_report, evaluate_project_level, vote, FunctionClassifier};
use repocat::io::to_jsonl;
use repocat::model::{gradient_check, ClassifierConfig, ClassifierModel};
use repocat::pipeline::{strongest_window, train_bow, train_embedding, train_neural, training_vocabulary};
use repocat::prediction::Prediction;
use repocat::repr::{build_representation, Variant, Vocabulary};
use repocat::synth::{find_phrase, generate};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: &'static str, limit: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let detail = if in_time { detail } else { format!("{detail}; over the {limit:?} budget") };
    Outcome { id, pass: pass && in_time, detail, elapsed }
}

fn report(o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {} ({:.1?}): {}", o.id, o.elapsed, o.detail);
}

fn gradient_correctness() -> (bool, String) {
    let config = ClassifierConfig {
        seq_len: 10,
        embed_dims: 6,
        filters: 4,
        kernel_size: 3,
        pool_size: 2,
        lstm_units: 5,
        hidden_units: 8,
        num_categories: 3,
        dropout_level: 0.0,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((15, 6), |(i, _)| if i < 2 { 0.0 } else { rng.random_range(-1.0..1.0) });
        let emb = Arc::new(EmbeddingMatrix::from_array(a).unwrap());
        let mut model = ClassifierModel::new(config.clone(), emb, seed).unwrap();
        for b in [&mut model.params.conv_b, &mut model.params.hidden_b] {
            b.mapv_inplace(|_| rng.random_range(0.05..0.2));
        }
        let ids: Vec<u32> = (0..10).map(|i| if i < 8 { rng.random_range(2..15) } else { 0 }).collect();
        let r = gradient_check(&model, &ids, (seed % 3) as usize, 1e-5).unwrap();
        worst = worst.max(r.max_relative_error);
    }
    (worst < 1e-4, format!("max relative error {worst:.2e} over 5 models (limit 1e-4)"))
}

fn brute_force_cooccurrence(sentences: &[Vec<u32>], window: usize) -> HashMap<(u32, u32), f64> {
    let mut m = HashMap::new();
    for s in sentences {
        for a in 0..s.len() {
            for b in 0..s.len() {
                if b < a && a - b <= window {
                    *m.entry((s[a], s[b])).or_insert(0.0) += 1.0 / (a - b) as f64;
                }
            }
        }
    }
    m
}

fn cooccurrence_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    let mut cells = 0;
    for _ in 0..100 {
        let len = rng.random_range(0..=300);
        let window = rng.random_range(1..=50);
        let sentence: Vec<u32> = (0..len).map(|_| rng.random_range(0..40)).collect();
        let sentences = vec![sentence];
        let fast = build_cooccurrence(&sentences, window, true);
        let slow = brute_force_cooccurrence(&sentences, window);
        if fast.len() != slow.len() {
            return (false, format!("{} cells versus {} from the oracle", fast.len(), slow.len()));
        }
        for ((i, j), x) in slow {
            let got = fast.get(i, j).unwrap_or(f64::NAN);
            worst = worst.max((got - x).abs());
            cells += 1;
        }
    }
    (worst <= 1e-12, format!("{cells} cells, max |difference| {worst:.1e}"))
}

fn embedding_separation() -> (bool, String) {
    let xs: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
    let ys: Vec<String> = (0..10).map(|i| format!("y{i}")).collect();
    let vocab = Vocabulary::from_tokens(xs.iter().chain(ys.iter())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sentences: Vec<Vec<String>> = (0..400)
        .map(|s| {
            let pool = if s % 2 == 0 { &xs } else { &ys };
            (0..40).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect()
        })
        .collect();
    let config = GloveConfig::default();
    let table = cooccurrence_for(&encode_sentences(&sentences, &vocab), &config).unwrap();
    let e = train_glove(&table, vocab.len(), &config).unwrap().embedding;
    let ids = |ts: &[String]| -> Vec<u32> { ts.iter().map(|t| vocab.id(t).unwrap()).collect() };
    let (xi, yi) = (ids(&xs), ids(&ys));
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0, 0.0, 0);
    for group in [&xi, &yi] {
        for a in 0..group.len() {
            for b in a + 1..group.len() {
                intra += cosine(e.row(group[a]), e.row(group[b]));
                n_intra += 1;
            }
        }
    }
    for &a in &xi {
        for &b in &yi {
            inter += cosine(e.row(a), e.row(b));
            n_inter += 1;
        }
    }
    let (intra, inter) = (intra / n_intra as f64, inter / n_inter as f64);
    (intra - inter >= 0.2, format!("intra {intra:.3}, inter {inter:.3}, gap {:.3} (need 0.2)", intra - inter))
}

fn oracle_label(p: &[f64]) -> usize {
    let top = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    p.iter().position(|&v| v == top).unwrap()
}

fn oracle_vote(preds: &[Vec<f64>], c: usize) -> usize {
    let counts: Vec<usize> = (0..c).map(|k| preds.iter().filter(|p| oracle_label(p) == k).count()).collect();
    let mass = |k: usize| {
        let mut v: Vec<f64> = preds.iter().map(|p| p[k]).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>()
    };
    (0..c)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(mass(a).total_cmp(&mass(b))).then(b.cmp(&a)))
        .unwrap()
}

fn oracle_weighted_f1(gold: &[String], pred: &[String], cats: &[String]) -> (f64, f64, f64) {
    let n = gold.len() as f64;
    let mut out = (0.0, 0.0, 0.0);
    for k in cats {
        let pairs = || gold.iter().zip(pred);
        let tp = pairs().filter(|(g, p)| *g == k && *p == k).count() as f64;
        let predicted = pairs().filter(|(_, p)| *p == k).count() as f64;
        let support = pairs().filter(|(g, _)| *g == k).count() as f64;
        let prec = if predicted == 0.0 { 0.0 } else { tp / predicted };
        let rec = if support == 0.0 { 0.0 } else { tp / support };
        let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        out.0 += support / n * prec;
        out.1 += support / n * rec;
        out.2 += support / n * f1;
    }
    out
}

fn voting_and_metrics() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cats: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let mut vote_mismatch = 0;
    let mut report_mismatch = 0;
    for _ in 0..1000 {
        let c = rng.random_range(2..=4);
        let n = rng.random_range(1..12);
        // Coarse probabilities make vote and mass ties common.
        let preds: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0..4) as f64 + 1.0).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let wrapped: Vec<Prediction> = preds.iter().cloned().map(Prediction::new).collect();
        if vote("p", &wrapped).unwrap().winner != oracle_vote(&preds, c) {
            vote_mismatch += 1;
        }

        let m = rng.random_range(1..30);
        let gold: Vec<String> = (0..m).map(|_| cats[rng.random_range(0..c)].clone()).collect();
        let pred: Vec<String> = (0..m).map(|_| cats[rng.random_range(0..c)].clone()).collect();
        let r = classification_report(&gold, &pred, &cats[..c]).unwrap();
        let (p, rc, f) = oracle_weighted_f1(&gold, &pred, &cats[..c]);
        let w = r.weighted;
        if (w.precision, w.recall, w.f1) != (p, rc, f) || w.support != m {
            report_mismatch += 1;
        }
    }
    let gold = ["a", "a", "b", "b"];
    let pred = ["a", "b", "b", "b"];
    let hand = classification_report(&gold, &pred, &["a", "b"]).unwrap().weighted.f1;
    let hand_ok = approx::abs_diff_eq!(hand, 11.0 / 15.0, epsilon = 1e-12);
    (
        vote_mismatch == 0 && report_mismatch == 0 && hand_ok,
        format!(
            "{vote_mismatch} vote and {report_mismatch} report mismatches in 1000 cases; hand example F1 {hand:.15} (11/15)"
        ),
    )
}

fn function_accuracy(classifier: &dyn FunctionClassifier, eval: &repocat::evaluation::ProjectEvaluation, golds: &[String]) -> f64 {
    let cats = classifier.categories();
    let (mut hit, mut total) = (0usize, 0usize);
    for (v, gold) in eval.verdicts.iter().zip(golds) {
        for p in &v.predictions {
            hit += usize::from(&cats[p.label()] == gold);
            total += 1;
        }
    }
    hit as f64 / total as f64
}

/// Hashes of every artifact a pipeline run produces.
#[derive(PartialEq)]
struct Digests {
    datasets: String,
    embedding: String,
    nn_checkpoint: String,
    bow_checkpoint: String,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct PipelineRun {
    f1: HashMap<(&'static str, Variant), f64>,
    fn_acc: HashMap<(&'static str, Variant), f64>,
    digests: Digests,
    frozen: bool,
    heatmap: (usize, usize),
    elapsed: Duration,
}

fn pipeline(run: &RunConfig) -> PipelineRun {
    let start = Instant::now();
    let corpus = generate(&run.synth).unwrap();
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed).unwrap();
    let mut datasets = to_jsonl(records_for_labeled(&split.train)).unwrap();
    datasets.extend(to_jsonl(records_for_projects(&split.holdout_projects)).unwrap());

    let vocab = training_vocabulary(&split.train).unwrap();
    let cd = train_embedding(&split.train, &vocab, EmbeddingStrategy::CodeDescription, &run.glove).unwrap().embedding;
    let embedding = sha(cd.to_text(&vocab).unwrap().as_bytes());
    let before = cd.as_array().clone();
    let cd = Arc::new(cd);
    let random = Arc::new(cd.randomized_like(run.seed));

    let (nn_cd, _) = train_neural(&split.train, vocab.clone(), cd, &run.classifier).unwrap();
    let frozen = before.iter().zip(nn_cd.model.embedding().as_array().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    let (nn_rand, _) = train_neural(&split.train, vocab, random, &run.classifier).unwrap();
    let bow = train_bow(&split.train, &run.baseline, run.classifier.seq_len).unwrap();

    let digests = Digests {
        datasets: sha(&datasets),
        embedding,
        nn_checkpoint: sha(&nn_cd.to_container(run).unwrap().to_bytes().unwrap()),
        bow_checkpoint: sha(&bow.to_container(run).to_bytes().unwrap()),
    };

    let golds: Vec<String> = split.holdout_projects.iter().map(|p| p.category.clone()).collect();
    let mut f1 = HashMap::new();
    let mut fn_acc = HashMap::new();
    let approaches: [(&'static str, &dyn FunctionClassifier); 3] = [("nn+cd", &nn_cd), ("nn+random", &nn_rand), ("bow+lr", &bow)];
    for (name, classifier) in approaches {
        for variant in [Variant::Cd, Variant::Co] {
            let eval = evaluate_project_level(classifier, &split.holdout_projects, variant).unwrap();
            f1.insert((name, variant), eval.report.weighted.f1);
            fn_acc.insert((name, variant), function_accuracy(classifier, &eval, &golds));
        }
    }
    let elapsed = start.elapsed();

    let kernel = nn_cd.model.config.kernel_size;
    let (mut with_phrase, mut overlapping) = (0, 0);
    for project in &split.holdout_projects {
        let phrase = corpus.phrase(&project.category).unwrap();
        for f in &project.functions {
            let tokens = build_representation(f, project.description.as_deref(), Variant::Cd);
            let Some(at) = find_phrase(&tokens, phrase) else { continue };
            if at >= nn_cd.model.config.seq_len {
                continue;
            }
            let row = strongest_window(&nn_cd.explain(&tokens).unwrap()).unwrap();
            with_phrase += 1;
            overlapping += usize::from(row + kernel > at && row < at + phrase.len());
        }
    }
    PipelineRun { f1, fn_acc, digests, frozen, heatmap: (overlapping, with_phrase), elapsed }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut outcomes = Vec::new();
    let min = Duration::from_secs(60);
    outcomes.push(timed("1 gradient correctness", min, gradient_correctness));
    report(outcomes.last().unwrap());
    outcomes.push(timed("2 co-occurrence oracle", min, cooccurrence_oracle));
    report(outcomes.last().unwrap());
    outcomes.push(timed("3 embedding separation", 2 * min, embedding_separation));
    report(outcomes.last().unwrap());
    outcomes.push(timed("4 voting and metrics oracles", min, voting_and_metrics));
    report(outcomes.last().unwrap());

    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml")).unwrap().with_seed(0);
    let first = pipeline(&run);
    for variant in [Variant::Cd, Variant::Co] {
        for name in ["nn+cd", "nn+random", "bow+lr"] {
            println!(
                "     {name:<10} {variant}: project F1 {:.3}, function accuracy {:.3}",
                first.f1[&(name, variant)],
                first.fn_acc[&(name, variant)]
            );
        }
    }
    let f = |name: &'static str, v: Variant| first.f1[&(name, v)];
    let within = first.elapsed <= 15 * min;
    let checks = [
        ("5a nn+cd F1 >= 0.90 on cd", f("nn+cd", Variant::Cd) >= 0.90),
        (
            "5b F1(cd) >= F1(co) for every approach",
            ["nn+cd", "nn+random", "bow+lr"].iter().all(|n| f(n, Variant::Cd) >= f(n, Variant::Co)),
        ),
        ("5c nn+cd >= nn+random on co", f("nn+cd", Variant::Co) >= f("nn+random", Variant::Co)),
        (
            "5d bow+lr > 1/3 on cd and <= nn+cd on co",
            f("bow+lr", Variant::Cd) > 1.0 / 3.0 && f("bow+lr", Variant::Co) <= f("nn+cd", Variant::Co),
        ),
        ("5 runtime under 15 min", within),
    ];
    for (id, pass) in checks {
        let o = Outcome { id, pass, detail: String::new(), elapsed: first.elapsed };
        println!("{} {id} ({:.1?})", if o.pass { "PASS" } else { "FAIL" }, o.elapsed);
        outcomes.push(o);
    }

    let second = pipeline(&run);
    let same = [
        ("datasets", first.digests.datasets == second.digests.datasets),
        ("embedding", first.digests.embedding == second.digests.embedding),
        ("nn checkpoint", first.digests.nn_checkpoint == second.digests.nn_checkpoint),
        ("bow checkpoint", first.digests.bow_checkpoint == second.digests.bow_checkpoint),
    ];
    let differing: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(n, _)| *n).collect();
    let o = Outcome {
        id: "6 determinism",
        pass: first.digests == second.digests,
        detail: if differing.is_empty() {
            format!("two runs byte-identical (nn checkpoint sha256 {}…)", &first.digests.nn_checkpoint[..16])
        } else {
            format!("differing artifacts: {}", differing.join(", "))
        },
        elapsed: second.elapsed,
    };
    report(&o);
    outcomes.push(o);

    let o = Outcome {
        id: "7 frozen embedding",
        pass: first.frozen,
        detail: "embedding bit-identical before and after fit".into(),
        elapsed: Duration::ZERO,
    };
    report(&o);
    outcomes.push(o);

    let (hit, total) = first.heatmap;
    let rate = hit as f64 / total as f64;
    let o = Outcome {
        id: "8 heatmap sanity",
        pass: total > 0 && rate >= 0.8,
        detail: format!("strongest window overlaps the phrase in {hit}/{total} functions ({:.1}%)", 100.0 * rate),
        elapsed: Duration::ZERO,
    };
    report(&o);
    outcomes.push(o);

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
