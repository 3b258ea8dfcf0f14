//! Synthetic corpus → split → embeddings → classifiers → project-level
//! reports for every approach and test variant.
//!
//! cargo run --release --example full_pipeline -- [seed]

use std::sync::Arc;
use std::time::Instant;

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::embedding::EmbeddingStrategy;
use repocat::evaluation::{evaluate_project_level, FunctionClassifier};
use repocat::pipeline::{train_bow, train_embedding, train_neural, training_vocabulary};
use repocat::repr::Variant;
use repocat::synth::generate;

fn main() -> repocat::Result<()> {
    env_logger::init();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?.with_seed(seed);
    let start = Instant::now();

    let corpus = generate(&run.synth)?;
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, seed)?;
    println!(
        "{} training functions, {} holdout projects",
        split.train.len(),
        split.holdout_projects.len()
    );

    let vocab = training_vocabulary(&split.train)?;
    let cd_emb = Arc::new(train_embedding(&split.train, &vocab, EmbeddingStrategy::CodeDescription, &run.glove)?.embedding);
    println!("embedding trained ({:.0?})", start.elapsed());
    let random_emb = Arc::new(cd_emb.randomized_like(seed));

    let (nn_cd, _) = train_neural(&split.train, vocab.clone(), cd_emb, &run.classifier)?;
    println!("nn+cd trained ({:.0?})", start.elapsed());
    let (nn_rand, _) = train_neural(&split.train, vocab, random_emb, &run.classifier)?;
    println!("nn+random trained ({:.0?})", start.elapsed());
    let bow = train_bow(&split.train, &run.baseline, run.classifier.seq_len)?;

    let approaches: [(&str, &dyn FunctionClassifier); 3] = [("nn+cd", &nn_cd), ("nn+random", &nn_rand), ("bow+lr", &bow)];
    println!("{:<10} {:>5} {:>7} {:>7} {:>7} {:>9}", "approach", "test", "P", "R", "F1", "fn-acc");
    for (name, classifier) in approaches {
        for variant in [Variant::Cd, Variant::Co] {
            let eval = evaluate_project_level(classifier, &split.holdout_projects, variant)?;
            let categories = classifier.categories();
            let (mut hit, mut total) = (0, 0);
            for (project, verdict) in split.holdout_projects.iter().zip(&eval.verdicts) {
                for p in &verdict.predictions {
                    hit += usize::from(categories[p.label()] == project.category);
                    total += 1;
                }
            }
            let w = eval.report.weighted;
            println!(
                "{name:<10} {variant:>5} {:>7.3} {:>7.3} {:>7.3} {:>9.3}",
                w.precision,
                w.recall,
                w.f1,
                hit as f64 / total as f64
            );
        }
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
