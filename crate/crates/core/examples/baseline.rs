//! Bag-of-words logistic regression on the synthetic corpus: feature
//! vocabulary, strongest features per category and project-level scores.
//!
//! cargo run --release --example baseline

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::evaluation::evaluate_project_level;
use repocat::pipeline::train_bow;
use repocat::repr::Variant;
use repocat::synth::generate;

fn main() -> repocat::Result<()> {
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?;
    let corpus = generate(&run.synth)?;
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed)?;
    let bow = train_bow(&split.train, &run.baseline, run.classifier.seq_len)?;
    println!("{} features", bow.vocab.len());

    for (k, category) in bow.categories.iter().enumerate() {
        let mut ranked: Vec<(usize, f64)> = bow.model.weights.column(k).iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<&str> = ranked.iter().take(6).map(|&(i, _)| bow.vocab.tokens()[i].as_str()).collect();
        println!("{category:<9} {}", top.join(" "));
    }
    for variant in [Variant::Cd, Variant::Co] {
        let eval = evaluate_project_level(&bow, &split.holdout_projects, variant)?;
        println!("\n{variant} holdout\n{}", eval.report);
    }
    Ok(())
}
