//! Trains the code-description model on the synthetic corpus and checks where
//! the convolution layer fires hardest: for each holdout function carrying its
//! category's planted phrase, does the strongest window overlap the phrase?
//! Writes the heatmap of the first such function to `heatmap.csv`.
//!
//! cargo run --release --example heatmap

use std::sync::Arc;

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::embedding::EmbeddingStrategy;
use repocat::pipeline::{heatmap_csv, strongest_window, train_embedding, train_neural, training_vocabulary};
use repocat::repr::{build_representation, Variant};
use repocat::synth::{find_phrase, generate};

fn main() -> repocat::Result<()> {
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?;
    let corpus = generate(&run.synth)?;
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed)?;
    let vocab = training_vocabulary(&split.train)?;
    let emb = train_embedding(&split.train, &vocab, EmbeddingStrategy::CodeDescription, &run.glove)?;
    let (nn, _) = train_neural(&split.train, vocab, Arc::new(emb.embedding), &run.classifier)?;

    let kernel = nn.model.config.kernel_size;
    let (mut with_phrase, mut overlapping) = (0, 0);
    let mut written = false;
    for project in &split.holdout_projects {
        let phrase = corpus.phrase(&project.category).expect("known category");
        for f in &project.functions {
            let tokens = build_representation(f, project.description.as_deref(), Variant::Cd);
            let Some(start) = find_phrase(&tokens, phrase) else { continue };
            let acts = nn.explain(&tokens)?;
            let row = strongest_window(&acts).expect("non-empty");
            with_phrase += 1;
            if row + kernel > start && row < start + phrase.len() {
                overlapping += 1;
            }
            if !written {
                std::fs::write("heatmap.csv", heatmap_csv(&acts, &tokens, kernel)).expect("writable");
                println!("{}/{}: phrase at {start}, strongest window {row}", project.name, f.function_name);
                written = true;
            }
        }
    }
    println!(
        "strongest window overlaps the phrase in {overlapping}/{with_phrase} functions ({:.1}%)",
        100.0 * overlapping as f64 / with_phrase as f64
    );
    Ok(())
}
