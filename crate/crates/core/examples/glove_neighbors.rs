//! Trains code-only and code-description GloVe vectors on the synthetic
//! training split and compares nearest neighbours of a few code words.
//!
//! cargo run --release --example glove_neighbors

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::embedding::{nearest_neighbors, EmbeddingStrategy};
use repocat::pipeline::{train_embedding, training_vocabulary};
use repocat::synth::generate;

fn main() -> repocat::Result<()> {
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?;
    let corpus = generate(&run.synth)?;
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed)?;
    let vocab = training_vocabulary(&split.train)?;
    for strategy in [EmbeddingStrategy::CodeOnly, EmbeddingStrategy::CodeDescription] {
        let outcome = train_embedding(&split.train, &vocab, strategy, &run.glove)?;
        println!(
            "{strategy}: loss {:.4} -> {:.4}",
            outcome.losses.first().copied().unwrap_or(f64::NAN),
            outcome.losses.last().copied().unwrap_or(f64::NAN)
        );
        for query in ["mixer", "socket", "shader", "audio"] {
            let Ok(found) = nearest_neighbors(&outcome.embedding, &vocab, query, 5) else { continue };
            let list: Vec<String> = found.iter().map(|(t, s)| format!("{t} {s:.2}")).collect();
            println!("  {query:<9} {}", list.join(", "));
        }
    }
    Ok(())
}
