//! Trains the convolutional-recurrent classifier, saves the
//! checkpoint, reloads it and classifies a few holdout functions.
//!
//! cargo run --release --example train_classifier

use std::sync::Arc;

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::embedding::EmbeddingStrategy;
use repocat::evaluation::FunctionClassifier;
use repocat::pipeline::{train_embedding, train_neural, training_vocabulary, NeuralClassifier};
use repocat::repr::{build_representation, Variant};
use repocat::synth::generate;

fn main() -> repocat::Result<()> {
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?;

    let corpus = generate(&run.synth)?;
    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed)?;
    let vocab = training_vocabulary(&split.train)?;
    let emb = train_embedding(&split.train, &vocab, EmbeddingStrategy::CodeDescription, &run.glove)?;
    let (nn, outcome) = train_neural(&split.train, vocab, Arc::new(emb.embedding), &run.classifier)?;
    for (epoch, (loss, acc)) in outcome.epoch_losses.iter().zip(&outcome.validation_accuracies).enumerate() {
        println!("epoch {}: loss {loss:.4}, validation accuracy {acc:.3}", epoch + 1);
    }
    println!("kept epoch {}", outcome.best_epoch + 1);

    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("nn.ckpt");
    nn.save(&path, &run)?;
    let (reloaded, _) = NeuralClassifier::load(&path)?;
    println!("checkpoint: {} bytes, reload identical: {}", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0), reloaded == nn);

    for project in split.holdout_projects.iter().step_by(10) {
        let f = &project.functions[0];
        let p = reloaded.predict_tokens(&build_representation(f, project.description.as_deref(), Variant::Co))?;
        println!("{}/{} [{}] -> {} ({:.2})", project.name, f.function_name, project.category, reloaded.categories[p.label()], p.probabilities[p.label()]);
    }
    Ok(())
}
