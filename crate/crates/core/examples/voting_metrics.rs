//! Plurality voting over function predictions and the weighted
//! classification report.
//!
//! cargo run --example voting_metrics

use repocat::evaluation::{classification_report, vote};
use repocat::prediction::Prediction;

fn main() -> repocat::Result<()> {
    let categories = ["net", "sound", "graphics"];
    let functions = vec![
        Prediction::new(vec![0.6, 0.3, 0.1]),
        Prediction::new(vec![0.2, 0.7, 0.1]),
        Prediction::new(vec![0.5, 0.4, 0.1]),
        Prediction::new(vec![0.1, 0.8, 0.1]),
    ];
    let verdict = vote("alsa-tools", &functions)?;
    println!("tally {:?}: two-way tie, broken by summed probability -> {}", verdict.tally, categories[verdict.winner]);

    let gold = ["a", "a", "b", "b"];
    let predicted = ["a", "b", "b", "b"];
    let report = classification_report(&gold, &predicted, &["a", "b"])?;
    println!("\n{report}");
    println!("weighted F1 = {:.6} (11/15 = {:.6})", report.weighted.f1, 11.0 / 15.0);
    println!("\n{}", report.to_json());
    Ok(())
}
