//! Generates the synthetic corpus, withholds projects and undersamples the
//! rest.
//!
//! cargo run --example synth_split

use repocat::config::RunConfig;
use repocat::corpus::make_splits;
use repocat::synth::{category_sizes, generate};

fn main() -> repocat::Result<()> {
    let run = RunConfig::from_toml(include_str!("../configs/synthetic.toml"))?;
    let corpus = generate(&run.synth)?;
    for theme in &corpus.themes {
        println!("{:<9} phrase: {}", theme.name, theme.phrase.join(" "));
    }
    let p = &corpus.projects[0];
    println!("\n{} [{}]: {}", p.name, p.category, p.description.as_deref().unwrap_or(""));
    println!("{}", p.functions[0].body);

    let split = make_splits(&corpus.projects, run.split.holdout_per_category, run.split.per_category_count, run.seed)?;
    println!("functions per category, before and after undersampling:");
    let after = split.train.iter().fold(std::collections::BTreeMap::new(), |mut m, f| {
        *m.entry(f.category.clone()).or_insert(0) += 1;
        m
    });
    for (category, n) in category_sizes(&corpus.projects) {
        println!("  {category:<9} {n:>4} -> {}", after[&category]);
    }
    let names: Vec<&str> = split.holdout_projects.iter().map(|p| p.name.as_str()).collect();
    println!("holdout projects: {}", names.join(", "));
    Ok(())
}
