//! Command-line front end: extract → dataset → embed → train → eval → explain.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::{
    labeled_functions_from_records, load_repository, make_splits, projects_from_records, read_metadata, read_records,
    records_for_labeled, records_for_projects, write_records, ProjectMetadata,
};
use crate::embedding::{nearest_neighbors, read_embedding_text, load_embedding_text, EmbeddingStrategy};
use crate::evaluation::evaluate_project_level;
use crate::io::{write_atomic, write_jsonl, write_sidecar};
use crate::pipeline::{
    heatmap_csv, train_bow, train_embedding, train_neural, training_vocabulary, AnyClassifier, NeuralClassifier,
};
use crate::repr::{build_representation, Representation, Variant, Vocabulary};
use crate::synth::generate;

#[derive(Debug, Parser)]
#[command(name = "repocat", version, about = "Categorize software projects from their C/C++ functions")]
pub struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for file extraction.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML run configuration; unset keys keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract labeled functions from a tree of project directories.
    Extract {
        root: PathBuf,
        /// JSON-lines metadata: {"name","category","description"?} per project.
        #[arg(long)]
        labels: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    #[command(subcommand)]
    Dataset(DatasetCommand),
    #[command(subcommand)]
    Embed(EmbedCommand),
    #[command(subcommand)]
    Train(TrainCommand),
    /// Project-level evaluation of a trained model on a holdout dataset.
    Eval {
        model: PathBuf,
        holdout: PathBuf,
        #[arg(long, default_value = "cd")]
        variant: Variant,
        /// Write the metrics report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write per-project verdicts as JSON lines.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Export convolution activations of one function as CSV.
    Explain {
        model: PathBuf,
        /// `<project>/<function>`
        target: String,
        /// Dataset holding the function.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "cd")]
        variant: Variant,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Write the bundled synthetic corpus (project tree plus metadata.jsonl).
    Synth {
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Withhold projects per category and undersample the rest.
    Split {
        dataset: PathBuf,
        #[arg(long)]
        holdout_per_cat: Option<usize>,
        #[arg(long)]
        per_cat: Option<usize>,
        /// Directory receiving train.jsonl and holdout.jsonl.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build the token vocabulary of a training dataset.
    Vocab {
        train: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encode a dataset into fixed-length id sequences.
    Encode {
        dataset: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "cd")]
        variant: Variant,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum EmbedCommand {
    /// Train GloVe vectors on a training dataset.
    Train {
        train: PathBuf,
        #[arg(long, default_value = "code-description")]
        strategy: EmbeddingStrategy,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Read a pre-trained text embedding, optionally aligning it to a vocabulary.
    Load {
        embedding: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        dims: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Nearest tokens by cosine similarity.
    Neighbors {
        embedding: PathBuf,
        token: String,
        #[arg(short, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Convolutional-recurrent classifier over a frozen embedding.
    Nn {
        train: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        /// Replace the embedding by Gaussian vectors of the same spread.
        #[arg(long)]
        random_embedding: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bag-of-words logistic regression baseline.
    Lr(LrArgs),
}

#[derive(Debug, Args)]
pub struct LrArgs {
    pub train: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", diagnostic(&e));
            1
        }
    }
}

/// Error chain on one line, skipping causes a message already quotes.
fn diagnostic(e: &anyhow::Error) -> String {
    let mut line = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !line.ends_with(&text) {
            if !line.is_empty() {
                line.push_str(": ");
            }
            line.push_str(&text);
        }
    }
    line
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    seed: u64,
    run_config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    vocab_hash: Option<String>,
}

struct Ctx {
    run: RunConfig,
    json: bool,
}

impl Ctx {
    fn sidecar(&self, path: &Path, command: &str, vocab: Option<&Vocabulary>) -> anyhow::Result<()> {
        let meta = Provenance {
            command,
            seed: self.run.seed,
            run_config: &self.run,
            vocab_hash: vocab.map(Vocabulary::hash),
        };
        write_sidecar(path, &meta)?;
        Ok(())
    }

    fn emit(&self, text: &str, value: serde_json::Value) {
        if self.json {
            println!("{value}");
        } else {
            print!("{text}");
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut run = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        run = run.with_seed(seed);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Ctx { run, json: cli.json };
    match cli.command {
        Command::Extract { root, labels, output } => extract(&ctx, &root, &labels, &output),
        Command::Dataset(cmd) => dataset(&ctx, cmd),
        Command::Embed(cmd) => embed(&ctx, cmd),
        Command::Train(cmd) => train(&ctx, cmd),
        Command::Eval { model, holdout, variant, report, verdicts } => {
            eval(&ctx, &model, &holdout, variant, report.as_deref(), verdicts.as_deref())
        }
        Command::Explain { model, target, dataset, variant, output } => {
            explain(&ctx, &model, &target, &dataset, variant, &output)
        }
    }
}

fn extract(ctx: &Ctx, root: &Path, labels: &Path, output: &Path) -> anyhow::Result<()> {
    let meta = read_metadata(labels)?;
    let loaded = load_repository(root, &ProjectMetadata::labels(&meta), &ProjectMetadata::descriptions(&meta))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let records = records_for_projects(&loaded.projects);
    write_records(output, &records)?;
    ctx.sidecar(output, "extract", None)?;
    ctx.emit(
        &format!("{} functions from {} projects\n", records.len(), loaded.projects.len()),
        json!({"functions": records.len(), "projects": loaded.projects.len(), "warnings": loaded.warnings}),
    );
    Ok(())
}

fn dataset(ctx: &Ctx, cmd: DatasetCommand) -> anyhow::Result<()> {
    match cmd {
        DatasetCommand::Synth { output } => {
            let corpus = generate(&ctx.run.synth)?;
            corpus.write_tree(&output)?;
            ctx.sidecar(&output.join("metadata.jsonl"), "dataset synth", None)?;
            let functions: usize = corpus.projects.iter().map(|p| p.functions.len()).sum();
            ctx.emit(
                &format!("{} projects, {functions} functions written to {}\n", corpus.projects.len(), output.display()),
                json!({"projects": corpus.projects.len(), "functions": functions}),
            );
        }
        DatasetCommand::Split { dataset, holdout_per_cat, per_cat, output } => {
            let projects = projects_from_records(&read_records(&dataset)?)?;
            let holdout = holdout_per_cat.unwrap_or(ctx.run.split.holdout_per_category);
            let per_cat = per_cat.unwrap_or(ctx.run.split.per_category_count);
            let split = make_splits(&projects, holdout, per_cat, ctx.run.seed)?;
            let train_path = output.join("train.jsonl");
            let holdout_path = output.join("holdout.jsonl");
            write_records(&train_path, &records_for_labeled(&split.train))?;
            write_records(&holdout_path, &records_for_projects(&split.holdout_projects))?;
            ctx.sidecar(&train_path, "dataset split", None)?;
            ctx.sidecar(&holdout_path, "dataset split", None)?;
            ctx.emit(
                &format!(
                    "{} training functions, {} holdout projects\n",
                    split.train.len(),
                    split.holdout_projects.len()
                ),
                json!({"train_functions": split.train.len(), "holdout_projects": split.holdout_projects.len()}),
            );
        }
        DatasetCommand::Vocab { train, output } => {
            let functions = labeled_functions_from_records(&read_records(&train)?)?;
            let vocab = training_vocabulary(&functions)?;
            write_atomic(&output, vocab.to_text().as_bytes())?;
            ctx.sidecar(&output, "dataset vocab", Some(&vocab))?;
            ctx.emit(&format!("{} tokens\n", vocab.len()), json!({"tokens": vocab.len(), "hash": vocab.hash()}));
        }
        DatasetCommand::Encode { dataset, vocab, variant, output } => {
            let vocab = read_vocab(&vocab)?;
            let records = read_records(&dataset)?;
            let seq_len = ctx.run.classifier.seq_len;
            let encoded = records
                .iter()
                .map(|r| {
                    Representation::new(&r.function_record()?, &r.category, r.description.as_deref(), variant, &vocab, seq_len)
                })
                .collect::<crate::Result<Vec<_>>>()?;
            write_jsonl(&output, &encoded)?;
            ctx.sidecar(&output, "dataset encode", Some(&vocab))?;
            ctx.emit(&format!("{} sequences\n", encoded.len()), json!({"sequences": encoded.len()}));
        }
    }
    Ok(())
}

fn read_vocab(path: &Path) -> anyhow::Result<Vocabulary> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Vocabulary::read_text(BufReader::new(file))?)
}

fn read_embedding(path: &Path) -> anyhow::Result<(Vocabulary, crate::embedding::EmbeddingMatrix)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_embedding_text(BufReader::new(file))?)
}

fn embed(ctx: &Ctx, cmd: EmbedCommand) -> anyhow::Result<()> {
    match cmd {
        EmbedCommand::Train { train, strategy, output } => {
            let functions = labeled_functions_from_records(&read_records(&train)?)?;
            let vocab = training_vocabulary(&functions)?;
            let outcome = train_embedding(&functions, &vocab, strategy, &ctx.run.glove)?;
            write_atomic(&output, outcome.embedding.to_text(&vocab)?.as_bytes())?;
            ctx.sidecar(&output, &format!("embed train --strategy {strategy}"), Some(&vocab))?;
            let last = outcome.losses.last().copied().unwrap_or(f64::NAN);
            ctx.emit(
                &format!("{} vectors of {} dims, final loss {last:.6}\n", vocab.len() - 2, outcome.embedding.dims()),
                json!({"vectors": vocab.len() - 2, "dims": outcome.embedding.dims(), "losses": outcome.losses}),
            );
        }
        EmbedCommand::Load { embedding, vocab, dims, output } => {
            let (vocab, matrix) = match vocab {
                Some(v) => {
                    let vocab = read_vocab(&v)?;
                    let dims = dims.unwrap_or(ctx.run.glove.dims);
                    let file = std::fs::File::open(&embedding).with_context(|| format!("opening {}", embedding.display()))?;
                    let matrix = load_embedding_text(BufReader::new(file), &vocab, dims)?;
                    (vocab, matrix)
                }
                None => read_embedding(&embedding)?,
            };
            let covered = (2..matrix.vocab_size() as u32).filter(|&i| matrix.row(i).iter().any(|&v| v != 0.0)).count();
            if let Some(out) = &output {
                write_atomic(out, matrix.to_text(&vocab)?.as_bytes())?;
                ctx.sidecar(out, "embed load", Some(&vocab))?;
            }
            ctx.emit(
                &format!("{} tokens, {} dims, {covered} with non-zero vectors\n", vocab.len() - 2, matrix.dims()),
                json!({"tokens": vocab.len() - 2, "dims": matrix.dims(), "nonzero": covered}),
            );
        }
        EmbedCommand::Neighbors { embedding, token, k } => {
            let (vocab, matrix) = read_embedding(&embedding)?;
            let found = nearest_neighbors(&matrix, &vocab, &token, k)?;
            let mut text = String::new();
            for (t, s) in &found {
                let _ = writeln!(text, "{t}\t{s:.6}");
            }
            ctx.emit(&text, json!(found.iter().map(|(t, s)| json!({"token": t, "similarity": s})).collect::<Vec<_>>()));
        }
    }
    Ok(())
}

fn train(ctx: &Ctx, cmd: TrainCommand) -> anyhow::Result<()> {
    match cmd {
        TrainCommand::Nn { train, embedding, random_embedding, output } => {
            let functions = labeled_functions_from_records(&read_records(&train)?)?;
            let (vocab, matrix) = read_embedding(&embedding)?;
            let matrix = if random_embedding { matrix.randomized_like(ctx.run.seed) } else { matrix };
            let mut config = ctx.run.classifier.clone();
            config.embed_dims = matrix.dims();
            let (classifier, outcome) = train_neural(&functions, vocab, Arc::new(matrix), &config)?;
            classifier.save(&output, &ctx.run)?;
            let mut text = String::new();
            for (e, (l, a)) in outcome.epoch_losses.iter().zip(&outcome.validation_accuracies).enumerate() {
                let _ = writeln!(text, "epoch {}: loss {l:.4}, validation accuracy {a:.4}", e + 1);
            }
            let _ = writeln!(text, "kept epoch {}", outcome.best_epoch + 1);
            ctx.emit(
                &text,
                json!({
                    "epoch_losses": outcome.epoch_losses,
                    "validation_accuracies": outcome.validation_accuracies,
                    "best_epoch": outcome.best_epoch + 1,
                }),
            );
        }
        TrainCommand::Lr(args) => {
            let functions = labeled_functions_from_records(&read_records(&args.train)?)?;
            let bow = train_bow(&functions, &ctx.run.baseline, ctx.run.classifier.seq_len)?;
            bow.save(&args.output, &ctx.run)?;
            ctx.emit(
                &format!("{} features, {} categories\n", bow.vocab.len(), bow.categories.len()),
                json!({"features": bow.vocab.len(), "categories": bow.categories}),
            );
        }
    }
    Ok(())
}

fn eval(
    ctx: &Ctx,
    model: &Path,
    holdout: &Path,
    variant: Variant,
    report_path: Option<&Path>,
    verdicts_path: Option<&Path>,
) -> anyhow::Result<()> {
    let (classifier, _) = AnyClassifier::load(model)?;
    let classifier = classifier.as_classifier();
    let projects = projects_from_records(&read_records(holdout)?)?;
    let evaluation = evaluate_project_level(classifier, &projects, variant)?;
    if let Some(p) = report_path {
        write_atomic(p, evaluation.report.to_json().as_bytes())?;
        ctx.sidecar(p, &format!("eval --variant {variant}"), None)?;
    }
    if let Some(p) = verdicts_path {
        write_jsonl(p, evaluation.verdict_records(&projects, classifier.categories()))?;
        ctx.sidecar(p, &format!("eval --variant {variant}"), None)?;
    }
    ctx.emit(&evaluation.report.to_string(), serde_json::to_value(&evaluation.report)?);
    Ok(())
}

fn explain(
    ctx: &Ctx,
    model: &Path,
    target: &str,
    dataset: &Path,
    variant: Variant,
    output: &Path,
) -> anyhow::Result<()> {
    let (project, function) = target
        .split_once('/')
        .ok_or_else(|| anyhow!("target must look like <project>/<function>, got '{target}'"))?;
    let (classifier, _) = NeuralClassifier::load(model)?;
    let records = read_records(dataset)?;
    let record = records
        .iter()
        .find(|r| r.project == project && r.function == function)
        .ok_or_else(|| anyhow!("function '{target}' not found in {}", dataset.display()))?;
    let tokens = build_representation(&record.function_record()?, record.description.as_deref(), variant);
    let acts = classifier.explain(&tokens)?;
    let kernel = classifier.model.config.kernel_size;
    write_atomic(output, heatmap_csv(&acts, &tokens, kernel).as_bytes())?;
    let row = crate::pipeline::strongest_window(&acts).unwrap_or(0);
    let window: Vec<&str> = tokens.iter().skip(row).take(kernel).map(String::as_str).collect();
    let mut per_category = BTreeMap::new();
    let prediction = crate::evaluation::FunctionClassifier::predict_tokens(&classifier, &tokens)?;
    for (c, p) in classifier.categories.iter().zip(&prediction.probabilities) {
        per_category.insert(c.clone(), *p);
    }
    ctx.emit(
        &format!(
            "{} × {} activations written; strongest window {row}: {}; predicted {}\n",
            acts.nrows(),
            acts.ncols(),
            window.join(" "),
            classifier.categories[prediction.label()]
        ),
        json!({"rows": acts.nrows(), "filters": acts.ncols(), "strongest_window": row, "tokens": window, "probabilities": per_category}),
    );
    Ok(())
}
