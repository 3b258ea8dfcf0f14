use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 2
[synth]
projects_per_category = 6
functions_per_project = 8
tail_words = 20
[split]
holdout_per_category = 2
per_category_count = 30
[glove]
dims = 12
iterations = 5
[classifier]
filters = 6
lstm_units = 5
hidden_units = 8
epochs = 2
batch_size = 16
[baseline]
epochs = 5
"#;

struct Workdir {
    dir: tempfile::TempDir,
}

impl Workdir {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), SMALL).unwrap();
        Workdir { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        let config = self.path("run.toml");
        Command::new(env!("CARGO_BIN_EXE_repocat"))
            .current_dir(self.dir.path())
            .arg("--config")
            .arg(&config)
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    /// Every step of the pipeline, from a generated tree to a heatmap.
    fn pipeline(&self) {
        self.ok(&["dataset", "synth", "-o", "tree"]);
        self.ok(&["extract", "tree", "--labels", "tree/metadata.jsonl", "-o", "all.jsonl"]);
        self.ok(&["dataset", "split", "all.jsonl", "-o", "split"]);
        self.ok(&["dataset", "vocab", "split/train.jsonl", "-o", "vocab.txt"]);
        self.ok(&["dataset", "encode", "split/holdout.jsonl", "--vocab", "vocab.txt", "--variant", "co", "-o", "enc.jsonl"]);
        self.ok(&["embed", "train", "split/train.jsonl", "--strategy", "code-description", "-o", "emb.txt"]);
        self.ok(&["train", "nn", "split/train.jsonl", "--embedding", "emb.txt", "-o", "nn.ckpt"]);
        self.ok(&["train", "lr", "split/train.jsonl", "-o", "lr.ckpt"]);
        self.ok(&["eval", "nn.ckpt", "split/holdout.jsonl", "--report", "report.json", "--verdicts", "verdicts.jsonl"]);
        let first = first_function(&self.path("split/holdout.jsonl"));
        self.ok(&["explain", "nn.ckpt", &first, "--dataset", "split/holdout.jsonl", "-o", "heatmap.csv"]);
    }
}

fn first_function(dataset: &Path) -> String {
    let text = std::fs::read_to_string(dataset).unwrap();
    let record: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    format!("{}/{}", record["project"].as_str().unwrap(), record["function"].as_str().unwrap())
}

const ARTIFACTS: &[&str] = &[
    "all.jsonl",
    "all.jsonl.meta.json",
    "split/train.jsonl",
    "split/holdout.jsonl",
    "vocab.txt",
    "enc.jsonl",
    "emb.txt",
    "emb.txt.meta.json",
    "nn.ckpt",
    "lr.ckpt",
    "report.json",
    "verdicts.jsonl",
    "heatmap.csv",
];

#[test]
fn pipeline_reruns_are_byte_identical() {
    let a = Workdir::new();
    let b = Workdir::new();
    a.pipeline();
    b.pipeline();
    for name in ARTIFACTS {
        let x = std::fs::read(a.path(name)).unwrap();
        let y = std::fs::read(b.path(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn artifacts_record_their_provenance() {
    let w = Workdir::new();
    w.pipeline();
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(w.path("emb.txt.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 2);
    assert_eq!(meta["run_config"]["glove"]["iterations"], 5);
    assert!(meta["vocab_hash"].is_string());

    let ckpt = repocat::checkpoint::Container::load(&w.path("nn.ckpt")).unwrap();
    assert_eq!(ckpt.meta["seed"], 2);
    assert_eq!(ckpt.meta["run_config"]["classifier"]["filters"], 6);

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(w.path("report.json")).unwrap()).unwrap();
    assert_eq!(report["weighted"]["support"], 6);
    assert_eq!(std::fs::read_to_string(w.path("verdicts.jsonl")).unwrap().lines().count(), 6);

    let csv = std::fs::read_to_string(w.path("heatmap.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "window,tokens,f0,f1,f2,f3,f4,f5");
    assert_eq!(csv.lines().count(), 1 + 58);
}

#[test]
fn seed_flag_changes_the_split() {
    let w = Workdir::new();
    w.ok(&["dataset", "synth", "-o", "tree"]);
    w.ok(&["extract", "tree", "--labels", "tree/metadata.jsonl", "-o", "all.jsonl"]);
    w.ok(&["dataset", "split", "all.jsonl", "-o", "s2"]);
    w.ok(&["--seed", "9", "dataset", "split", "all.jsonl", "-o", "s9"]);
    let a = std::fs::read(w.path("s2/holdout.jsonl")).unwrap();
    let b = std::fs::read(w.path("s9/holdout.jsonl")).unwrap();
    assert_ne!(a, b);
    let meta = std::fs::read_to_string(w.path("s9/holdout.jsonl.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 9"));
}

#[test]
fn json_output_parses() {
    let w = Workdir::new();
    w.pipeline();
    let out = w.ok(&["--json", "eval", "lr.ckpt", "split/holdout.jsonl", "--variant", "cd"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v["weighted"]["f1"].as_f64().unwrap() >= 0.0);
    let out = w.ok(&["--json", "embed", "neighbors", "emb.txt", "resample", "-k", "3"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn text_table_lists_every_category() {
    let w = Workdir::new();
    w.pipeline();
    let table = w.ok(&["eval", "lr.ckpt", "split/holdout.jsonl", "--variant", "co"]);
    for name in ["sound", "net", "graphics", "weighted"] {
        assert!(table.contains(name), "missing {name} in\n{table}");
    }
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let w = Workdir::new();
    for args in [
        vec!["eval", "missing.ckpt", "missing.jsonl"],
        vec!["embed", "neighbors", "missing.txt", "x"],
        vec!["--threads", "0", "dataset", "synth", "-o", "t"],
    ] {
        let out = w.run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "));
    }
    let out = w.run(&["train", "teleport"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn explain_rejects_unknown_functions_and_bow_models() {
    let w = Workdir::new();
    w.pipeline();
    let out = w.run(&["explain", "nn.ckpt", "nowhere/nothing", "--dataset", "split/holdout.jsonl", "-o", "h.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let first = first_function(&w.path("split/holdout.jsonl"));
    let out = w.run(&["explain", "lr.ckpt", &first, "--dataset", "split/holdout.jsonl", "-o", "h.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!w.path("h.csv").exists());
}

#[test]
fn embedding_strategies_differ_and_reload_identically() {
    let w = Workdir::new();
    w.ok(&["dataset", "synth", "-o", "tree"]);
    w.ok(&["extract", "tree", "--labels", "tree/metadata.jsonl", "-o", "all.jsonl"]);
    w.ok(&["dataset", "split", "all.jsonl", "-o", "split"]);
    w.ok(&["embed", "train", "split/train.jsonl", "--strategy", "code-only", "-o", "co.txt"]);
    w.ok(&["embed", "train", "split/train.jsonl", "--strategy", "code-description", "-o", "cd.txt"]);
    let co = std::fs::read_to_string(w.path("co.txt")).unwrap();
    let cd = std::fs::read_to_string(w.path("cd.txt")).unwrap();
    assert_eq!(co.lines().count(), cd.lines().count());
    assert_ne!(co, cd);
    w.ok(&["dataset", "vocab", "split/train.jsonl", "-o", "vocab.txt"]);
    let out = w.ok(&["--json", "embed", "load", "co.txt", "--vocab", "vocab.txt", "--dims", "12", "-o", "aligned.txt"]);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["tokens"].as_u64().unwrap() as usize, co.lines().count());
    assert_eq!(std::fs::read_to_string(w.path("aligned.txt")).unwrap(), co);
}
