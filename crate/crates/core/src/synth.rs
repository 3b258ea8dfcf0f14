//! Synthetic labeled C corpus with planted per-category vocabularies.
//!
//! Every category owns a list of code identifiers, a few description words and
//! a three-word phrase. Function bodies mix generic C identifiers with
//! category identifiers; a configurable share of those identifiers is drawn
//! from a different category instead. Some functions open with a comment
//! holding their category's phrase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{FunctionRecord, Project, ProjectMetadata};
use crate::error::{Error, Result};
use crate::io::{to_jsonl, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub categories: usize,
    pub projects_per_category: usize,
    pub functions_per_project: usize,
    /// Share of category identifiers drawn from another category.
    pub noise: f64,
    /// Chance that a statement uses a category identifier at all.
    pub signal_rate: f64,
    /// Chance that a function carries the planted phrase.
    pub phrase_rate: f64,
    /// Generated identifiers appended to each category's hand-listed ones.
    pub tail_words: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            categories: 3,
            projects_per_category: 40,
            functions_per_project: 20,
            noise: 0.2,
            signal_rate: 0.5,
            phrase_rate: 0.5,
            tail_words: 300,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.categories < 2 || self.projects_per_category == 0 || self.functions_per_project == 0 {
            return Err(Error::Config("synthetic corpus needs 2+ categories and non-empty projects".into()));
        }
        for (name, v) in [("noise", self.noise), ("signal_rate", self.signal_rate), ("phrase_rate", self.phrase_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Vocabulary planted for one category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTheme {
    pub name: String,
    pub code_words: Vec<String>,
    pub description_words: Vec<String>,
    pub phrase: [String; 3],
}

const THEMES: &[(&str, &str, &str, [&str; 3])] = &[
    (
        "sound",
        "pcm mixer volume alsa wav codec stereo playback speaker resampler oscillator reverb tempo pitch \
         sndfile midi equalizer decibel samplerate audiobuf",
        "audio sound music player speech voice songs",
        ["resample", "stereo", "waveform"],
    ),
    (
        "net",
        "socket packet tcp udp http ipv4 ipv6 dns router proxy bandwidth hostname handshake tls recv \
         netmask gateway ethernet mtu firewall",
        "network internet protocol server client transfer remote",
        ["negotiate", "tls", "session"],
    ),
    (
        "graphics",
        "pixel bitmap render texture shader opengl vertex polygon sprite raster canvas rgb framebuffer \
         glyph viewport png jpeg bezier antialias palette",
        "image graphics drawing picture display visual photo",
        ["rasterize", "polygon", "edges"],
    ),
    (
        "database",
        "sql query cursor btree tuple schema transaction commit rollback index_page journal wal \
         sqlite column_def row_id pager vacuum collation",
        "database storage records tables persistence queries",
        ["flush", "journal", "pages"],
    ),
];

const GENERIC_VARS: &str = "i j n len size count buf ptr tmp ret result data ctx state flags idx offset value key \
                            node list item next prev head tail err status opts cfg";
const GENERIC_CALLS: &str = "malloc free memcpy memset strlen strcmp printf assert init update reset destroy \
                             create lookup check read write open close";
const GENERIC_TYPES: &[&str] = &["int", "void", "long", "unsigned", "size_t", "char *", "struct ctx *"];
const DESCRIPTION_FILLER: &[&str] = &["small", "fast", "simple", "portable", "lightweight", "free", "modular"];
const DESCRIPTION_NOUNS: &[&str] = &["library", "tool", "utility", "daemon", "toolkit", "application"];
const SYLLABLES: &[&str] = &[
    "ka", "zo", "ri", "mu", "te", "lan", "vo", "qui", "ber", "dex", "sa", "nor", "pi", "gu", "xel", "fa", "tor",
    "mi", "ope", "lu", "dra", "ven", "co", "hy",
];

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Themes for the first `n` categories. Beyond the hand-listed ones,
/// categories get generated identifiers. Each theme's code words are then
/// extended by `tail_words` pronounceable identifiers drawn from `rng`.
pub fn themes<R: Rng + ?Sized>(n: usize, tail_words: usize, rng: &mut R, taken: &mut BTreeSet<String>) -> Vec<CategoryTheme> {
    let mut themes = base_themes(n);
    for t in &themes {
        taken.extend(t.code_words.iter().cloned());
        taken.extend(t.description_words.iter().cloned());
        taken.extend(t.phrase.iter().cloned());
    }
    taken.extend(words(GENERIC_VARS));
    taken.extend(words(GENERIC_CALLS));
    for t in &mut themes {
        for _ in 0..tail_words {
            t.code_words.push(fresh_word(rng, taken, 2..=3));
        }
    }
    themes
}

fn fresh_word<R: Rng + ?Sized>(rng: &mut R, taken: &mut BTreeSet<String>, syllables: std::ops::RangeInclusive<usize>) -> String {
    loop {
        let n = rng.random_range(syllables.clone());
        let w: String = (0..n).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

fn base_themes(n: usize) -> Vec<CategoryTheme> {
    (0..n)
        .map(|k| match THEMES.get(k) {
            Some(&(name, code, desc, phrase)) => CategoryTheme {
                name: name.to_string(),
                code_words: words(code),
                description_words: words(desc),
                phrase: phrase.map(String::from),
            },
            None => CategoryTheme {
                name: format!("category{k}"),
                code_words: (0..20).map(|j| format!("c{k}ident{j}")).collect(),
                description_words: (0..7).map(|j| format!("c{k}topic{j}")).collect(),
                phrase: [format!("c{k}alpha"), format!("c{k}beta"), format!("c{k}gamma")],
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub projects: Vec<Project>,
    pub themes: Vec<CategoryTheme>,
}

impl SynthCorpus {
    pub fn metadata(&self) -> Vec<ProjectMetadata> {
        self.projects
            .iter()
            .map(|p| ProjectMetadata {
                name: p.name.clone(),
                category: p.category.clone(),
                description: p.description.clone(),
            })
            .collect()
    }

    pub fn phrase(&self, category: &str) -> Option<&[String; 3]> {
        self.themes.iter().find(|t| t.name == category).map(|t| &t.phrase)
    }

    /// Writes one directory per project (sources plus a header) and
    /// `metadata.jsonl` under `root`.
    pub fn write_tree(&self, root: &Path) -> Result<()> {
        for p in &self.projects {
            let dir = root.join(&p.name);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut header = format!("#ifndef {0}_H\n#define {0}_H\n\n", p.name.to_uppercase());
            for (n, chunk) in p.functions.chunks(8).enumerate() {
                let mut source = format!("#include \"{}.h\"\n#include <stdlib.h>\n\n", p.name);
                for f in chunk {
                    source.push_str(&f.body);
                    source.push_str("\n\n");
                    let proto = f.body.lines().next().unwrap_or_default();
                    let _ = writeln!(header, "{proto};");
                }
                write_atomic(&dir.join(format!("{}_{n}.c", p.name)), source.as_bytes())?;
            }
            header.push_str("\n#endif\n");
            write_atomic(&dir.join(format!("{}.h", p.name)), header.as_bytes())?;
        }
        write_atomic(&root.join("metadata.jsonl"), &to_jsonl(self.metadata())?)
    }
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    config: &'a SynthConfig,
    themes: &'a [CategoryTheme],
    /// Zipf-like weights over each theme's code words.
    zipf: Vec<WeightedIndex<f64>>,
    vars: Vec<String>,
    calls: Vec<String>,
}

impl Generator<'_> {
    fn category_word(&mut self, category: usize) -> String {
        let mut k = category;
        if self.rng.random::<f64>() < self.config.noise {
            k = self.rng.random_range(0..self.themes.len() - 1);
            if k >= category {
                k += 1;
            }
        }
        let j = self.zipf[k].sample(&mut self.rng);
        self.themes[k].code_words[j].clone()
    }

    fn var(&mut self) -> String {
        self.vars.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn call(&mut self) -> String {
        self.calls.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn slot(&mut self, category: usize, generic: fn(&mut Self) -> String) -> String {
        if self.rng.random::<f64>() < self.config.signal_rate {
            self.category_word(category)
        } else {
            generic(self)
        }
    }

    fn statement(&mut self, category: usize) -> String {
        match self.rng.random_range(0..6) {
            0 => {
                let (a, b, c) = (self.var(), self.var(), self.var());
                let f = self.slot(category, Self::call);
                format!("{a} = {f}({b}, {c});")
            }
            1 => {
                let (a, b) = (self.var(), self.var());
                let r = self.slot(category, Self::var);
                format!("if ({a} < {b})\n        return {r};")
            }
            2 => {
                let n = self.var();
                let (t, v) = (self.slot(category, Self::var), self.var());
                format!("for (i = 0; i < {n}; i++)\n        {t}[i] = {v};")
            }
            3 => {
                let (a, b) = (self.var(), self.var());
                let m = self.slot(category, Self::var);
                format!("{a}->{m} = {b};")
            }
            4 => {
                let f = self.slot(category, Self::call);
                let (a, b) = (self.var(), self.var());
                format!("{f}({a}, {b});")
            }
            _ => {
                let a = self.var();
                let v = self.slot(category, Self::var);
                format!("{a} += {v} * {};", self.rng.random_range(1..64))
            }
        }
    }

    fn function(&mut self, project: &str, category: usize, taken: &mut BTreeSet<String>) -> Result<FunctionRecord> {
        let name = loop {
            let verb = self.call();
            let noun = self.category_word(category);
            let candidate = format!("{verb}_{noun}");
            if taken.insert(candidate.clone()) {
                break candidate;
            }
            let numbered = format!("{candidate}{}", taken.len());
            if taken.insert(numbered.clone()) {
                break numbered;
            }
        };
        let ret = *GENERIC_TYPES.choose(&mut self.rng).expect("non-empty");
        let (a1, a2) = (self.var(), self.slot(category, Self::var));
        let a2 = if a2 == a1 { format!("{a2}2") } else { a2 };
        let mut body = format!("{ret} {name}(struct ctx *{a1}, int {a2})\n{{\n");
        if self.rng.random::<f64>() < self.config.phrase_rate {
            let [p1, p2, p3] = &self.themes[category].phrase;
            let _ = writeln!(body, "    /* {p1} {p2} {p3} */");
        }
        for _ in 0..self.rng.random_range(4..=6) {
            let _ = writeln!(body, "    {}", self.statement(category));
        }
        body.push('}');
        FunctionRecord::new(project, name, body)
    }

    fn project_name(&mut self, taken: &mut BTreeSet<String>) -> String {
        fresh_word(&mut self.rng, taken, 3..=4)
    }

    fn description(&mut self, category: usize) -> String {
        let theme = &self.themes[category];
        let adj = *DESCRIPTION_FILLER.choose(&mut self.rng).expect("non-empty");
        let noun = *DESCRIPTION_NOUNS.choose(&mut self.rng).expect("non-empty");
        let picked: Vec<&String> = theme.description_words.choose_multiple(&mut self.rng, 3).collect();
        format!("A {adj} {} {noun} for {} and {}", picked[0], picked[1], picked[2])
    }
}

/// Generates the corpus deterministically from `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut names = BTreeSet::new();
    let themes = themes(config.categories, config.tail_words, &mut rng, &mut names);
    let zipf = themes
        .iter()
        .map(|t| WeightedIndex::new((0..t.code_words.len()).map(|r| 1.0 / (r as f64 + 1.0))).expect("positive weights"))
        .collect();
    let mut g = Generator {
        rng,
        config,
        themes: &themes,
        zipf,
        vars: words(GENERIC_VARS),
        calls: words(GENERIC_CALLS),
    };
    let mut projects = Vec::with_capacity(config.categories * config.projects_per_category);
    for (k, theme) in themes.iter().enumerate() {
        for _ in 0..config.projects_per_category {
            let name = g.project_name(&mut names);
            let description = g.description(k);
            let mut taken = BTreeSet::new();
            let functions = (0..config.functions_per_project)
                .map(|_| g.function(&name, k, &mut taken))
                .collect::<Result<Vec<_>>>()?;
            projects.push(Project::new(name, &theme.name, Some(description), functions)?);
        }
    }
    Ok(SynthCorpus { projects, themes })
}

/// Start of the first occurrence of `phrase` in `tokens`.
pub fn find_phrase(tokens: &[String], phrase: &[String]) -> Option<usize> {
    if phrase.is_empty() {
        return None;
    }
    tokens.windows(phrase.len()).position(|w| w == phrase)
}

/// Functions per category, for a quick corpus summary.
pub fn category_sizes(projects: &[Project]) -> BTreeMap<String, usize> {
    let mut sizes = BTreeMap::new();
    for p in projects {
        *sizes.entry(p.category.clone()).or_insert(0) += p.functions.len();
    }
    sizes
}
