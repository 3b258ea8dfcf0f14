//! Token sequences and fixed-length integer encodings of functions.
//!
//! A function is rendered as `projectname functionname body-tokens`; the
//! code-description variant appends the literal token `descrdelim` followed by
//! the project description tokens.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::FunctionRecord;
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const DESCRIPTION_DELIMITER: &str = "descrdelim";
pub const DEFAULT_SEQ_LEN: usize = 60;

/// Which parts of a project a function representation draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Code only: project name, function name, body.
    Co,
    /// Code followed by `descrdelim` and the project description.
    Cd,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Co => "co",
            Variant::Cd => "cd",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co" => Ok(Variant::Co),
            "cd" => Ok(Variant::Cd),
            other => Err(Error::Config(format!("unknown variant '{other}' (expected co or cd)"))),
        }
    }
}

/// Lowercases, blanks every character outside `[a-z0-9_]`, and splits on
/// whitespace. Identifiers are never split further.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| {
            let c = c.to_ascii_lowercase();
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Token representation of one function. For [`Variant::Cd`] an absent or
/// token-free description yields the code-only sequence.
pub fn build_representation(
    function: &FunctionRecord,
    description: Option<&str>,
    variant: Variant,
) -> Vec<String> {
    let mut tokens = vec![
        function.project_name.to_lowercase(),
        function.function_name.to_lowercase(),
    ];
    tokens.extend(tokenize(&function.body));
    if variant == Variant::Cd {
        let described = description.map(tokenize).unwrap_or_default();
        if !described.is_empty() {
            tokens.push(DESCRIPTION_DELIMITER.to_string());
            tokens.extend(described);
        }
    }
    tokens
}

/// Token to integer index. Ids 0 and 1 are padding and unknown; the rest are
/// assigned in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut v = Vocabulary { tokens: Vec::new(), index: HashMap::new() };
        v.insert(PAD_TOKEN);
        v.insert(UNK_TOKEN);
        v
    }

    fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// Builds a vocabulary from training token streams. Nothing is pruned;
    /// `descrdelim` is appended if the streams never contained it.
    pub fn build<I, S, T>(streams: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut v = Self::with_reserved();
        for stream in streams {
            for tok in stream {
                v.insert(tok.as_ref());
            }
        }
        if v.tokens.len() == 2 {
            return Err(Error::Empty("vocabulary corpus has no tokens".into()));
        }
        v.insert(DESCRIPTION_DELIMITER);
        Ok(v)
    }

    /// Vocabulary over an explicit token list (reserved ids are prepended).
    pub fn from_tokens<T: AsRef<str>>(tokens: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut v = Self::with_reserved();
        for t in tokens {
            let t = t.as_ref();
            if v.index.contains_key(t) {
                return Err(Error::Config(format!("duplicate vocabulary token '{t}'")));
            }
            v.insert(t);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// All tokens in id order, reserved entries included.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Writes `token<TAB>id` lines in id order.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, tok) in self.tokens.iter().enumerate() {
            writeln!(w, "{tok}\t{id}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tokens are UTF-8")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse { line: n + 1, message: e.to_string() })?;
            if line.is_empty() {
                continue;
            }
            let (tok, id) = line.rsplit_once('\t').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected token<TAB>id".into(),
            })?;
            let id: usize = id.parse().map_err(|_| Error::Parse {
                line: n + 1,
                message: format!("bad id '{id}'"),
            })?;
            if id != tokens.len() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected id {}, found {id}", tokens.len()),
                });
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(Error::Parse { line: 1, message: "missing reserved pad/unk entries".into() });
        }
        Self::from_tokens(tokens.into_iter().skip(2))
    }

    /// SHA-256 of the text serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Maps tokens to ids, keeping the first `seq_len` and padding the tail with
/// [`PAD_ID`]. Unknown tokens become [`UNK_ID`].
pub fn encode<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary, seq_len: usize) -> Result<Vec<u32>> {
    if seq_len < 1 {
        return Err(Error::Config("seq_len must be at least 1".into()));
    }
    let mut ids: Vec<u32> = tokens
        .iter()
        .take(seq_len)
        .map(|t| vocab.id_or_unk(t.as_ref()))
        .collect();
    ids.resize(seq_len, PAD_ID);
    Ok(ids)
}

/// A fixed-length encoded function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representation {
    pub project: String,
    pub function: String,
    pub category: String,
    pub variant: Variant,
    pub ids: Vec<u32>,
}

impl Representation {
    pub fn new(
        function: &FunctionRecord,
        category: &str,
        description: Option<&str>,
        variant: Variant,
        vocab: &Vocabulary,
        seq_len: usize,
    ) -> Result<Self> {
        let tokens = build_representation(function, description, variant);
        Ok(Representation {
            project: function.project_name.clone(),
            function: function.function_name.clone(),
            category: category.to_string(),
            variant,
            ids: encode(&tokens, vocab, seq_len)?,
        })
    }
}
