use std::collections::HashSet;
use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::repr::{Vocabulary, PAD_ID, UNK_ID};

/// Word vectors indexed by vocabulary id. Rows for padding and unknown are
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vectors: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(vocab_size: usize, dims: usize) -> Self {
        EmbeddingMatrix { vectors: Array2::zeros((vocab_size, dims)) }
    }

    pub fn from_array(vectors: Array2<f64>) -> Result<Self> {
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding entries must be finite".into()));
        }
        Ok(EmbeddingMatrix { vectors: vectors.as_standard_layout().into_owned() })
    }

    pub fn vocab_size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dims(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, id: u32) -> ArrayView1<'_, f64> {
        self.vectors.row(id as usize)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// Gaussian vectors with the same per-entry spread as this matrix's
    /// non-reserved rows. Reserved rows stay zero.
    pub fn randomized_like(&self, seed: u64) -> Self {
        let (v, d) = self.vectors.dim();
        let body: Vec<f64> = self.vectors.rows().into_iter().skip(2).flat_map(|r| r.to_vec()).collect();
        let var = if body.is_empty() {
            0.0
        } else {
            body.iter().map(|x| x * x).sum::<f64>() / body.len() as f64
        };
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        let normal = Normal::new(0.0, std).expect("positive std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Array2::zeros((v, d));
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            if i < 2 {
                continue;
            }
            for x in row.iter_mut() {
                *x = normal.sample(&mut rng);
            }
        }
        EmbeddingMatrix { vectors: out }
    }

    /// Writes `token v1 ... vd` lines for every non-reserved id. Values use
    /// the shortest decimal form that parses back to the same `f64`.
    pub fn write_text<W: Write>(&self, vocab: &Vocabulary, mut w: W) -> Result<()> {
        if vocab.len() != self.vocab_size() {
            return Err(Error::Shape(format!(
                "vocabulary has {} entries, embedding has {} rows",
                vocab.len(),
                self.vocab_size()
            )));
        }
        let io_err = |e| Error::io("<embedding>", e);
        for (id, tok) in vocab.tokens().iter().enumerate().skip(2) {
            w.write_all(tok.as_bytes()).map_err(io_err)?;
            for x in self.vectors.row(id) {
                write!(w, " {x}").map_err(io_err)?;
            }
            w.write_all(b"\n").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn to_text(&self, vocab: &Vocabulary) -> Result<String> {
        let mut buf = Vec::new();
        self.write_text(vocab, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tokens are UTF-8"))
    }
}

fn parse_line(line: &str, n: usize, dims: Option<usize>) -> Result<(&str, Vec<f64>)> {
    let mut parts = line.split_whitespace();
    let token = parts.next().ok_or_else(|| Error::Parse { line: n, message: "empty line".into() })?;
    let values = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Parse { line: n, message: format!("bad value '{p}'") })
        })
        .collect::<Result<Vec<f64>>>()?;
    if let Some(d) = dims {
        if values.len() != d {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {d} values, found {}", values.len()),
            });
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse { line: n, message: "non-finite value".into() });
    }
    Ok((token, values))
}

/// Fills rows of a `vocab.len() × dims` matrix from a `token v1 ... vd` text
/// stream. Vocabulary tokens absent from the stream keep zero rows; stream
/// tokens outside the vocabulary are ignored.
pub fn load_embedding_text<R: BufRead>(reader: R, vocab: &Vocabulary, dims: usize) -> Result<EmbeddingMatrix> {
    let mut m = EmbeddingMatrix::zeros(vocab.len(), dims);
    let mut seen = HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let n = k + 1;
        let line = line.map_err(|e| Error::Parse { line: n, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let (token, values) = parse_line(&line, n, Some(dims))?;
        if !seen.insert(token.to_string()) {
            return Err(Error::Parse { line: n, message: format!("duplicate token '{token}'") });
        }
        match vocab.id(token) {
            Some(id) if id != PAD_ID && id != UNK_ID => {
                m.vectors.row_mut(id as usize).assign(&ArrayView1::from(&values));
            }
            _ => {}
        }
    }
    Ok(m)
}

/// Reads a text embedding together with the vocabulary it defines: ids follow
/// line order after the reserved entries. Dimensionality comes from the first
/// line.
pub fn read_embedding_text<R: BufRead>(reader: R) -> Result<(Vocabulary, EmbeddingMatrix)> {
    let mut tokens = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut dims = None;
    for (k, line) in reader.lines().enumerate() {
        let n = k + 1;
        let line = line.map_err(|e| Error::Parse { line: n, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let (token, values) = parse_line(&line, n, dims)?;
        dims.get_or_insert(values.len());
        tokens.push(token.to_string());
        rows.extend(values);
    }
    let dims = dims.ok_or_else(|| Error::Empty("embedding text has no vectors".into()))?;
    let vocab = Vocabulary::from_tokens(&tokens).map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
    let mut full = vec![0.0; 2 * dims];
    full.extend(rows);
    let vectors = Array2::from_shape_vec((vocab.len(), dims), full).map_err(|e| Error::Shape(e.to_string()))?;
    Ok((vocab, EmbeddingMatrix { vectors }))
}

pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// Top-`k` tokens by cosine similarity to `token`, excluding the query, the
/// reserved ids and zero vectors. Ties go to the lower id.
pub fn nearest_neighbors(
    matrix: &EmbeddingMatrix,
    vocab: &Vocabulary,
    token: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let query = vocab.id(token).ok_or_else(|| Error::UnknownToken(token.to_string()))?;
    let q = matrix.row(query);
    let qn = q.dot(&q).sqrt();
    if qn == 0.0 {
        return Err(Error::Config(format!("token '{token}' has a zero vector")));
    }
    let mut scored: Vec<(u32, f64)> = (2..matrix.vocab_size() as u32)
        .filter(|&id| id != query)
        .filter_map(|id| {
            let r = matrix.row(id);
            let rn = r.dot(&r).sqrt();
            (rn > 0.0).then(|| (id, q.dot(&r) / (qn * rn)))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, s)| (vocab.token(id).unwrap_or_default().to_string(), s))
        .collect())
}
