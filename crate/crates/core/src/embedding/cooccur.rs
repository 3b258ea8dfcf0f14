use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Sparse left-context co-occurrence counts. `(target, context)` and
/// `(context, target)` are distinct cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooccurrenceTable {
    cells: HashMap<(u32, u32), f64>,
}

impl CooccurrenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, target: u32, context: u32, weight: f64) {
        *self.cells.entry((target, context)).or_insert(0.0) += weight;
    }

    pub fn get(&self, target: u32, context: u32) -> Option<f64> {
        self.cells.get(&(target, context)).copied()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Sum of all stored weights.
    pub fn total(&self) -> f64 {
        self.entries().iter().map(|e| e.2).sum()
    }

    /// Cells sorted by `(target, context)`.
    pub fn entries(&self) -> Vec<(u32, u32, f64)> {
        let mut v: Vec<(u32, u32, f64)> = self.cells.iter().map(|(&(i, j), &x)| (i, j, x)).collect();
        v.sort_unstable_by_key(|&(i, j, _)| (i, j));
        v
    }

    /// Adds another table's counts into this one. Merging shards in a fixed
    /// order reproduces the same sums.
    pub fn merge(&mut self, other: &CooccurrenceTable) {
        for (i, j, x) in other.entries() {
            self.add(i, j, x);
        }
    }

    /// Little-endian `(u32 target, u32 context, f64 count)` triples, sorted.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, j, x) in self.entries() {
            w.write_all(&i.to_le_bytes())?;
            w.write_all(&j.to_le_bytes())?;
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
        if bytes.len() % 16 != 0 {
            return Err(Error::Parse {
                line: 0,
                message: format!("co-occurrence cache length {} is not a multiple of 16", bytes.len()),
            });
        }
        let mut table = CooccurrenceTable::new();
        for rec in bytes.chunks_exact(16) {
            let i = u32::from_le_bytes(rec[0..4].try_into().unwrap());
            let j = u32::from_le_bytes(rec[4..8].try_into().unwrap());
            let x = f64::from_le_bytes(rec[8..16].try_into().unwrap());
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::NonFinite(format!("cached count for ({i},{j}) is {x}")));
            }
            table.add(i, j, x);
        }
        Ok(table)
    }
}

/// Counts, for every position `t` and every distance `d` in `1..=window`
/// with `t - d` inside the same sentence, `X[s[t], s[t-d]] += 1/d` (or `+= 1`
/// without distance weighting). Windows never cross sentence boundaries.
pub fn build_cooccurrence(sentences: &[Vec<u32>], window: usize, distance_weighting: bool) -> CooccurrenceTable {
    let mut table = CooccurrenceTable::new();
    for sentence in sentences {
        for t in 1..sentence.len() {
            let reach = window.min(t);
            for d in 1..=reach {
                let w = if distance_weighting { 1.0 / d as f64 } else { 1.0 };
                table.add(sentence[t], sentence[t - d], w);
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n²) pairwise oracle: every ordered pair (later, earlier) within the window.
    fn brute_force(sentences: &[Vec<u32>], window: usize) -> HashMap<(u32, u32), f64> {
        let mut m = HashMap::new();
        for s in sentences {
            for a in 0..s.len() {
                for b in 0..s.len() {
                    if b < a && a - b <= window {
                        *m.entry((s[a], s[b])).or_insert(0.0) += 1.0 / (a - b) as f64;
                    }
                }
            }
        }
        m
    }

    #[test]
    fn three_token_sentence() {
        // a=0, b=1, c=2
        let t = build_cooccurrence(&[vec![0, 1, 2]], 2, true);
        assert_eq!(t.len(), 3);
        assert_eq!(t.get(1, 0), Some(1.0));
        assert_eq!(t.get(2, 1), Some(1.0));
        assert_eq!(t.get(2, 0), Some(0.5));
        assert_eq!(t.get(0, 1), None);
    }

    #[test]
    fn single_token_sentence_is_empty() {
        assert!(build_cooccurrence(&[vec![7]], 200, true).is_empty());
        assert!(build_cooccurrence(&[], 200, true).is_empty());
    }

    #[test]
    fn no_pairs_across_sentences() {
        let t = build_cooccurrence(&[vec![0, 1], vec![1, 2]], 5, true);
        assert_eq!(t.entries(), vec![(1, 0, 1.0), (2, 1, 1.0)]);
    }

    #[test]
    fn matches_brute_force_on_random_sentences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n_sent = rng.random_range(1..5);
            let sentences: Vec<Vec<u32>> = (0..n_sent)
                .map(|_| (0..rng.random_range(0..80)).map(|_| rng.random_range(0..12)).collect())
                .collect();
            let window = rng.random_range(1..30);
            let fast = build_cooccurrence(&sentences, window, true);
            let slow = brute_force(&sentences, window);
            assert_eq!(fast.len(), slow.len());
            for (i, j, x) in fast.entries() {
                assert!((x - slow[&(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn total_mass_closed_form() {
        let sentences = vec![(0..40).map(|i| i % 7).collect::<Vec<u32>>(), vec![1, 2, 3]];
        let window = 9;
        let table = build_cooccurrence(&sentences, window, true);
        let expected: f64 = sentences
            .iter()
            .flat_map(|s| (0..s.len()).map(move |t| (1..=window.min(t)).map(|j| 1.0 / j as f64).sum::<f64>()))
            .sum();
        assert!((table.total() - expected).abs() < 1e-9);
    }

    #[test]
    fn unweighted_counts() {
        let t = build_cooccurrence(&[vec![0, 1, 2]], 2, false);
        assert_eq!(t.get(2, 0), Some(1.0));
    }

    #[test]
    fn merge_and_binary_round_trip() {
        let a = build_cooccurrence(&[vec![0, 1, 2, 0]], 3, true);
        let b = build_cooccurrence(&[vec![2, 0]], 3, true);
        let mut merged = a.clone();
        merged.merge(&b);
        assert_eq!(merged, build_cooccurrence(&[vec![0, 1, 2, 0], vec![2, 0]], 3, true));

        let mut bytes = Vec::new();
        merged.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), merged.len() * 16);
        assert_eq!(CooccurrenceTable::read_binary(&bytes[..]).unwrap(), merged);
        assert!(CooccurrenceTable::read_binary(&bytes[..15]).is_err());
    }
}
