//! Shared word and entity embedding table.
//!
//! Entities are looked up by MeSH identifier, which the tokenizer emits as a
//! pseudo-word, so a single table serves both. Tokens absent from the loaded
//! vectors are drawn uniformly from `[-0.25, 0.25]` on first lookup and
//! cached, in lookup order, from a seeded generator.

use std::collections::HashSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::linalg::uniform_vec;

pub const DEFAULT_DIM: usize = 100;
/// Half-width of the uniform distribution for unknown tokens.
pub const UNKNOWN_BOUND: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    entries: IndexMap<String, Vec<f64>>,
    /// The first `pretrained` entries came from a vector file.
    pretrained: usize,
    rng: ChaCha8Rng,
}

impl EmbeddingTable {
    /// A table with no pre-trained vectors: every token is random.
    pub fn random(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            entries: IndexMap::new(),
            pretrained: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pretrained_len(&self) -> usize {
        self.pretrained
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.entries.get_index_of(token)
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.entries[index]
    }

    /// Whether `token` was present in the loaded vector file.
    pub fn is_pretrained(&self, token: &str) -> bool {
        self.index_of(token).is_some_and(|i| i < self.pretrained)
    }

    /// Returns the stored vector, drawing and caching a random one for an
    /// unknown token.
    pub fn lookup_or_init(&mut self, token: &str) -> &[f64] {
        self.index_or_init(token);
        &self.entries[token]
    }

    pub fn index_or_init(&mut self, token: &str) -> usize {
        if let Some(i) = self.entries.get_index_of(token) {
            return i;
        }
        let v = uniform_vec(&mut self.rng, self.dim, UNKNOWN_BOUND);
        self.entries.insert_full(token.to_string(), v).0
    }

    /// Fraction of `vocab` not covered by the loaded vectors.
    pub fn oov_fraction(&self, vocab: &[String]) -> f64 {
        if vocab.is_empty() {
            return 0.0;
        }
        let found = vocab.iter().filter(|t| self.is_pretrained(t)).count();
        1.0 - found as f64 / vocab.len() as f64
    }

    /// Loads the text word2vec format: a `<count> <dim>` header followed by
    /// one `<token> <dim floats>` line per entry.
    pub fn load_word2vec_text(input: &str, seed: u64) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "missing `<count> <dim>` header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(1, format!("bad header {header:?}")))?;
        let [count, dim] = nums[..] else {
            return Err(Error::format(1, format!("bad header {header:?}")));
        };
        if dim == 0 {
            return Err(Error::format(1, "dimension must be positive"));
        }

        let mut table = EmbeddingTable::random(dim, seed);
        let mut rows = 0;
        for (n, line) in lines {
            rows += 1;
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap();
            let v: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(n + 1, format!("bad float: {e}")))?;
            if v.len() != dim {
                return Err(Error::format(
                    n + 1,
                    format!("expected {dim} values for {token:?}, found {}", v.len()),
                ));
            }
            if table.entries.contains_key(token) {
                log::warn!(
                    "line {}: duplicate token {token:?}, keeping the first",
                    n + 1
                );
                continue;
            }
            table.entries.insert(token.to_string(), v);
        }
        if rows != count {
            return Err(Error::format(
                1,
                format!("header declares {count} entries, file has {rows}"),
            ));
        }
        table.pretrained = table.entries.len();
        Ok(table)
    }

    /// Dumps the table (including initialized unknowns) in word2vec text
    /// format, in insertion order.
    pub fn to_word2vec_text(&self) -> String {
        let mut out = format!("{} {}\n", self.entries.len(), self.dim);
        for (token, v) in &self.entries {
            out.push_str(token);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }
}

/// Ordered union of instance tokens, in first-appearance order.
pub fn build_vocab(instances: &[Instance]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut vocab = Vec::new();
    for token in instances.iter().flat_map(|i| &i.sequence) {
        if seen.insert(token.as_str()) {
            vocab.push(token.clone());
        }
    }
    vocab
}
