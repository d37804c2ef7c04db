//! Lexical (hashed character n-gram) and semantic (mean-pooled embedding)
//! text vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Seed of the 64-bit xxh3 hash applied to n-grams. Changing it invalidates every stored index.
pub const NGRAM_HASH_SEED: u64 = 0x6f6e_746f_5f6e_6772;

pub const DEFAULT_NGRAM_SIZES: [usize; 2] = [3, 4];

/// NFKC, lowercase, whitespace runs collapsed to one space, trimmed.
pub fn normalize_text(text: &str) -> String {
    let lowered: String = text.nfkc().flat_map(char::to_lowercase).collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().flat_map(char::to_lowercase).collect())
        .collect()
}

/// Distinct character n-grams of `normalized` with their counts, in first-seen order.
pub fn char_ngrams(normalized: &str, sizes: &[usize]) -> Vec<(String, u32)> {
    let chars: Vec<char> = normalized.chars().collect();
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u32> = HashMap::new();
    for &n in sizes {
        if n == 0 || chars.len() < n {
            continue;
        }
        for w in chars.windows(n) {
            let gram: String = w.iter().collect();
            match counts.get_mut(&gram) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(gram.clone(), 1);
                    order.push(gram);
                }
            }
        }
    }
    order
        .into_iter()
        .map(|g| {
            let c = counts[&g];
            (g, c)
        })
        .collect()
}

pub fn ngram_hash(gram: &str) -> u64 {
    xxhash_rust::xxh3::xxh3_64_with_seed(gram.as_bytes(), NGRAM_HASH_SEED)
}

/// Sparse vector over hashed n-grams, entries sorted by hash.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LexicalVector {
    entries: Vec<(u64, f64)>,
}

impl LexicalVector {
    /// Builds a vector from raw `(hash, magnitude)` pairs and L2-normalizes it.
    pub fn from_counts(mut entries: Vec<(u64, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        LexicalVector { entries }
    }

    /// Wraps entries that are already sorted and normalized (as read from storage).
    pub(crate) fn from_stored(entries: Vec<(u64, f64)>) -> Self {
        LexicalVector { entries }
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &LexicalVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexicalEncoder {
    sizes: Vec<usize>,
}

impl Default for LexicalEncoder {
    fn default() -> Self {
        LexicalEncoder {
            sizes: DEFAULT_NGRAM_SIZES.to_vec(),
        }
    }
}

impl LexicalEncoder {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::Config(
                "n-gram sizes must be non-empty and positive".into(),
            ));
        }
        Ok(LexicalEncoder { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn encode(&self, text: &str) -> LexicalVector {
        let normalized = normalize_text(text);
        let entries = char_ngrams(&normalized, &self.sizes)
            .into_iter()
            .map(|(g, c)| (ngram_hash(&g), c as f64))
            .collect();
        LexicalVector::from_counts(entries)
    }
}

/// Lexical vector with the default 3- and 4-gram sizes.
pub fn lexical_vector(text: &str) -> LexicalVector {
    LexicalEncoder::default().encode(text)
}

/// Dense vector, unit length or exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticVector(Vec<f64>);

impl SemanticVector {
    pub fn zeros(dimension: usize) -> Self {
        SemanticVector(vec![0.0; dimension])
    }

    /// L2-normalizes `values`; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        SemanticVector(values)
    }

    pub(crate) fn from_stored(values: Vec<f64>) -> Self {
        SemanticVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn dot(&self, other: &SemanticVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Cosine similarity of two already-normalized vectors; zero vectors give 0.
pub trait Cosine {
    fn cosine(&self, other: &Self) -> f64;
}

impl Cosine for LexicalVector {
    fn cosine(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

impl Cosine for SemanticVector {
    fn cosine(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

pub fn cosine<V: Cosine>(u: &V, v: &V) -> f64 {
    u.cosine(v)
}

/// Word embeddings keyed by lowercase token.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, entries: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if let Some((tok, v)) = entries.iter().find(|(_, v)| v.len() != dimension) {
            return Err(Error::Config(format!(
                "embedding for {tok:?} has length {} instead of {dimension}",
                v.len()
            )));
        }
        let entries = entries
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        Ok(EmbeddingTable { dimension, entries })
    }

    /// Reads the text format: a `<vocab_size> <dimension>` header, then one
    /// token followed by `dimension` decimals per line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line.map_err(|e| Error::io("<embeddings>", e))?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "missing embedding header".into(),
                    })
                }
            }
        };
        let mut parts = header.split_whitespace();
        let parse_usize = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (Some(vocab), Some(dimension)) = (parse_usize(parts.next()), parse_usize(parts.next()))
        else {
            return Err(Error::Parse {
                line: 1,
                message: "header must be '<vocab_size> <dimension>'".into(),
            });
        };
        let mut entries = HashMap::with_capacity(vocab);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values: Vec<f64> = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("bad number: {e}"),
                })?;
            if values.len() != dimension {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {dimension} values, found {}", values.len()),
                });
            }
            entries.insert(token.to_lowercase(), values);
        }
        if entries.len() != vocab {
            return Err(Error::Parse {
                line: 1,
                message: format!("header announces {vocab} tokens, found {}", entries.len()),
            });
        }
        EmbeddingTable::new(dimension, entries)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }
}

/// Turns a text fragment into a [`SemanticVector`].
pub trait SemanticEncoder: Send + Sync {
    fn dimension(&self) -> usize;
    fn encode(&self, text: &str) -> SemanticVector;
}

/// Mean of the in-vocabulary token embeddings, L2-normalized.
#[derive(Clone, Debug)]
pub struct MeanPoolEncoder {
    table: Arc<EmbeddingTable>,
}

impl MeanPoolEncoder {
    pub fn new(table: Arc<EmbeddingTable>) -> Self {
        MeanPoolEncoder { table }
    }
}

impl SemanticEncoder for MeanPoolEncoder {
    fn dimension(&self) -> usize {
        self.table.dimension()
    }

    fn encode(&self, text: &str) -> SemanticVector {
        semantic_vector(text, &self.table)
    }
}

pub fn semantic_vector(text: &str, table: &EmbeddingTable) -> SemanticVector {
    let mut sum = vec![0.0; table.dimension()];
    let mut n = 0usize;
    for tok in tokenize(text) {
        if let Some(v) = table.get(&tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n == 0 {
        return SemanticVector::zeros(table.dimension());
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    SemanticVector::normalized(sum)
}

/// The lexical and semantic encoders used for both indexing and classification.
#[derive(Clone)]
pub struct Encoders {
    pub lexical: LexicalEncoder,
    pub semantic: Arc<dyn SemanticEncoder>,
}

impl std::fmt::Debug for Encoders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Encoders")
            .field("lexical", &self.lexical)
            .field("semantic_dimension", &self.semantic.dimension())
            .finish()
    }
}

impl Encoders {
    pub fn mean_pool(lexical: LexicalEncoder, table: EmbeddingTable) -> Self {
        Encoders {
            lexical,
            semantic: Arc::new(MeanPoolEncoder::new(Arc::new(table))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dot(a: &LexicalVector, b: &LexicalVector) -> f64 {
        let m: HashMap<u64, f64> = a.entries().iter().copied().collect();
        b.entries()
            .iter()
            .map(|(h, v)| m.get(h).map_or(0.0, |x| x * v))
            .sum()
    }

    #[test]
    fn food_ngrams() {
        let grams = char_ngrams("food", &[3, 4]);
        assert_eq!(
            grams,
            vec![("foo".into(), 1), ("ood".into(), 1), ("food".into(), 1)]
        );
        let v = lexical_vector("food");
        assert_eq!(v.entries().len(), 3);
        for (_, m) in v.entries() {
            assert!((m - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn short_strings_are_empty() {
        assert!(lexical_vector("").is_empty());
        assert!(lexical_vector("ab").is_empty());
        assert_eq!(lexical_vector("ab").norm(), 0.0);
    }

    #[test]
    fn repeated_ngrams() {
        let v = lexical_vector("aaaa");
        let aaa = ngram_hash("aaa");
        let aaaa = ngram_hash("aaaa");
        let get = |h| v.entries().iter().find(|e| e.0 == h).unwrap().1;
        assert!((get(aaa) - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((get(aaaa) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_text("  Polar\t\tBEAR \n"), "polar bear");
        assert_eq!(normalize_text("ﬁsh"), "fish");
        assert_eq!(lexical_vector("Polar  Bear"), lexical_vector("polar bear"));
    }

    #[test]
    fn food_vs_foods_matches_naive_dot() {
        let a = lexical_vector("food");
        let b = lexical_vector("foods");
        let c = cosine(&a, &b);
        assert!((c - naive_dot(&a, &b)).abs() < 1e-15);
        // food: 3 grams, foods: 5 grams, 3 shared -> 3 / sqrt(15)
        assert!((c - 3.0 / 15f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cosine_basics() {
        let a = lexical_vector("whale");
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
        let x = SemanticVector::normalized(vec![1.0, 0.0]);
        let y = SemanticVector::normalized(vec![0.0, 1.0]);
        assert_eq!(cosine(&x, &y), 0.0);
        assert_eq!(cosine(&x, &SemanticVector::zeros(2)), 0.0);
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            3,
            [
                ("a".to_string(), vec![1.0, 0.0, 0.0]),
                ("b".to_string(), vec![0.0, 1.0, 0.0]),
                ("c".to_string(), vec![0.0, 3.0, 4.0]),
            ]
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn semantic_mean_pooling() {
        let t = table();
        let v = semantic_vector("a b", &t);
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(v.values(), &[h, h, 0.0]);
        assert_eq!(semantic_vector("zz qq", &t), SemanticVector::zeros(3));
        assert_eq!(semantic_vector("C", &t).values(), &[0.0, 0.6, 0.8]);
    }

    #[test]
    fn embedding_file_parsing() {
        let text = "2 3\nfoo 1 0 0\nBar 0 0.5 0.5\n";
        let t = EmbeddingTable::parse(text.as_bytes()).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.get("bar"), Some(&[0.0, 0.5, 0.5][..]));
        assert!(EmbeddingTable::parse("2 3\nfoo 1 0\n".as_bytes()).is_err());
        assert!(EmbeddingTable::parse("3 3\nfoo 1 0 0\n".as_bytes()).is_err());
        assert!(EmbeddingTable::parse("x\n".as_bytes()).is_err());
    }

    #[test]
    fn bundled_table_loads() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_embeddings.txt");
        let t = EmbeddingTable::load(&path).unwrap();
        assert_eq!(t.dimension(), 16);
        assert_eq!(t.len(), 80);
        assert!(t.get("seal").is_some());
    }
}
