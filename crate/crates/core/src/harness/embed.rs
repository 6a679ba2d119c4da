//! Sentence embeddings: a precomputed table loaded from disk, or a hashed
//! bag-of-words featurizer for runs without one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Signed feature hashing of lowercased alphanumeric tokens, L2-normalized.
/// Text without tokens maps to the zero vector.
pub fn hash_featurize(text: &str, dim: usize) -> Result<Vec<f64>> {
    if dim < 8 {
        return Err(Error::invalid(format!("hashed feature dimension {dim} must be >= 8")));
    }
    let mut v = vec![0.0; dim];
    let lower = text.to_lowercase();
    for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let h = fnv1a(token.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

/// Precomputed sentence vectors keyed by the exact sentence text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be >= 1"));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if id.contains(['\t', '\n']) {
            return Err(Error::invalid(format!("embedding id `{id}` contains a tab or newline")));
        }
        if self.vectors.insert(id.clone(), vector).is_some() {
            return Err(Error::invalid(format!("duplicate embedding id `{id}`")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// `count dim` header, then one `id<TAB>v1 v2 ...` line per vector.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vectors.len(), self.dim);
        for (id, v) in &self.vectors {
            out.push_str(id);
            out.push('\t');
            let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(origin, 1, "empty embedding file"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(origin, 1, "header must be `count dim`"))?;
        let [count, dim] = nums[..] else {
            return Err(Error::format(origin, 1, "header must be `count dim`"));
        };
        let mut table = Self::new(dim).map_err(|e| Error::format(origin, 1, e.to_string()))?;
        for (i, line) in lines {
            let lineno = i + 1;
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(origin, lineno, "expected `id<TAB>values`"))?;
            let values: Vec<f64> = rest
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(origin, lineno, "non-numeric value"))?;
            if values.len() != dim {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Error::format(origin, lineno, "non-finite value"));
            }
            table
                .insert(id, values)
                .map_err(|e| Error::format(origin, lineno, e.to_string()))?;
        }
        if table.len() != count {
            return Err(Error::format(
                origin,
                1,
                format!("header announces {count} vectors, file has {}", table.len()),
            ));
        }
        Ok(table)
    }
}

pub fn load_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&text, path)
}

pub fn save_embedding_file(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_text()).map_err(|e| Error::io(path, e))
}

/// Where sentence vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingSource {
    File(PathBuf),
    Table(EmbeddingTable),
    Hashed { dim: usize },
}

/// Resolved embedding source.
#[derive(Debug, Clone)]
pub enum Embedder {
    Table(EmbeddingTable),
    Hashed { dim: usize },
}

impl Embedder {
    pub fn from_source(source: &EmbeddingSource) -> Result<Self> {
        Ok(match source {
            EmbeddingSource::File(p) => Self::Table(load_embedding_file(p)?),
            EmbeddingSource::Table(t) => Self::Table(t.clone()),
            EmbeddingSource::Hashed { dim } => {
                hash_featurize("", *dim)?;
                Self::Hashed { dim: *dim }
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Table(t) => t.dim(),
            Self::Hashed { dim } => *dim,
        }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        match self {
            Self::Table(t) => t
                .get(text)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::Dataset(format!("no embedding for sentence `{text}`"))),
            Self::Hashed { dim } => hash_featurize(text, *dim),
        }
    }
}
