//! Context embeddings of a target numeral.
//!
//! Every backend returns one already-pooled vector per window. Backends:
//!
//! * [`HashedEmbedder`]: deterministic feature hashing, no external model.
//! * [`CachedEmbedder`]: vectors precomputed by some other system and dumped
//!   to a TSV cache, looked up by `(record_id, mention_id)`.
//! * `RemoteEmbedder` (feature `remote`): an HTTP service that runs the
//!   transformer and mean-pools the numeral's sub-word vectors.

mod cache;
mod hashed;
#[cfg(feature = "remote")]
mod remote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ContextWindow;

pub use cache::{load_cached_embeddings, save_cached_embeddings, CachedEmbedder, EmbeddingCache};
pub use hashed::{fnv1a64_seeded, hashed_embed, hashed_features, HashedEmbedder, MAX_RELATIVE_POSITION};
#[cfg(feature = "remote")]
pub use remote::{fetch_remote_embedding, RemoteEmbedder, DEFAULT_TIMEOUT};

/// Dimension of BERT-base pooled embeddings.
pub const DEFAULT_DIM: usize = 768;

/// A finite, fixed-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("embedding must have dim > 0".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "embedding entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        self.dot(&other.0) / (self.norm() * other.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    Hashed,
    Remote,
    Cached,
}

impl fmt::Display for EmbedderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbedderKind::Hashed => "hashed",
            EmbedderKind::Remote => "remote",
            EmbedderKind::Cached => "cached",
        })
    }
}

impl FromStr for EmbedderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hashed" => Ok(EmbedderKind::Hashed),
            "remote" => Ok(EmbedderKind::Remote),
            "cached" => Ok(EmbedderKind::Cached),
            other => Err(Error::InvalidArgument(format!(
                "unknown embedder {other:?} (expected hashed, remote or cached)"
            ))),
        }
    }
}

/// Identity of the embedding space a vector lives in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EmbedderId {
    Hashed { dim: usize, seed: u64 },
    Remote { dim: usize, endpoint: String },
    Cached { dim: usize },
}

impl EmbedderId {
    pub fn kind(&self) -> EmbedderKind {
        match self {
            EmbedderId::Hashed { .. } => EmbedderKind::Hashed,
            EmbedderId::Remote { .. } => EmbedderKind::Remote,
            EmbedderId::Cached { .. } => EmbedderKind::Cached,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            EmbedderId::Hashed { dim, .. } | EmbedderId::Remote { dim, .. } | EmbedderId::Cached { dim } => dim,
        }
    }

    /// Whether vectors produced under `other` live in the same space as ours.
    ///
    /// Hashed spaces must agree on dim and seed. A cache is a dump of some
    /// external provider, so remote and cached spaces are interchangeable when
    /// their dims agree; the endpoint URL is not part of the space.
    pub fn matches(&self, other: &EmbedderId) -> bool {
        use EmbedderId::*;
        match (self, other) {
            (Hashed { dim: a, seed: s }, Hashed { dim: b, seed: t }) => a == b && s == t,
            (Remote { .. } | Cached { .. }, Remote { .. } | Cached { .. }) => self.dim() == other.dim(),
            _ => false,
        }
    }
}

impl fmt::Display for EmbedderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedderId::Hashed { dim, seed } => write!(f, "hashed(dim={dim}, seed={seed})"),
            EmbedderId::Remote { dim, endpoint } => write!(f, "remote(dim={dim}, {endpoint})"),
            EmbedderId::Cached { dim } => write!(f, "cached(dim={dim})"),
        }
    }
}

/// Identifies one numeral occurrence inside one input record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MentionKey {
    pub record_id: String,
    pub mention_id: usize,
}

impl MentionKey {
    pub fn new(record_id: impl Into<String>, mention_id: usize) -> Self {
        MentionKey {
            record_id: record_id.into(),
            mention_id,
        }
    }
}

/// The provider contract: one pooled vector for the numeral at
/// `window.numeral_pos`, conditioned on the window words.
///
/// `key` is only consulted by lookup backends; computing backends ignore it.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> EmbedderId;

    fn embed(&self, key: &MentionKey, window: &ContextWindow) -> Result<EmbeddingVector>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn id(&self) -> EmbedderId {
        (**self).id()
    }

    fn embed(&self, key: &MentionKey, window: &ContextWindow) -> Result<EmbeddingVector> {
        (**self).embed(key, window)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn id(&self) -> EmbedderId {
        (**self).id()
    }

    fn embed(&self, key: &MentionKey, window: &ContextWindow) -> Result<EmbeddingVector> {
        (**self).embed(key, window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_rejects_bad_values() {
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert_eq!(EmbeddingVector::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn id_matching() {
        let h = EmbedderId::Hashed { dim: 768, seed: 0 };
        assert!(h.matches(&EmbedderId::Hashed { dim: 768, seed: 0 }));
        assert!(!h.matches(&EmbedderId::Hashed { dim: 768, seed: 1 }));
        assert!(!h.matches(&EmbedderId::Hashed { dim: 64, seed: 0 }));
        assert!(!h.matches(&EmbedderId::Cached { dim: 768 }));
        let r = EmbedderId::Remote {
            dim: 768,
            endpoint: "http://a".into(),
        };
        assert!(r.matches(&EmbedderId::Remote {
            dim: 768,
            endpoint: "http://b".into()
        }));
        assert!(r.matches(&EmbedderId::Cached { dim: 768 }));
        assert!(!r.matches(&EmbedderId::Cached { dim: 1024 }));
    }

    #[test]
    fn kind_parsing() {
        for k in [EmbedderKind::Hashed, EmbedderKind::Remote, EmbedderKind::Cached] {
            assert_eq!(k.to_string().parse::<EmbedderKind>().unwrap(), k);
        }
        assert!("bert".parse::<EmbedderKind>().is_err());
    }
}
