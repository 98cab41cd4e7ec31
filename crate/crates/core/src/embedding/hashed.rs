//! Feature-hashed context embedding.
//!
//! Features of a window:
//!
//! * `N␟<numeral>`: the numeral surface,
//! * `C␟<word>␟<rel>`: each other window word with its position relative to
//!   the numeral, clamped to ±6 and written as a plain decimal integer,
//! * `G␟<gram>`: each character 3-gram of `^<numeral>$`,
//!
//! where `␟` is U+001F. Each feature is hashed with 64-bit FNV-1a over the
//! big-endian seed bytes followed by the feature's UTF-8 bytes. The hash picks
//! the bucket (`hash % dim`) and the sign (bit 63 set means −1). The summed
//! vector is L2-normalized.

use crate::error::{Error, Result};
use crate::extract::ContextWindow;

use super::{EmbedderId, EmbeddingProvider, EmbeddingVector, MentionKey};

pub const MAX_RELATIVE_POSITION: i64 = 6;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SEP: char = '\u{1f}';

pub fn fnv1a64_seeded(seed: u64, bytes: &[u8]) -> u64 {
    seed.to_be_bytes()
        .iter()
        .chain(bytes)
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// The serialized features of `window`, in a fixed order (numeral, context
/// words left to right, then 3-grams). Repeated features are kept.
pub fn hashed_features(window: &ContextWindow) -> Vec<String> {
    let numeral = &window.numeral().surface;
    let mut features = vec![format!("N{SEP}{numeral}")];

    for (pos, word) in window.words.iter().enumerate() {
        if pos == window.numeral_pos {
            continue;
        }
        let rel = (pos as i64 - window.numeral_pos as i64).clamp(-MAX_RELATIVE_POSITION, MAX_RELATIVE_POSITION);
        features.push(format!("C{SEP}{}{SEP}{rel}", word.surface));
    }

    let padded: Vec<char> = std::iter::once('^')
        .chain(numeral.chars())
        .chain(std::iter::once('$'))
        .collect();
    for gram in padded.windows(3) {
        let mut f = String::from("G");
        f.push(SEP);
        f.extend(gram);
        features.push(f);
    }
    features
}

pub fn hashed_embed(window: &ContextWindow, dim: usize, seed: u64) -> Result<EmbeddingVector> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "hashed embedder needs dim >= 2, got {dim}"
        )));
    }
    let mut values = vec![0.0f64; dim];
    for feature in hashed_features(window) {
        let h = fnv1a64_seeded(seed, feature.as_bytes());
        let idx = (h % dim as u64) as usize;
        values[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        values[0] = 1.0;
    } else {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    EmbeddingVector::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashedEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "hashed embedder needs dim >= 2, got {dim}"
            )));
        }
        Ok(HashedEmbedder { dim, seed })
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder {
            dim: super::DEFAULT_DIM,
            seed: 0,
        }
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn id(&self) -> EmbedderId {
        EmbedderId::Hashed {
            dim: self.dim,
            seed: self.seed,
        }
    }

    fn embed(&self, _key: &MentionKey, window: &ContextWindow) -> Result<EmbeddingVector> {
        hashed_embed(window, self.dim, self.seed)
    }
}
