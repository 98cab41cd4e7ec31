//! Precomputed embeddings in a tab-separated text file.
//!
//! ```text
//! #dim=768
//! <record_id>\t<mention_id>\t<v0>,<v1>,...,<v767>
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::extract::ContextWindow;

use super::{EmbedderId, EmbeddingProvider, EmbeddingVector, MentionKey};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingCache {
    /// `None` only for an empty file.
    pub dim: Option<usize>,
    pub entries: HashMap<MentionKey, EmbeddingVector>,
}

impl EmbeddingCache {
    pub fn get(&self, key: &MentionKey) -> Option<&EmbeddingVector> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_cached_embeddings(path: &Path) -> Result<EmbeddingCache> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cache(path, &text)
}

fn parse_cache(path: &Path, text: &str) -> Result<EmbeddingCache> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut cache = EmbeddingCache::default();

    let Some((header_no, header)) = lines.by_ref().find(|(_, l)| !l.trim().is_empty()) else {
        return Ok(cache);
    };
    let dim = header
        .trim_end()
        .strip_prefix("#dim=")
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::load(path, header_no, "expected header line \"#dim=<int>\""))?;
    cache.dim = Some(dim);

    for (no, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(record_id), Some(mention_id), Some(values), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::load(path, no, "expected 3 tab-separated fields"));
        };
        let mention_id: usize = mention_id
            .trim()
            .parse()
            .map_err(|_| Error::load(path, no, format!("bad mention_id {mention_id:?}")))?;
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::load(path, no, format!("bad float: {e}")))?;
        if values.len() != dim {
            return Err(Error::load(
                path,
                no,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        let vector = EmbeddingVector::new(values).map_err(|e| Error::load(path, no, e.to_string()))?;
        let key = MentionKey::new(record_id, mention_id);
        if cache.entries.insert(key, vector).is_some() {
            return Err(Error::load(
                path,
                no,
                format!("duplicate entry for record {record_id:?} mention {mention_id}"),
            ));
        }
    }
    Ok(cache)
}

/// Write `entries` sorted by key. Floats use the shortest representation that
/// parses back to the same value.
pub fn save_cached_embeddings<'a, I>(path: &Path, dim: usize, entries: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a MentionKey, &'a EmbeddingVector)>,
{
    let mut sorted: Vec<_> = entries.into_iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = format!("#dim={dim}\n");
    for (key, vector) in sorted {
        if vector.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "vector for {key:?} has dim {}, cache dim is {dim}",
                vector.dim()
            )));
        }
        if key.record_id.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidArgument(format!(
                "record_id {:?} cannot be stored in a TSV cache",
                key.record_id
            )));
        }
        let values: Vec<String> = vector.as_slice().iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            key.record_id,
            key.mention_id,
            values.join(",")
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Serves vectors from a loaded cache; a missing key is an error.
#[derive(Debug, Clone)]
pub struct CachedEmbedder {
    dim: usize,
    cache: EmbeddingCache,
}

impl CachedEmbedder {
    pub fn new(cache: EmbeddingCache, dim: usize) -> Result<Self> {
        match cache.dim {
            Some(d) if d != dim => Err(Error::InvalidArgument(format!(
                "cache holds {d}-dim vectors but {dim} was requested"
            ))),
            _ => Ok(CachedEmbedder { dim, cache }),
        }
    }

    /// Open a cache, taking its dimension from the header.
    pub fn open(path: &Path) -> Result<Self> {
        let cache = load_cached_embeddings(path)?;
        let dim = cache.dim.unwrap_or(super::DEFAULT_DIM);
        Ok(CachedEmbedder { dim, cache })
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl EmbeddingProvider for CachedEmbedder {
    fn id(&self) -> EmbedderId {
        EmbedderId::Cached { dim: self.dim }
    }

    fn embed(&self, key: &MentionKey, _window: &ContextWindow) -> Result<EmbeddingVector> {
        self.cache.get(key).cloned().ok_or_else(|| Error::CacheMiss {
            record_id: key.record_id.clone(),
            mention_id: key.mention_id,
        })
    }
}
