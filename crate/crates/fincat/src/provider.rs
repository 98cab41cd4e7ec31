//! Embedder selection shared by every subcommand.

use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use fincat_core::embedding::{
    load_cached_embeddings, CachedEmbedder, EmbedderKind, HashedEmbedder, RemoteEmbedder, DEFAULT_DIM,
};
use fincat_core::extract::DEFAULT_WINDOW;
use fincat_core::{EmbedderId, EmbeddingProvider};

use crate::cli::CliError;

pub type DynProvider = Box<dyn EmbeddingProvider>;

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    /// Embedding provider: hashed, remote or cached
    #[arg(long, default_value = "hashed")]
    pub embedder: EmbedderKind,

    /// Vector dimension (defaults to the model's, else 768)
    #[arg(long)]
    pub dim: Option<usize>,

    /// Hash seed for the hashed embedder
    #[arg(long)]
    pub seed: Option<u64>,

    /// Base URL of a remote embedding service
    #[arg(long, env = "FINCAT_EMBED_ENDPOINT")]
    pub endpoint: Option<String>,

    /// Precomputed embeddings (TSV) for the cached embedder
    #[arg(long)]
    pub cache: Option<PathBuf>,

    /// Remote request timeout in milliseconds
    #[arg(long, default_value_t = 10_000)]
    pub timeout_ms: u64,

    /// Context words on each side of a numeral
    #[arg(short, long = "k", default_value_t = DEFAULT_WINDOW)]
    pub k: usize,
}

impl EmbedderArgs {
    /// Build the provider, filling unset dim/seed from `model` when given.
    pub fn build(&self, model: Option<&EmbedderId>) -> Result<DynProvider, CliError> {
        let model_dim = model.map(EmbedderId::dim);
        match self.embedder {
            EmbedderKind::Hashed => {
                let model_seed = match model {
                    Some(EmbedderId::Hashed { seed, .. }) => Some(*seed),
                    _ => None,
                };
                let dim = self.dim.or(model_dim).unwrap_or(DEFAULT_DIM);
                let seed = self.seed.or(model_seed).unwrap_or(0);
                let p = HashedEmbedder::new(dim, seed).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(Box::new(p))
            }
            EmbedderKind::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    CliError::Usage("--embedder remote needs --endpoint or FINCAT_EMBED_ENDPOINT".into())
                })?;
                let dim = self.dim.or(model_dim).unwrap_or(DEFAULT_DIM);
                let timeout = Duration::from_millis(self.timeout_ms);
                Ok(Box::new(RemoteEmbedder::new(endpoint, dim, timeout)))
            }
            EmbedderKind::Cached => {
                let path = self
                    .cache
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--embedder cached needs --cache <file>".into()))?;
                let cache = load_cached_embeddings(path)?;
                let dim = self.dim.or(cache.dim).or(model_dim).unwrap_or(DEFAULT_DIM);
                Ok(Box::new(CachedEmbedder::new(cache, dim)?))
            }
        }
    }
}
