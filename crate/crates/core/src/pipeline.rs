//! Free text in, one verdict per numeral out.

use std::time::Duration;

use serde::Serialize;
use web_time::Instant;

use crate::classifier::{ClaimLabel, LogisticModel};
use crate::embedding::{EmbeddingProvider, MentionKey};
use crate::error::{Error, Result};
use crate::extract::{context_window, find_numerals, tokenize};

/// Record id used for cache lookups when analyzing ad-hoc text.
pub const ADHOC_RECORD_ID: &str = "0";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub numeral: String,
    pub char_start: usize,
    pub char_end: usize,
    pub label: ClaimLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    pub rows: Vec<AnalysisRow>,
    pub elapsed: Duration,
    pub model_fingerprint: String,
}

impl AnalysisResult {
    pub fn elapsed_ms(&self) -> u64 {
        self.elapsed.as_millis() as u64
    }
}

/// A loaded model bound to an embedding provider and window size.
#[derive(Debug)]
pub struct Analyzer<P> {
    model: LogisticModel,
    fingerprint: String,
    provider: P,
    k: usize,
}

impl<P: EmbeddingProvider> Analyzer<P> {
    pub fn new(model: LogisticModel, provider: P, k: usize) -> Result<Self> {
        model.check_embedder(&provider.id())?;
        Ok(Analyzer {
            fingerprint: model.fingerprint(),
            model,
            provider,
            k,
        })
    }

    pub fn model(&self) -> &LogisticModel {
        &self.model
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    pub fn window(&self) -> usize {
        self.k
    }

    pub fn analyze(&self, text: &str) -> Result<AnalysisResult> {
        self.analyze_record(ADHOC_RECORD_ID, text)
    }

    /// Score every numeral of `text`. `record_id` keys cache lookups.
    pub fn analyze_record(&self, record_id: &str, text: &str) -> Result<AnalysisResult> {
        let started = Instant::now();
        let tokens = tokenize(text);
        let mut rows = Vec::new();
        for mention in find_numerals(&tokens) {
            let wrap = |e: Error| Error::Mention {
                mention_id: mention.mention_id,
                surface: mention.token.surface.clone(),
                source: Box::new(e),
            };
            let window = context_window(&tokens, &mention, self.k).map_err(wrap)?;
            let key = MentionKey::new(record_id, mention.mention_id);
            let vector = self.provider.embed(&key, &window).map_err(wrap)?;
            let prediction = self.model.classify(&vector).map_err(wrap)?;
            rows.push(AnalysisRow {
                numeral: mention.token.surface,
                char_start: mention.token.char_start,
                char_end: mention.token.char_end,
                label: prediction.label,
                probability: prediction.probability,
            });
        }
        Ok(AnalysisResult {
            rows,
            elapsed: started.elapsed(),
            model_fingerprint: self.fingerprint.clone(),
        })
    }
}

/// One-shot analysis; prefer [`Analyzer`] when scoring many texts.
pub fn analyze<P: EmbeddingProvider>(
    text: &str,
    model: &LogisticModel,
    provider: P,
    k: usize,
) -> Result<AnalysisResult> {
    Analyzer::new(model.clone(), provider, k)?.analyze(text)
}
