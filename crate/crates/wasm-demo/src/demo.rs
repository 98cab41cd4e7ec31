//! Everything the page does, minus the JS glue.

use fincat_core::classifier::{self, TrainConfig};
use fincat_core::embedding::{fnv1a64_seeded, hashed_features, HashedEmbedder};
use fincat_core::evaluation::{evaluate, featurize};
use fincat_core::extract::{context_window, find_numerals, tokenize};
use fincat_core::{synthetic, Analyzer, EmbeddingProvider};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub dim: usize,
    pub train_records: usize,
    pub epochs: usize,
    pub final_loss: f64,
    pub validation_macro_f1: f64,
    pub validation_micro_f1: f64,
    pub model: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub numeral: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowView {
    pub numeral: String,
    pub word_index: usize,
    /// Word indices the window spans, inclusive.
    pub first: usize,
    pub last: usize,
    pub words: Vec<String>,
    pub numeral_pos: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Feature {
    pub name: String,
    pub bucket: usize,
    pub sign: f64,
    /// weight[bucket] · sign / ‖v‖, this feature's share of the logit
    pub contribution: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inspection {
    pub numeral: String,
    pub vector: Vec<f64>,
    pub features: Vec<Feature>,
    pub bias: f64,
    pub logit: f64,
    pub probability: f64,
}

pub struct Demo {
    analyzer: Analyzer<HashedEmbedder>,
    summary: Summary,
    seed: u64,
}

impl Demo {
    /// Train on `train_size` synthetic sentences and score 200 held-out ones.
    pub fn train(train_size: usize, dim: usize, seed: u64) -> Result<Demo, String> {
        let provider = HashedEmbedder::new(dim, seed).map_err(|e| e.to_string())?;
        let records = synthetic::generate(train_size.max(1), seed);
        let data = featurize(&records, &provider, 6).map_err(|e| e.to_string())?;
        let config = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let model =
            classifier::train(&data.features, &data.labels, provider.id(), &config).map_err(|e| e.to_string())?;
        let val = synthetic::generate(200, seed.wrapping_add(1));
        let report = evaluate(&model, &provider, &val, 6).map_err(|e| e.to_string())?.report;
        let summary = Summary {
            dim,
            train_records: records.len(),
            epochs: model.train_meta.epochs_run,
            final_loss: model.train_meta.final_loss,
            validation_macro_f1: report.f1_macro,
            validation_micro_f1: report.f1_micro,
            model: model.fingerprint(),
        };
        let analyzer = Analyzer::new(model, provider, 6).map_err(|e| e.to_string())?;
        Ok(Demo {
            analyzer,
            summary,
            seed,
        })
    }

    pub fn summary(&self) -> &Summary {
        &self.summary
    }

    pub fn analyze(&self, text: &str) -> Result<Vec<Row>, String> {
        let result = self.analyzer.analyze(text).map_err(|e| e.to_string())?;
        Ok(result
            .rows
            .into_iter()
            .map(|r| Row {
                numeral: r.numeral,
                start: r.char_start,
                end: r.char_end,
                label: r.label.as_str().to_string(),
                probability: r.probability,
            })
            .collect())
    }

    pub fn inspect(&self, text: &str, mention: usize) -> Result<Inspection, String> {
        let tokens = tokenize(text);
        let mentions = find_numerals(&tokens);
        let m = mentions
            .get(mention)
            .ok_or_else(|| format!("text has {} numerals, no mention {mention}", mentions.len()))?;
        let window = context_window(&tokens, m, self.analyzer.window()).map_err(|e| e.to_string())?;
        let key = fincat_core::MentionKey::new("0", m.mention_id);
        let vector = self
            .analyzer
            .provider()
            .embed(&key, &window)
            .map_err(|e| e.to_string())?;
        let model = self.analyzer.model();
        let dim = model.dim();

        let mut raw = vec![0.0; dim];
        let mut features: Vec<Feature> = hashed_features(&window)
            .into_iter()
            .map(|name| {
                let h = fnv1a64_seeded(self.seed, name.as_bytes());
                let bucket = (h % dim as u64) as usize;
                let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                raw[bucket] += sign;
                Feature {
                    name,
                    bucket,
                    sign,
                    contribution: 0.0,
                }
            })
            .collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for f in &mut features {
            f.contribution = if norm > 0.0 {
                model.weights[f.bucket] * f.sign / norm
            } else {
                0.0
            };
        }
        features.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));

        let prediction = model.classify(&vector).map_err(|e| e.to_string())?;
        Ok(Inspection {
            numeral: m.token.surface.clone(),
            logit: model.logit(&vector).map_err(|e| e.to_string())?,
            vector: vector.into_inner(),
            features,
            bias: model.bias,
            probability: prediction.probability,
        })
    }
}

/// The window each numeral of `text` would be embedded with.
pub fn windows(text: &str, k: usize) -> Vec<WindowView> {
    let tokens = tokenize(text);
    find_numerals(&tokens)
        .iter()
        .filter_map(|m| context_window(&tokens, m, k).ok())
        .map(|w| WindowView {
            numeral: w.numeral().surface.clone(),
            word_index: w.numeral().word_index,
            first: w.words[0].word_index,
            last: w.words[w.words.len() - 1].word_index,
            words: w.surfaces().into_iter().map(str::to_string).collect(),
            numeral_pos: w.numeral_pos,
        })
        .collect()
}
