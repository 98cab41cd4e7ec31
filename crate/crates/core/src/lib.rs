//! In-claim / out-of-claim detection for numerals in financial text.
//!
//! The pipeline finds every whitespace-delimited word that contains a digit,
//! cuts a window of six words on each side, embeds the numeral in that window,
//! and scores the embedding with a logistic regression.
//!
//! ```
//! use fincat_core::{classifier, embedding::HashedEmbedder, pipeline::Analyzer, synthetic};
//!
//! let provider = HashedEmbedder::new(64, 0).unwrap();
//! let records = synthetic::generate(200, 1);
//! let data = fincat_core::evaluation::featurize(&records, &provider, 6).unwrap();
//! let model = classifier::train(
//!     &data.features,
//!     &data.labels,
//!     fincat_core::embedding::EmbeddingProvider::id(&provider),
//!     &classifier::TrainConfig::default(),
//! )
//! .unwrap();
//! let result = Analyzer::new(model, provider, 6).unwrap().analyze("Revenue will grow 12% in FY2025").unwrap();
//! assert_eq!(result.rows.len(), 2);
//! ```

pub mod classifier;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod extract;
pub mod pipeline;
pub mod synthetic;

pub use classifier::{ClaimLabel, LogisticModel, Prediction, TrainConfig};
pub use embedding::{EmbedderId, EmbeddingProvider, EmbeddingVector, MentionKey};
pub use error::{Error, Result};
pub use evaluation::{DatasetRecord, EvalReport};
pub use extract::{ContextWindow, NumeralMention, Token};
pub use pipeline::{AnalysisResult, AnalysisRow, Analyzer};
