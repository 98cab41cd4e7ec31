//! Labeled numeral datasets and micro/macro F1.
//!
//! Dataset files are JSON Lines, one target numeral per line:
//!
//! ```text
//! {"record_id": "r1", "paragraph": "...", "target_offset_start": 13, "target_offset_end": 16, "claim": 1}
//! ```
//!
//! Offsets are character (not byte) positions into `paragraph`; `claim` is 1
//! for in-claim and 0 for out-of-claim.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClaimLabel, LogisticModel};
use crate::embedding::{EmbeddingProvider, EmbeddingVector, MentionKey};
use crate::error::{Error, Result};
use crate::extract::{context_window, find_numerals, token_covering, tokenize, DigitRule, NumeralMention, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub record_id: String,
    pub paragraph: String,
    pub target_offset_start: usize,
    pub target_offset_end: usize,
    pub label: ClaimLabel,
}

#[derive(Deserialize)]
struct RawRecord {
    record_id: RecordId,
    paragraph: String,
    target_offset_start: usize,
    target_offset_end: usize,
    claim: u8,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordId {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Serialize)]
struct OutRecord<'a> {
    record_id: &'a str,
    paragraph: &'a str,
    target_offset_start: usize,
    target_offset_end: usize,
    claim: u8,
}

impl DatasetRecord {
    /// The target span as written in the paragraph.
    pub fn span_text(&self) -> String {
        self.paragraph
            .chars()
            .skip(self.target_offset_start)
            .take(self.target_offset_end.saturating_sub(self.target_offset_start))
            .collect()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let len = self.paragraph.chars().count();
        if self.target_offset_start >= self.target_offset_end {
            return Err(format!(
                "target span [{}, {}) is empty",
                self.target_offset_start, self.target_offset_end
            ));
        }
        if self.target_offset_end > len {
            return Err(format!(
                "target span ends at {} but paragraph has {len} characters",
                self.target_offset_end
            ));
        }
        let span = self.span_text();
        if !DigitRule::default().has_digit(&span) {
            return Err(format!("target span {span:?} contains no digit"));
        }
        Ok(())
    }

    /// Tokens of the paragraph and the mention covering the target span.
    pub fn locate(&self) -> std::result::Result<(Vec<Token>, NumeralMention), String> {
        let tokens = tokenize(&self.paragraph);
        let word_index = token_covering(&tokens, self.target_offset_start, self.target_offset_end)
            .map(|t| t.word_index)
            .ok_or_else(|| {
                format!(
                    "target span [{}, {}) {:?} does not lie within one word",
                    self.target_offset_start,
                    self.target_offset_end,
                    self.span_text()
                )
            })?;
        let mention = find_numerals(&tokens)
            .into_iter()
            .find(|m| m.token.word_index == word_index)
            .ok_or_else(|| "target word is not a numeral".to_string())?;
        Ok((tokens, mention))
    }
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(path, &text)
}

fn parse_dataset(path: &Path, text: &str) -> Result<Vec<DatasetRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| Error::load(path, no, format!("malformed record: {e}")))?;
        let label = ClaimLabel::from_bit(raw.claim)
            .ok_or_else(|| Error::load(path, no, format!("claim must be 0 or 1, got {}", raw.claim)))?;
        let record = DatasetRecord {
            record_id: match raw.record_id {
                RecordId::Text(s) => s,
                RecordId::Number(n) => n.to_string(),
            },
            paragraph: raw.paragraph,
            target_offset_start: raw.target_offset_start,
            target_offset_end: raw.target_offset_end,
            label,
        };
        record.validate().map_err(|msg| Error::load(path, no, msg))?;
        records.push(record);
    }
    Ok(records)
}

pub fn save_dataset(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(&OutRecord {
            record_id: &r.record_id,
            paragraph: &r.paragraph,
            target_offset_start: r.target_offset_start,
            target_offset_end: r.target_offset_end,
            claim: r.label.as_bit(),
        })
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Counts with in-claim as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassF1 {
    pub in_claim: f64,
    pub out_of_claim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub confusion: Confusion,
    pub f1_micro: f64,
    pub f1_macro: f64,
    pub per_class_f1: PerClassF1,
}

/// F1 from raw counts, 0 when precision and recall are both undefined or zero.
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn f1_scores(predictions: &[ClaimLabel], gold: &[ClaimLabel]) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions but {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("cannot score an empty set".into()));
    }
    let mut c = Confusion::default();
    for (p, g) in predictions.iter().zip(gold) {
        match (p, g) {
            (ClaimLabel::InClaim, ClaimLabel::InClaim) => c.tp += 1,
            (ClaimLabel::InClaim, ClaimLabel::OutOfClaim) => c.fp += 1,
            (ClaimLabel::OutOfClaim, ClaimLabel::OutOfClaim) => c.tn += 1,
            (ClaimLabel::OutOfClaim, ClaimLabel::InClaim) => c.fn_ += 1,
        }
    }
    let per_class_f1 = PerClassF1 {
        in_claim: f1(c.tp, c.fp, c.fn_),
        // For the negative class the roles of fp and fn swap.
        out_of_claim: f1(c.tn, c.fn_, c.fp),
    };
    // Pooled over both classes: every error is one false positive for one
    // class and one false negative for the other.
    let pooled_tp = c.tp + c.tn;
    let pooled_err = c.fp + c.fn_;
    Ok(EvalReport {
        n: gold.len(),
        confusion: c,
        f1_micro: f1(pooled_tp, pooled_err, pooled_err),
        f1_macro: (per_class_f1.in_claim + per_class_f1.out_of_claim) / 2.0,
        per_class_f1,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.confusion;
        writeln!(f, "records           {:>8}", self.n)?;
        writeln!(f, "F1 micro          {:>8.4}", self.f1_micro)?;
        writeln!(f, "F1 macro          {:>8.4}", self.f1_macro)?;
        writeln!(f, "F1 in-claim       {:>8.4}", self.per_class_f1.in_claim)?;
        writeln!(f, "F1 out-of-claim   {:>8.4}", self.per_class_f1.out_of_claim)?;
        writeln!(f)?;
        writeln!(f, "                  pred in  pred out")?;
        writeln!(f, "gold in-claim     {:>7}  {:>8}", c.tp, c.fn_)?;
        write!(f, "gold out-of-claim {:>7}  {:>8}", c.fp, c.tn)
    }
}

/// A record that could not be scored and was left out of the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub index: usize,
    pub record_id: String,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {} ({:?}): {}", self.index, self.record_id, self.message)
    }
}

/// Embedded records, in input order, with their gold labels.
#[derive(Debug, Clone, Default)]
pub struct Featurized {
    pub features: Vec<EmbeddingVector>,
    pub labels: Vec<ClaimLabel>,
    pub skipped: Vec<RecordError>,
}

/// Window and embed every record. Records whose span does not line up with a
/// word are skipped and listed; a provider failure aborts.
pub fn featurize<P: EmbeddingProvider + ?Sized>(
    records: &[DatasetRecord],
    provider: &P,
    k: usize,
) -> Result<Featurized> {
    let mut out = Featurized::default();
    for (index, record) in records.iter().enumerate() {
        let (tokens, mention) = match record.locate() {
            Ok(found) => found,
            Err(message) => {
                out.skipped.push(RecordError {
                    index,
                    record_id: record.record_id.clone(),
                    message,
                });
                continue;
            }
        };
        let window = context_window(&tokens, &mention, k)?;
        let key = MentionKey::new(record.record_id.clone(), mention.mention_id);
        let vector = provider.embed(&key, &window).map_err(|e| Error::Record {
            record_id: record.record_id.clone(),
            source: Box::new(e),
        })?;
        out.features.push(vector);
        out.labels.push(record.label);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub report: EvalReport,
    pub skipped: Vec<RecordError>,
}

pub fn evaluate<P: EmbeddingProvider + ?Sized>(
    model: &LogisticModel,
    provider: &P,
    records: &[DatasetRecord],
    k: usize,
) -> Result<Evaluation> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to evaluate".into()));
    }
    model.check_embedder(&provider.id())?;
    let data = featurize(records, provider, k)?;
    if data.features.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "none of the {} records could be aligned to a word",
            records.len()
        )));
    }
    let predictions = data
        .features
        .iter()
        .map(|x| model.classify(x).map(|p| p.label))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        report: f1_scores(&predictions, &data.labels)?,
        skipped: data.skipped,
    })
}
