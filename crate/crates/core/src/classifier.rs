//! Logistic regression over context embeddings.
//!
//! Training minimizes mean binary cross-entropy plus `(λ/2)‖w‖²` (the bias is
//! not penalized) with full-batch gradient descent from `w = 0, b = 0`. Unless
//! a learning rate is given, the step is `1/L` for the smoothness constant `L`
//! of the objective, which keeps the loss sequence non-increasing whatever the
//! scale of the embeddings.
//!
//! A numeral is labeled in-claim when its probability is strictly above the
//! model threshold (0.5 by default).

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{EmbedderId, EmbedderKind, EmbeddingVector};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimLabel {
    InClaim,
    OutOfClaim,
}

impl ClaimLabel {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            1 => Some(ClaimLabel::InClaim),
            0 => Some(ClaimLabel::OutOfClaim),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            ClaimLabel::InClaim => 1,
            ClaimLabel::OutOfClaim => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimLabel::InClaim => "in_claim",
            ClaimLabel::OutOfClaim => "out_of_claim",
        }
    }

    fn target(self) -> f64 {
        f64::from(self.as_bit())
    }
}

impl fmt::Display for ClaimLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClaimLabel::InClaim => "in-claim",
            ClaimLabel::OutOfClaim => "out-of-claim",
        })
    }
}

/// Per-class multipliers on the loss terms. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub in_claim: f64,
    pub out_of_claim: f64,
}

impl ClassWeights {
    fn of(&self, label: ClaimLabel) -> f64 {
        match label {
            ClaimLabel::InClaim => self.in_claim,
            ClaimLabel::OutOfClaim => self.out_of_claim,
        }
    }

    /// Inverse class frequency, normalized so the average example weight is 1.
    pub fn balanced(labels: &[ClaimLabel]) -> Option<Self> {
        let n = labels.len() as f64;
        let pos = labels.iter().filter(|l| **l == ClaimLabel::InClaim).count() as f64;
        let neg = n - pos;
        (pos > 0.0 && neg > 0.0).then(|| ClassWeights {
            in_claim: n / (2.0 * pos),
            out_of_claim: n / (2.0 * neg),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    /// `None` picks `1/L` from the data.
    pub learning_rate: Option<f64>,
    pub max_epochs: usize,
    /// Stop once an epoch lowers the loss by less than this.
    pub tolerance: f64,
    /// Recorded in the model; gradient descent from zero is itself
    /// deterministic.
    pub seed: u64,
    pub class_weights: Option<ClassWeights>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1e-4,
            learning_rate: None,
            max_epochs: 2000,
            tolerance: 1e-7,
            seed: 0,
            class_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<ClassWeights>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub embedder: EmbedderId,
    pub train_meta: TrainMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub label: ClaimLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

/// Logistic function, kept strictly inside (0, 1) even where the exact value
/// rounds to 0 or 1.
pub fn sigmoid(t: f64) -> f64 {
    sigmoid_unclamped(t).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn validate(features: &[EmbeddingVector], labels: &[ClaimLabel], dim: usize) -> Result<()> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if let Some(i) = features.iter().position(|x| x.dim() != dim) {
        return Err(Error::InvalidArgument(format!(
            "example {i} has dim {}, expected {dim}",
            features[i].dim()
        )));
    }
    Ok(())
}

/// Regularized mean cross-entropy and its exact gradient at `(weights, bias)`.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: f64,
    features: &[EmbeddingVector],
    labels: &[ClaimLabel],
    l2_lambda: f64,
) -> Result<LossGradient> {
    validate(features, labels, weights.len())?;
    Ok(weighted_loss_and_gradient(
        weights, bias, features, labels, l2_lambda, None,
    ))
}

fn weighted_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    features: &[EmbeddingVector],
    labels: &[ClaimLabel],
    l2_lambda: f64,
    class_weights: Option<ClassWeights>,
) -> LossGradient {
    let n = features.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (x, &label) in features.iter().zip(labels) {
        let c = class_weights.map_or(1.0, |cw| cw.of(label));
        let y = label.target();
        let z = x.dot(weights) + bias;
        loss += c * (softplus(z) - y * z);
        let residual = c * (sigmoid_unclamped(z) - y);
        for (g, xi) in grad_w.iter_mut().zip(x.as_slice()) {
            *g += residual * xi;
        }
        grad_b += residual;
    }
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum();
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2_lambda * w;
    }
    LossGradient {
        loss: loss / n + 0.5 * l2_lambda * sq_norm,
        grad_w,
        grad_b: grad_b / n,
    }
}

fn sigmoid_unclamped(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Lipschitz constant of the loss gradient: `¼·λmax(X̃ᵀCX̃/n) + λ`, where `X̃`
/// is the feature matrix with a column of ones for the bias and `C` holds the
/// class weights. The top eigenvalue comes from power iteration.
pub fn smoothness_bound(
    features: &[EmbeddingVector],
    labels: &[ClaimLabel],
    l2_lambda: f64,
    class_weights: Option<ClassWeights>,
) -> f64 {
    const ITERATIONS: usize = 100;
    let dim = features.first().map_or(0, EmbeddingVector::dim);
    let n = features.len().max(1) as f64;
    let weight = |i: usize| class_weights.map_or(1.0, |cw| cw.of(labels[i]));
    // v = (w, b) direction; start from all ones, deterministic.
    let mut v = vec![1.0 / ((dim + 1) as f64).sqrt(); dim + 1];
    let mut eigen = 0.0;
    for _ in 0..ITERATIONS {
        let mut u = vec![0.0; dim + 1];
        for (i, x) in features.iter().enumerate() {
            let proj = (x.dot(&v[..dim]) + v[dim]) * weight(i) / n;
            for (uj, xj) in u.iter_mut().zip(x.as_slice()) {
                *uj += proj * xj;
            }
            u[dim] += proj;
        }
        let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        eigen = norm;
        v = u.into_iter().map(|a| a / norm).collect();
    }
    0.25 * eigen + l2_lambda
}

/// Fit a model and return it with the loss before training and after every
/// epoch.
pub fn train_traced(
    features: &[EmbeddingVector],
    labels: &[ClaimLabel],
    embedder: EmbedderId,
    config: &TrainConfig,
) -> Result<(LogisticModel, Vec<f64>)> {
    let dim = embedder.dim();
    validate(features, labels, dim)?;
    if !(config.l2_lambda >= 0.0 && config.l2_lambda.is_finite()) {
        return Err(Error::InvalidArgument("l2_lambda must be non-negative".into()));
    }
    let learning_rate = match config.learning_rate {
        Some(lr) if lr > 0.0 && lr.is_finite() => lr,
        Some(lr) => {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {lr}"
            )))
        }
        None => 1.0 / smoothness_bound(features, labels, config.l2_lambda, config.class_weights),
    };

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let lg =
        |w: &[f64], b: f64| weighted_loss_and_gradient(w, b, features, labels, config.l2_lambda, config.class_weights);
    let mut current = lg(&weights, bias);
    let mut history = vec![current.loss];
    let mut epochs_run = 0;

    while epochs_run < config.max_epochs {
        for (w, g) in weights.iter_mut().zip(&current.grad_w) {
            *w -= learning_rate * g;
        }
        bias -= learning_rate * current.grad_b;
        epochs_run += 1;

        let next = lg(&weights, bias);
        let decrease = current.loss - next.loss;
        history.push(next.loss);
        current = next;
        if decrease < config.tolerance {
            break;
        }
    }

    let model = LogisticModel {
        weights,
        bias,
        threshold: DEFAULT_THRESHOLD,
        embedder,
        train_meta: TrainMeta {
            l2_lambda: config.l2_lambda,
            learning_rate,
            epochs_run,
            final_loss: current.loss,
            seed: config.seed,
            class_weights: config.class_weights,
        },
    };
    Ok((model, history))
}

pub fn train(
    features: &[EmbeddingVector],
    labels: &[ClaimLabel],
    embedder: EmbedderId,
    config: &TrainConfig,
) -> Result<LogisticModel> {
    train_traced(features, labels, embedder, config).map(|(m, _)| m)
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn logit(&self, x: &EmbeddingVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "vector has dim {}, model expects {}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// In-claim probability of a vector from an unchecked source.
    pub fn score(&self, x: &EmbeddingVector) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }

    pub fn classify(&self, x: &EmbeddingVector) -> Result<Prediction> {
        self.score(x).map(|p| self.predict_probability(p))
    }

    pub fn predict_probability(&self, probability: f64) -> Prediction {
        let label = if probability > self.threshold {
            ClaimLabel::InClaim
        } else {
            ClaimLabel::OutOfClaim
        };
        Prediction { label, probability }
    }

    /// Refuse vectors from a different embedding space.
    pub fn check_embedder(&self, id: &EmbedderId) -> Result<()> {
        if self.embedder.matches(id) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "model was trained on {} embeddings, got {}",
                self.embedder, id
            )))
        }
    }

    /// Score a vector produced by the embedder `id`.
    pub fn score_from(&self, id: &EmbedderId, x: &EmbeddingVector) -> Result<f64> {
        self.check_embedder(id)?;
        self.score(x)
    }

    pub fn classify_from(&self, id: &EmbedderId, x: &EmbeddingVector) -> Result<Prediction> {
        self.check_embedder(id)?;
        self.classify(x)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.embedder.dim() != self.weights.len() {
            return Err(Error::Model(format!(
                "embedder dim {} does not match {} weights",
                self.embedder.dim(),
                self.weights.len()
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Model(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Model("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Canonical JSON: keys sorted, floats in shortest round-trip form.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut json = canonical_json(&ModelFile::from(self))?;
        json.push('\n');
        Ok(json)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("malformed JSON: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Model(format!(
                    "unsupported format_version {v} (this build reads version {FORMAT_VERSION}); \
                     upgrade fincat to load it"
                )))
            }
            None => return Err(Error::Model("missing format_version".into())),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))?;
        if file.weights.len() != file.dim {
            return Err(Error::Model(format!(
                "dim is {} but {} weights are stored",
                file.dim,
                file.weights.len()
            )));
        }
        let model = LogisticModel {
            weights: file.weights,
            bias: file.bias,
            threshold: file.threshold,
            embedder: file.embedder.into_id()?,
            train_meta: file.train_meta,
        };
        model.validate()?;
        Ok(model)
    }

    /// Stable short identifier of the canonical serialization.
    pub fn fingerprint(&self) -> String {
        let json = canonical_json(&ModelFile::from(self)).unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Compact JSON with object keys sorted at every depth.
fn canonical_json(file: &ModelFile) -> Result<String> {
    // serde_json's map is ordered by key unless `preserve_order` is enabled.
    let value = serde_json::to_value(file).map_err(|e| Error::Model(e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| Error::Model(e.to_string()))
}

pub fn save_model(model: &LogisticModel, path: &Path) -> Result<()> {
    let json = model.to_json()?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LogisticModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LogisticModel::from_json(&text).map_err(|e| match e {
        Error::Model(msg) => Error::Model(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    bias: f64,
    dim: usize,
    embedder: EmbedderRecord,
    format_version: u32,
    threshold: f64,
    train_meta: TrainMeta,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EmbedderRecord {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endpoint: Option<String>,
    kind: EmbedderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl EmbedderRecord {
    fn into_id(self) -> Result<EmbedderId> {
        Ok(match self.kind {
            EmbedderKind::Hashed => EmbedderId::Hashed {
                dim: self.dim,
                seed: self
                    .seed
                    .ok_or_else(|| Error::Model("hashed embedder without seed".into()))?,
            },
            EmbedderKind::Remote => EmbedderId::Remote {
                dim: self.dim,
                endpoint: self.endpoint.unwrap_or_default(),
            },
            EmbedderKind::Cached => EmbedderId::Cached { dim: self.dim },
        })
    }
}

impl From<&LogisticModel> for ModelFile {
    fn from(m: &LogisticModel) -> Self {
        let (endpoint, seed) = match &m.embedder {
            EmbedderId::Hashed { seed, .. } => (None, Some(*seed)),
            EmbedderId::Remote { endpoint, .. } => (Some(endpoint.clone()), None),
            EmbedderId::Cached { .. } => (None, None),
        };
        ModelFile {
            bias: m.bias,
            dim: m.weights.len(),
            embedder: EmbedderRecord {
                dim: m.embedder.dim(),
                endpoint,
                kind: m.embedder.kind(),
                seed,
            },
            format_version: FORMAT_VERSION,
            threshold: m.threshold,
            train_meta: m.train_meta.clone(),
            weights: m.weights.clone(),
        }
    }
}
