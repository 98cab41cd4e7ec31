//! Acceptance criteria for the numeral claim detector, one line per criterion.
//!
//! Run with `cargo test -p fincat --test acceptance`. The FinNum-3 check runs
//! only when `FINCAT_FINNUM3_TRAIN` and `FINCAT_FINNUM3_VAL` point at JSONL
//! files and either `FINCAT_FINNUM3_CACHE` (embedding TSV) or
//! `FINCAT_EMBED_ENDPOINT` is set.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fincat_core::classifier::{self, load_model, loss_and_gradient, save_model, TrainConfig};
use fincat_core::embedding::{CachedEmbedder, HashedEmbedder, RemoteEmbedder, DEFAULT_TIMEOUT};
use fincat_core::evaluation::{evaluate, f1_scores, featurize, load_dataset, EvalReport};
use fincat_core::extract::{context_window, find_numerals, tokenize};
use fincat_core::{synthetic, Analyzer, ClaimLabel, EmbeddingProvider, EmbeddingVector, LogisticModel};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

const WORDS: &[&str] = &[
    "revenue", "grew", "to", "the", "will", "expects", "Q3", "margin", "billion", "收入", "利益", "ümsatz", "-", "&",
];
const NUMERIC: &[&str] = &[
    "12%",
    "$4.5",
    "FY2021",
    "3.2x",
    "1,000",
    "(7)",
    "１２％",
    "٣٤",
    "९९",
    "v2",
    "4Q",
];
// Numeric-looking but not decimal digits.
const LOOKALIKES: &[&str] = &["½", "²", "Ⅻ", "①", "three", "%", "$"];
const SPACES: &[&str] = &[" ", "  ", "\t", "\n", "\u{3000}", "\u{a0}", " \r\n "];

fn random_text(rng: &mut ChaCha8Rng, max_parts: usize) -> String {
    let mut s = String::new();
    if rng.random_bool(0.2) {
        s.push_str(SPACES.choose(rng).unwrap());
    }
    for _ in 0..rng.random_range(0..=max_parts) {
        let pool = match rng.random_range(0..10) {
            0..=4 => WORDS,
            5..=7 => NUMERIC,
            _ => LOOKALIKES,
        };
        s.push_str(pool.choose(rng).unwrap());
        if rng.random_bool(0.15) {
            // glue a second piece on without a separator
            s.push_str(NUMERIC.choose(rng).unwrap());
        }
        s.push_str(SPACES.choose(rng).unwrap());
    }
    s
}

/// Digits of the scripts the generator draws from.
fn oracle_digit(c: char) -> bool {
    c.is_ascii_digit() || ('０'..='９').contains(&c) || ('٠'..='٩').contains(&c) || ('०'..='९').contains(&c)
}

fn numeral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let texts: Vec<String> = (0..1000).map(|_| random_text(&mut rng, 25)).collect();
    let started = Instant::now();
    let mut mismatches = 0;
    let mut total = 0;
    for text in &texts {
        let got: Vec<(String, usize, usize)> = find_numerals(&tokenize(text))
            .into_iter()
            .map(|m| (m.token.surface, m.token.char_start, m.token.char_end))
            .collect();

        let mut expected = Vec::new();
        let mut run: Option<(usize, String)> = None;
        for (i, c) in text.chars().chain([' ']).enumerate() {
            if c.is_whitespace() {
                if let Some((start, word)) = run.take() {
                    if word.chars().any(oracle_digit) {
                        expected.push((word, start, i));
                    }
                }
            } else {
                run.get_or_insert((i, String::new())).1.push(c);
            }
        }
        total += expected.len();
        if got != expected {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(1),
        format!("{mismatches} discrepancies over 1000 strings ({total} numerals), {elapsed:.1?}"),
    )
}

fn window_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut failures = 0;
    let mut triples = 0;
    while triples < 500 {
        let text = random_text(&mut rng, 40);
        let tokens = tokenize(&text);
        let mentions = find_numerals(&tokens);
        let Some(m) = mentions.choose(&mut rng) else { continue };
        let k = rng.random_range(0..=6);
        triples += 1;
        let Ok(w) = context_window(&tokens, m, k) else {
            failures += 1;
            continue;
        };
        let i = m.token.word_index;
        let lo = i.saturating_sub(k);
        let hi = (i + k).min(tokens.len() - 1);
        let ok = !w.words.is_empty()
            && w.words.len() <= 2 * k + 1
            && w.words.windows(2).all(|p| p[1].word_index == p[0].word_index + 1)
            && w.words[w.numeral_pos] == m.token
            && w.words[..] == tokens[lo..=hi];
        if !ok {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures} failures over {triples} triples"))
}

fn naive_loss(xs: &[Vec<f64>], ys: &[ClaimLabel], w: &[f64], b: f64, l2: f64) -> f64 {
    let mut total = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        total += match y {
            ClaimLabel::InClaim => (-z).exp().ln_1p(),
            ClaimLabel::OutOfClaim => z.exp().ln_1p(),
        };
    }
    total / xs.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-5;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=8);
        let n = rng.random_range(1..=32);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<ClaimLabel> = (0..n)
            .map(|_| ClaimLabel::from_bit(rng.random_range(0..2)).unwrap())
            .collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let l2 = rng.random_range(0.0..0.1);
        let features: Vec<EmbeddingVector> = xs.iter().map(|x| EmbeddingVector::new(x.clone()).unwrap()).collect();
        let g = loss_and_gradient(&w, b, &features, &ys, l2).unwrap();

        let mut numeric = Vec::with_capacity(dim + 1);
        for j in 0..dim {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[j] += h;
            minus[j] -= h;
            numeric.push((naive_loss(&xs, &ys, &plus, b, l2) - naive_loss(&xs, &ys, &minus, b, l2)) / (2.0 * h));
        }
        numeric.push((naive_loss(&xs, &ys, &w, b + h, l2) - naive_loss(&xs, &ys, &w, b - h, l2)) / (2.0 * h));
        let analytic = g.grad_w.iter().chain([&g.grad_b]);
        let mut bad = false;
        for (a, fd) in analytic.zip(&numeric) {
            // Relative to the larger magnitude, floored so that near-zero
            // partials are not judged on finite-difference noise alone.
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
            bad |= rel >= 1e-6;
        }
        failures += bad as usize;
    }
    check(
        failures == 0,
        format!("{failures} of 50 instances off, worst relative error {worst:.2e}"),
    )
}

fn separable_training() -> Outcome {
    let xs = vec![
        EmbeddingVector::new(vec![1.0]).unwrap(),
        EmbeddingVector::new(vec![-1.0]).unwrap(),
    ];
    let ys = vec![ClaimLabel::InClaim, ClaimLabel::OutOfClaim];
    let id = fincat_core::EmbedderId::Cached { dim: 1 };
    let (model, history) = classifier::train_traced(&xs, &ys, id, &TrainConfig::default()).unwrap();
    let p_pos = model.score(&xs[0]).unwrap();
    let p_neg = model.score(&xs[1]).unwrap();
    let monotone = history.windows(2).all(|w| w[1] <= w[0]);
    check(
        p_pos > 0.5 && 0.5 > p_neg && monotone,
        format!(
            "p(+1)={p_pos:.4} p(-1)={p_neg:.4}, {} epochs, loss non-increasing: {monotone}",
            model.train_meta.epochs_run
        ),
    )
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(1..=120);
        // Vary the class balance, including one-class extremes.
        let p_gold = [0.0, 0.1, 0.5, 0.9, 1.0][case % 5];
        let flip = rng.random_range(0.0..0.6);
        let gold: Vec<bool> = (0..n).map(|_| rng.random_bool(p_gold)).collect();
        let pred: Vec<bool> = gold
            .iter()
            .map(|&g| if rng.random_bool(flip) { !g } else { g })
            .collect();
        let as_labels = |v: &[bool]| {
            v.iter()
                .map(|&b| ClaimLabel::from_bit(b as u8).unwrap())
                .collect::<Vec<_>>()
        };
        let r = f1_scores(&as_labels(&pred), &as_labels(&gold)).unwrap();

        // Precision/recall form, computed from scratch per class.
        let class_f1 = |positive: bool| {
            let tp = pred
                .iter()
                .zip(&gold)
                .filter(|(p, g)| **p == positive && **g == positive)
                .count() as f64;
            let pp = pred.iter().filter(|p| **p == positive).count() as f64;
            let ap = gold.iter().filter(|g| **g == positive).count() as f64;
            let precision = if pp > 0.0 { tp / pp } else { 0.0 };
            let recall = if ap > 0.0 { tp / ap } else { 0.0 };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        };
        let f_in = class_f1(true);
        let f_out = class_f1(false);
        let macro_f1 = (f_in + f_out) / 2.0;
        let accuracy = pred.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / n as f64;
        // Pooled over both classes every item is a TP for exactly one of them.
        let micro_f1 = accuracy;

        let diffs = [
            (r.per_class_f1.in_claim - f_in).abs(),
            (r.per_class_f1.out_of_claim - f_out).abs(),
            (r.f1_macro - macro_f1).abs(),
            (r.f1_micro - micro_f1).abs(),
        ];
        let d = diffs.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(d);
        if d > 1e-12 || (r.f1_micro - accuracy).abs() > 1e-12 {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("{failures} of 200 cases off, worst difference {worst:.1e}"),
    )
}

struct Run {
    model_json: String,
    report: EvalReport,
    model: LogisticModel,
    train_time: Duration,
}

fn synthetic_run() -> Run {
    let provider = HashedEmbedder::new(768, 0).unwrap();
    let started = Instant::now();
    let train = synthetic::generate(2000, 0);
    let val = synthetic::generate(400, 1);
    let data = featurize(&train, &provider, 6).unwrap();
    let model = classifier::train(&data.features, &data.labels, provider.id(), &TrainConfig::default()).unwrap();
    let report = evaluate(&model, &provider, &val, 6).unwrap().report;
    Run {
        model_json: model.to_json().unwrap(),
        report,
        model,
        train_time: started.elapsed(),
    }
}

fn synthetic_end_to_end(run: &Run) -> Outcome {
    let r = &run.report;
    check(
        r.f1_macro >= 0.95 && run.train_time < Duration::from_secs(60),
        format!(
            "validation macro F1 {:.4} (micro {:.4}) on {} records, {} epochs, {:.1?}",
            r.f1_macro, r.f1_micro, r.n, run.model.train_meta.epochs_run, run.train_time
        ),
    )
}

fn determinism(a: &Run, b: &Run) -> Outcome {
    let same_model = a.model_json == b.model_json;
    let report_json = |r: &EvalReport| serde_json::to_string(r).unwrap();
    let same_report = report_json(&a.report) == report_json(&b.report);
    check(
        same_model && same_report,
        format!("model files identical: {same_model}, reports identical: {same_report}"),
    )
}

fn round_trip(model: &LogisticModel) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut differing = 0;
    for _ in 0..100 {
        let x = EmbeddingVector::new((0..model.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        if model.score(&x).unwrap().to_bits() != back.score(&x).unwrap().to_bits() {
            differing += 1;
        }
    }
    check(
        differing == 0,
        format!("{differing} of 100 scores differ after save/load"),
    )
}

fn latency(model: &LogisticModel) -> Outcome {
    let analyzer = Analyzer::new(model.clone(), HashedEmbedder::new(768, 0).unwrap(), 6).unwrap();
    let words = common::SAMPLE.split_whitespace().count();
    let rows = analyzer.analyze(common::SAMPLE).unwrap().rows.len();
    let mut times: Vec<Duration> = (0..100)
        .map(|_| {
            let started = Instant::now();
            analyzer.analyze(common::SAMPLE).unwrap();
            started.elapsed()
        })
        .collect();
    times.sort();
    let worst = *times.last().unwrap();
    check(
        words == 18 && rows == 2 && worst < Duration::from_millis(10),
        format!(
            "{words} words, {rows} rows, median {:.1?}, worst {worst:.1?} over 100 runs",
            times[50]
        ),
    )
}

fn service_contract() -> Outcome {
    let srv = common::fixture_service();
    let agent = common::agent();
    let expected_fp = load_model(&common::fixture("model.json")).unwrap().fingerprint();
    let mut problems = Vec::new();

    let mut resp = agent.get(srv.url("/health")).call().unwrap();
    let health: Value = resp.body_mut().read_json().unwrap();
    if resp.status() != 200 || health != json!({"status": "ok", "model": expected_fp}) {
        problems.push(format!("health {} {health}", resp.status()));
    }

    let mut resp = agent
        .post(srv.url("/analyze"))
        .send(json!({ "text": common::SAMPLE }).to_string())
        .unwrap();
    let mut body: Value = resp.body_mut().read_json().unwrap();
    let elapsed_ok = body
        .as_object_mut()
        .and_then(|o| o.remove("elapsed_ms"))
        .is_some_and(|v| v.is_u64());
    let golden: Value = serde_json::from_str(include_str!("fixtures/analyze_golden.json")).unwrap();
    if resp.status() != 200 || !elapsed_ok || body != golden {
        problems.push(format!("analyze {} {body}", resp.status()));
    }

    for bad in ["", "{\"text\":", "{\"words\":[]}"] {
        let mut resp = agent.post(srv.url("/analyze")).send(bad).unwrap();
        let err: Value = resp.body_mut().read_json().unwrap_or(Value::Null);
        if resp.status() != 400 || !err["error"].is_string() {
            problems.push(format!("{bad:?} gave {} {err}", resp.status()));
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            "health, golden analyze and 3 malformed bodies as expected".into()
        } else {
            problems.join("; ")
        },
    )
}

fn finnum3() -> Outcome {
    let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
    let (Some(train), Some(val)) = (var("FINCAT_FINNUM3_TRAIN"), var("FINCAT_FINNUM3_VAL")) else {
        return Skip("set FINCAT_FINNUM3_TRAIN and FINCAT_FINNUM3_VAL to run".into());
    };
    let dim = var("FINCAT_FINNUM3_DIM").and_then(|d| d.parse().ok()).unwrap_or(768);
    let provider: Box<dyn EmbeddingProvider> = if let Some(cache) = var("FINCAT_FINNUM3_CACHE") {
        match CachedEmbedder::open(&PathBuf::from(cache)) {
            Ok(p) => Box::new(p),
            Err(e) => return Fail(e.to_string()),
        }
    } else if let Some(endpoint) = var("FINCAT_EMBED_ENDPOINT") {
        Box::new(RemoteEmbedder::new(endpoint, dim, DEFAULT_TIMEOUT))
    } else {
        return Skip("needs FINCAT_FINNUM3_CACHE or FINCAT_EMBED_ENDPOINT".into());
    };
    let run = || -> fincat_core::Result<EvalReport> {
        let train = load_dataset(&PathBuf::from(train))?;
        let val = load_dataset(&PathBuf::from(val))?;
        let data = featurize(&train, &provider, 6)?;
        let model = classifier::train(&data.features, &data.labels, provider.id(), &TrainConfig::default())?;
        Ok(evaluate(&model, &provider, &val, 6)?.report)
    };
    match run() {
        Ok(r) => check(
            r.f1_macro >= 0.78,
            format!(
                "validation macro F1 {:.4}, micro {:.4} on {} records",
                r.f1_macro, r.f1_micro, r.n
            ),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

fn main() -> ExitCode {
    let first = synthetic_run();
    let second = synthetic_run();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("numeral rule vs character-scan oracle", numeral_oracle()),
        ("context window law", window_law()),
        ("gradient vs finite differences", gradient_check()),
        ("separable training", separable_training()),
        ("F1 vs independent formula", metric_oracle()),
        ("synthetic corpus end to end", synthetic_end_to_end(&first)),
        ("determinism", determinism(&first, &second)),
        ("model file round trip", round_trip(&first.model)),
        ("analyze latency", latency(&first.model)),
        ("service contract", service_contract()),
        ("FinNum-3 validation (conditional)", finnum3()),
    ];

    let mut failed = 0;
    for (name, outcome) in &criteria {
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail}");
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
