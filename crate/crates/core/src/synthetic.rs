//! Templated financial sentences with rule-determined labels.
//!
//! Each record is one statement such as "The firm expects free cash flow of
//! $4.5 next quarter". A target numeral is in-claim exactly when a
//! forward-looking keyword sits inside its context window. Some sentences get
//! a leading clause whose own verb, possibly a keyword, lies outside the
//! target's window, so a model has to use position and not mere presence.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::ClaimLabel;
use crate::evaluation::DatasetRecord;
use crate::extract::DEFAULT_WINDOW;

pub const FORWARD_KEYWORDS: [&str; 3] = ["expects", "will", "targets"];

const SUBJECTS: &[&str] = &["The company", "Management", "The board", "Our group", "The firm"];
const FACT_VERBS: &[&str] = &["reported", "posted", "recorded", "delivered"];
const METRICS: &[&str] = &[
    "revenue",
    "net income",
    "operating margin",
    "EPS",
    "free cash flow",
    "sales growth",
];
const PREPOSITIONS: &[&str] = &["of", "at", "near"];
const TIMEFRAMES: &[&str] = &[
    "this year",
    "next quarter",
    "in the period",
    "for fiscal year",
    "over time",
];
const TAILS: &[&str] = &[
    "according to the filing",
    "as noted in the release",
    "despite weak demand",
    "amid strong demand",
    "in its segment",
];

fn random_numeral<R: Rng>(rng: &mut R) -> String {
    match rng.random_range(0..9) {
        0 => format!("{}%", rng.random_range(1..100)),
        1 => format!("${}.{}", rng.random_range(1..50), rng.random_range(0..10)),
        2 => format!("{}", rng.random_range(1990..2031)),
        3 => format!("{}.{}x", rng.random_range(1..10), rng.random_range(0..10)),
        4 => format!("{},{:03}", rng.random_range(1..100), rng.random_range(0..1000)),
        5 => format!("Q{}", rng.random_range(1..5)),
        6 => format!("FY{}", rng.random_range(2015..2031)),
        7 => format!("${}M", rng.random_range(10..1000)),
        _ => format!("{}.{}%", rng.random_range(0..20), rng.random_range(0..10)),
    }
}

fn push_phrase(words: &mut Vec<String>, phrase: &str) {
    words.extend(phrase.split(' ').map(str::to_string));
}

/// `subject verb metric preposition NUMERAL`; returns the numeral's index.
fn clause<R: Rng>(rng: &mut R, words: &mut Vec<String>, verb: &str) -> usize {
    push_phrase(words, SUBJECTS.choose(rng).unwrap());
    words.push(verb.to_string());
    push_phrase(words, METRICS.choose(rng).unwrap());
    words.push(PREPOSITIONS.choose(rng).unwrap().to_string());
    words.push(random_numeral(rng));
    words.len() - 1
}

/// Label a target at `target` by the keyword rule with half-width `k`.
pub fn rule_label<S: AsRef<str>>(words: &[S], target: usize, k: usize) -> ClaimLabel {
    let lo = target.saturating_sub(k);
    let hi = (target + k).min(words.len().saturating_sub(1));
    let hit = (lo..=hi)
        .filter(|&i| i != target)
        .any(|i| FORWARD_KEYWORDS.contains(&words[i].as_ref()));
    if hit {
        ClaimLabel::InClaim
    } else {
        ClaimLabel::OutOfClaim
    }
}

fn pick_verb<R: Rng>(rng: &mut R) -> &'static str {
    if rng.random_bool(0.5) {
        FORWARD_KEYWORDS.choose(rng).unwrap()
    } else {
        FACT_VERBS.choose(rng).unwrap()
    }
}

/// `n` records, each with one target numeral, reproducible from `seed`.
pub fn generate(n: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut words = Vec::new();
            if rng.random_bool(0.4) {
                let verb = pick_verb(&mut rng);
                clause(&mut rng, &mut words, verb);
                words.push("and".to_string());
            }
            let verb = pick_verb(&mut rng);
            let target = clause(&mut rng, &mut words, verb);
            push_phrase(&mut words, TIMEFRAMES.choose(&mut rng).unwrap());
            if rng.random_bool(0.5) {
                push_phrase(&mut words, TAILS.choose(&mut rng).unwrap());
            }

            let label = rule_label(&words, target, DEFAULT_WINDOW);
            let start: usize = words[..target].iter().map(|w| w.chars().count() + 1).sum();
            let end = start + words[target].chars().count();
            DatasetRecord {
                record_id: format!("syn{seed}-{i}"),
                paragraph: words.join(" "),
                target_offset_start: start,
                target_offset_end: end,
                label,
            }
        })
        .collect()
}
