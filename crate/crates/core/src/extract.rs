//! Whitespace tokenization, numeral detection and context windows.
//!
//! A "word" is a maximal run of non-whitespace characters. Punctuation stays
//! attached, so `$4.5`, `12%,` and `FY2021` are single words. All offsets are
//! counted in Unicode scalar values, not bytes.

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategory, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Half-width of the context window used throughout the tool.
pub const DEFAULT_WINDOW: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Inclusive character offset.
    pub char_start: usize,
    /// Exclusive character offset.
    pub char_end: usize,
    pub word_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NumeralMention {
    pub token: Token,
    /// 0-based position among the numerals of the text.
    pub mention_id: usize,
}

/// A target numeral and up to `k` words on either side of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub words: Vec<Token>,
    pub numeral_pos: usize,
    pub k: usize,
}

impl ContextWindow {
    pub fn numeral(&self) -> &Token {
        &self.words[self.numeral_pos]
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.surface.as_str()).collect()
    }
}

/// Which characters count as digits when deciding whether a word is a numeral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DigitRule {
    /// Unicode general category `Nd` (includes ASCII `0-9` and full-width digits).
    #[default]
    Unicode,
    /// ASCII `0-9` only.
    Ascii,
}

impl DigitRule {
    pub fn is_digit(self, c: char) -> bool {
        match self {
            DigitRule::Ascii => c.is_ascii_digit(),
            DigitRule::Unicode => c.is_ascii_digit() || c.general_category() == GeneralCategory::DecimalNumber,
        }
    }

    pub fn has_digit(self, s: &str) -> bool {
        s.chars().any(|c| self.is_digit(c))
    }
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let mut offset = 0;
    for c in text.chars() {
        if c.is_whitespace() {
            if let Some((start, surface)) = current.take() {
                push_token(&mut tokens, surface, start, offset);
            }
        } else {
            current.get_or_insert_with(|| (offset, String::new())).1.push(c);
        }
        offset += 1;
    }
    if let Some((start, surface)) = current {
        push_token(&mut tokens, surface, start, offset);
    }
    tokens
}

fn push_token(tokens: &mut Vec<Token>, surface: String, char_start: usize, char_end: usize) {
    let word_index = tokens.len();
    tokens.push(Token {
        surface,
        char_start,
        char_end,
        word_index,
    });
}

/// Every token containing at least one digit, in text order.
pub fn find_numerals(tokens: &[Token]) -> Vec<NumeralMention> {
    find_numerals_with(tokens, DigitRule::default())
}

pub fn find_numerals_with(tokens: &[Token], rule: DigitRule) -> Vec<NumeralMention> {
    tokens
        .iter()
        .filter(|t| rule.has_digit(&t.surface))
        .enumerate()
        .map(|(mention_id, token)| NumeralMention {
            token: token.clone(),
            mention_id,
        })
        .collect()
}

/// Cut the window of `k` words before and after `mention`, truncating silently
/// at the text boundaries.
pub fn context_window(tokens: &[Token], mention: &NumeralMention, k: usize) -> Result<ContextWindow> {
    let idx = mention.token.word_index;
    if tokens.get(idx) != Some(&mention.token) {
        return Err(Error::InvalidArgument(format!(
            "mention {:?} at word {} is not in the token list",
            mention.token.surface, idx
        )));
    }
    let start = idx.saturating_sub(k);
    let end = idx.saturating_add(k).saturating_add(1).min(tokens.len());
    Ok(ContextWindow {
        words: tokens[start..end].to_vec(),
        numeral_pos: idx - start,
        k,
    })
}

/// The token whose character range contains `[start, end)`.
///
/// Spans that straddle whitespace or run past a token are rejected rather
/// than snapped to the nearest word.
pub fn token_covering(tokens: &[Token], start: usize, end: usize) -> Option<&Token> {
    if start >= end {
        return None;
    }
    let i = tokens.partition_point(|t| t.char_end <= start);
    tokens.get(i).filter(|t| t.char_start <= start && end <= t.char_end)
}
