//! Token frequencies of free-text explanations and their overlap with the
//! questionnaire's item wording.
//!
//! Alphabetic scripts (and Hangul) are split on whitespace and punctuation and
//! lowercased. Han, Hiragana and Katakana are counted one codepoint per token,
//! which is crude but needs no segmentation dictionary.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::questionnaire::{Factor, QuestionnaireBank};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextStatsError {
    #[error("frequency table is empty")]
    EmptyTable,
}

/// Han ideographs, Hiragana and Katakana.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9D
        | 0x20000..=0x2FA1F)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '’' || c == '\u{00B7}'
}

/// Lowercased word tokens; CJK characters become single-codepoint tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        let t = current.trim_matches(|c| c == '\'' || c == '’' || c == '\u{00B7}');
        if !t.is_empty() {
            tokens.push(t.to_string());
        }
        current.clear();
    };
    for c in text.chars() {
        if is_cjk(c) {
            flush(&mut current, &mut tokens);
            tokens.push(c.to_string());
        } else if is_word_char(c) {
            current.extend(c.to_lowercase());
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Length of a text in tokens: whitespace-delimited units, with every CJK
/// codepoint counted on its own.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace()
        .map(|chunk| {
            let cjk = chunk.chars().filter(|&c| is_cjk(c)).count();
            let rest = chunk.chars().any(|c| !is_cjk(c));
            cjk + usize::from(rest)
        })
        .sum()
}

const STOP_EN: &[&str] = &[
    "a", "an", "the", "i", "i'm", "me", "my", "myself", "am", "is", "are", "be", "been", "was", "to", "and", "or", "of", "in",
    "on", "at", "for", "with", "that", "this", "it", "as", "so", "but", "not", "very", "see", "rate", "because",
    "agree", "disagree", "strongly", "moderately", "slightly", "little", "neither", "nor",
];
const STOP_DE: &[&str] = &[
    "ich", "mich", "mir", "mein", "meine", "bin", "ist", "sind", "sein", "der", "die", "das", "den", "dem", "ein", "eine",
    "einen", "und", "oder", "zu", "in", "mit", "für", "dass", "es", "sehr", "nicht", "weil", "stimme", "zu", "lehne",
    "ab", "stark", "eher", "weder", "noch",
];
const STOP_ES: &[&str] = &[
    "yo", "me", "mi", "soy", "es", "son", "el", "la", "los", "las", "un", "una", "y", "o", "de", "del", "en", "con", "que",
    "por", "para", "muy", "no", "porque", "acuerdo", "desacuerdo", "totalmente", "moderadamente", "poco", "ni",
];
const STOP_FR: &[&str] = &[
    "je", "me", "moi", "mon", "ma", "mes", "suis", "est", "sont", "le", "la", "les", "l", "un", "une", "et", "ou", "de",
    "du", "des", "en", "avec", "que", "qui", "pour", "très", "pas", "ne", "parce", "d'accord", "désaccord", "fortement",
    "modérément", "peu", "ni",
];
const STOP_CA: &[&str] = &[
    "jo", "em", "el", "la", "els", "les", "un", "una", "i", "o", "de", "del", "en", "amb", "que", "per", "molt", "no",
    "sóc", "és", "són", "perquè", "acord", "desacord", "totalment", "moderadament", "poc", "ni",
];

/// Built-in stoplist for a language tag; empty for languages without one.
pub fn default_stoplist(language: &str) -> BTreeSet<String> {
    let words: &[&str] = match language {
        "en" => STOP_EN,
        "de" => STOP_DE,
        "es" => STOP_ES,
        "fr" => STOP_FR,
        "ca" => STOP_CA,
        _ => &[],
    };
    words.iter().map(|w| w.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub language: String,
    pub factor: Factor,
    /// Sorted by count descending, then token ascending.
    pub entries: Vec<(String, usize)>,
}

impl FrequencyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("token,count\n");
        for (token, count) in &self.entries {
            let escaped = if token.contains([',', '"']) {
                format!("\"{}\"", token.replace('"', "\"\""))
            } else {
                token.clone()
            };
            out.push_str(&format!("{escaped},{count}\n"));
        }
        out
    }
}

pub fn token_frequencies<S: AsRef<str>>(
    explanations: &[S],
    language: &str,
    factor: Factor,
    stoplist: &BTreeSet<String>,
) -> FrequencyTable {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in explanations {
        for token in tokenize(text.as_ref()) {
            if !stoplist.contains(&token) {
                *counts.entry(token).or_default() += 1;
            }
        }
    }
    let mut entries: Vec<(String, usize)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    FrequencyTable {
        language: language.to_string(),
        factor,
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOverlap {
    /// Fraction of the considered tokens that occur in the factor's item texts.
    pub fraction: f64,
    pub requested: usize,
    pub considered: usize,
    /// Set when the table had fewer than `requested` tokens.
    pub truncated: bool,
}

pub fn item_overlap(table: &FrequencyTable, bank: &QuestionnaireBank, top_n: usize) -> Result<ItemOverlap, TextStatsError> {
    if table.entries.is_empty() || top_n == 0 {
        return Err(TextStatsError::EmptyTable);
    }
    let item_words: BTreeSet<String> = bank.factor_texts(table.factor).flat_map(tokenize).collect();
    let considered = top_n.min(table.entries.len());
    let hits = table.entries[..considered]
        .iter()
        .filter(|(token, _)| item_words.contains(token))
        .count();
    Ok(ItemOverlap {
        fraction: hits as f64 / considered as f64,
        requested: top_n,
        considered,
        truncated: considered < top_n,
    })
}
