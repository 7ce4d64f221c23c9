//! Normalizes free-form replies into ten item ratings and optional explanations,
//! then applies the exclusion rules.
//!
//! Replies arrive in many layouts: the rating before the explanation, after it,
//! inside brackets, after a colon, or with the item label repeated. The extractor
//! splits the reply on line-initial item numbers, takes the first standalone
//! integer of each item's text as its rating and keeps the rest as explanation.
//! Full-width ASCII forms (common in CJK replies) are folded to ASCII first.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::questionnaire::{QuestionnaireBank, ITEM_COUNT};
use crate::transcript::RawTranscript;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    /// Ratings by item (index 0 is item 1). Range is not enforced here.
    pub ratings: [Option<i32>; ITEM_COUNT],
    pub explanations: [Option<String>; ITEM_COUNT],
    /// Text that could not be attributed to a rated item.
    pub residue: String,
}

impl ParsedResponse {
    pub fn from_ratings(ratings: [i32; ITEM_COUNT]) -> Self {
        ParsedResponse {
            ratings: ratings.map(Some),
            ..Default::default()
        }
    }

    /// All ten ratings, if every item was rated.
    pub fn complete_ratings(&self) -> Option<[i32; ITEM_COUNT]> {
        let mut out = [0; ITEM_COUNT];
        for (slot, r) in out.iter_mut().zip(&self.ratings) {
            *slot = (*r)?;
        }
        Some(out)
    }

    pub fn has_explanation(&self) -> bool {
        self.explanations.iter().any(Option::is_some)
    }

    /// Canonical one-line-per-item layout, `"<i>. <rating> - <explanation>"`.
    pub fn to_canonical(&self) -> String {
        let mut lines = Vec::with_capacity(ITEM_COUNT);
        for i in 0..ITEM_COUNT {
            let mut line = format!("{}.", i + 1);
            if let Some(r) = self.ratings[i] {
                line.push_str(&format!(" {r}"));
            }
            if let Some(e) = &self.explanations[i] {
                line.push_str(&format!(" - {e}"));
            }
            lines.push(line);
        }
        lines.join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValidityReason {
    Ok,
    IncompleteItems,
    OutOfScale,
    NumberingConfusion,
    ArbitraryAllIdentical,
    ArbitraryAllExtremes,
    ArbitraryAllMiddle,
    ArbitraryZigzag,
}

impl ValidityReason {
    pub const ALL: [ValidityReason; 8] = [
        ValidityReason::Ok,
        ValidityReason::IncompleteItems,
        ValidityReason::OutOfScale,
        ValidityReason::NumberingConfusion,
        ValidityReason::ArbitraryAllIdentical,
        ValidityReason::ArbitraryAllExtremes,
        ValidityReason::ArbitraryAllMiddle,
        ValidityReason::ArbitraryZigzag,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub reason: ValidityReason,
}

impl From<ValidityReason> for ValidityVerdict {
    fn from(reason: ValidityReason) -> Self {
        ValidityVerdict {
            valid: reason == ValidityReason::Ok,
            reason,
        }
    }
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?m)^[\t ]*[*#]*[\t ]*(\d{1,2})[\t ]*[.)。][*]*").expect("marker regex")
    })
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+").expect("number regex"))
}

fn fold_fullwidth(raw: &str) -> String {
    raw.chars()
        .map(|c| match c {
            '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
            '\u{3000}' => ' ',
            _ => c,
        })
        .collect()
}

/// Finds the first integer that stands on its own: not glued to letters or other
/// digits, not a decimal, not a percentage.
fn find_rating(segment: &str) -> Option<(usize, usize, i32)> {
    for m in number_re().find_iter(segment) {
        let before = segment[..m.start()].chars().next_back();
        let mut rest = segment[m.end()..].chars();
        let after = rest.next();
        if before.is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        if after.is_some_and(|c| c.is_alphabetic() || c == '%') {
            continue;
        }
        if before == Some('.') && segment[..m.start() - 1].chars().next_back().is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        if matches!(after, Some('.') | Some(',')) && rest.next().is_some_and(|c| c.is_ascii_digit()) {
            continue;
        }
        if m.as_str().len() > 2 {
            continue;
        }
        let value = m.as_str().parse().ok()?;
        return Some((m.start(), m.end(), value));
    }
    None
}

fn is_trim_char(c: char) -> bool {
    c.is_whitespace() || matches!(c, ':' | '-' | '\u{2013}' | '\u{2014}' | '=' | '(' | ')' | '[' | ']' | '_' | '*' | '|' | '>' | ',' | ';')
}

fn trim_separators(s: &str) -> &str {
    s.trim_matches(is_trim_char)
}

/// Strips `label` (compared on lowercase alphanumerics only) from the start of `s`.
/// Returns `None` when `s` does not start with the label at a word boundary. With
/// `needs_separator`, the label must also be followed by punctuation or the end,
/// so an explanation that merely starts with the label's first word is kept.
fn strip_label<'a>(s: &'a str, label: &str, needs_separator: bool) -> Option<&'a str> {
    let mut wanted = label.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).peekable();
    wanted.peek()?;
    let mut end = 0;
    for (pos, c) in s.char_indices() {
        if wanted.peek().is_none() {
            break;
        }
        if !c.is_alphanumeric() {
            continue;
        }
        for lc in c.to_lowercase() {
            if wanted.next() != Some(lc) {
                return None;
            }
        }
        end = pos + c.len_utf8();
    }
    if wanted.peek().is_some() {
        return None;
    }
    let rest = &s[end..];
    if rest.chars().next().is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    if needs_separator && rest.trim_start().chars().next().is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    Some(rest)
}

fn strip_item_label<'a>(s: &'a str, item_text: &str) -> &'a str {
    let first_phrase = item_text.split([',', '、', '，']).next().unwrap_or(item_text);
    strip_label(s, item_text, false)
        .or_else(|| strip_label(s, first_phrase, true))
        .unwrap_or(s)
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rating and explanation of one item's text.
fn parse_segment(segment: &str, item_text: &str) -> Option<(i32, Option<String>)> {
    let (start, end, rating) = find_rating(segment)?;
    let before = trim_separators(&segment[..start]);
    let before = trim_separators(strip_item_label(before, item_text));

    let mut after = trim_separators(&segment[end..]);
    // "6/7" or "6 / 7"
    if let Some(rest) = after.strip_prefix('/') {
        let rest = rest.trim_start();
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 {
            after = trim_separators(&rest[digits..]);
        }
    }
    let after = trim_separators(strip_item_label(after, item_text));

    let parts: Vec<String> = [before, after]
        .into_iter()
        .map(collapse_whitespace)
        .filter(|p| p.chars().any(char::is_alphanumeric))
        .collect();
    let explanation = (!parts.is_empty()).then(|| parts.join(" "));
    Some((rating, explanation))
}

/// Extracts item ratings and explanations from a raw reply. Never fails: items
/// that cannot be read stay absent and their text goes to the residue.
pub fn extract_ratings(raw: &str, bank: &QuestionnaireBank) -> ParsedResponse {
    let text = fold_fullwidth(raw);
    let markers: Vec<(usize, usize, u8)> = marker_re()
        .captures_iter(&text)
        .filter_map(|c| {
            let whole = c.get(0)?;
            let n: u8 = c[1].parse().ok()?;
            (1..=ITEM_COUNT as u8).contains(&n).then_some((whole.start(), whole.end(), n))
        })
        .collect();

    let mut out = ParsedResponse::default();
    if markers.is_empty() {
        out.residue = raw.to_string();
        return out;
    }

    let mut segments: Vec<(Option<u8>, &str)> = Vec::with_capacity(markers.len() + 1);
    let preamble = &text[..markers[0].0];
    // The prompt ends with "1." so a reply often starts with item 1's content.
    let preamble_item = (markers[0].2 != 1 && !preamble.trim().is_empty()).then_some(1);
    segments.push((preamble_item, preamble));
    for (k, &(_, body_start, n)) in markers.iter().enumerate() {
        let body_end = markers.get(k + 1).map_or(text.len(), |m| m.0);
        segments.push((Some(n), &text[body_start..body_end]));
    }

    let mut residue: Vec<String> = Vec::new();
    for (item, segment) in segments {
        let parsed = item.and_then(|n| {
            let slot = usize::from(n) - 1;
            if out.ratings[slot].is_some() {
                return None;
            }
            let item_text = bank.item(n).map_or("", |i| i.text.as_str());
            parse_segment(segment, item_text).map(|p| (slot, p))
        });
        match parsed {
            Some((slot, (rating, explanation))) => {
                out.ratings[slot] = Some(rating);
                out.explanations[slot] = explanation;
            }
            None => {
                let trimmed = segment.trim();
                if !trimmed.is_empty() {
                    match item {
                        Some(n) if !std::ptr::eq(segment, preamble) => residue.push(format!("{n}. {trimmed}")),
                        _ => residue.push(trimmed.to_string()),
                    }
                }
            }
        }
    }
    out.residue = residue.join("\n");
    out
}

/// Parse result for one transcript, as written by the parse stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedRecord {
    pub source_id: uuid::Uuid,
    pub language: String,
    pub response: ParsedResponse,
    pub verdict: ValidityVerdict,
}

pub fn parse_transcript(transcript: &RawTranscript, bank: &QuestionnaireBank) -> ParsedRecord {
    let response = extract_ratings(&transcript.text, bank);
    let verdict = classify_validity(&response);
    ParsedRecord {
        source_id: transcript.id,
        language: transcript.language.clone(),
        response,
        verdict,
    }
}

/// Applies the exclusion rules in a fixed order; exactly one reason results.
///
/// Order: incomplete, numbering confusion, out of scale, all middle, all
/// identical, zigzag, all extremes. Numbering confusion is checked before the
/// scale check because its tell-tale values (8, 9, 10) are themselves out of scale.
pub fn classify_validity(resp: &ParsedResponse) -> ValidityVerdict {
    use ValidityReason::*;
    let Some(r) = resp.complete_ratings() else {
        return IncompleteItems.into();
    };
    if numbering_confusion(&r) {
        return NumberingConfusion.into();
    }
    if r.iter().any(|&x| !(1..=7).contains(&x)) {
        return OutOfScale.into();
    }
    if r.iter().all(|&x| x == 4) {
        return ArbitraryAllMiddle.into();
    }
    if r.iter().all(|&x| x == r[0]) {
        return ArbitraryAllIdentical.into();
    }
    if is_zigzag(&r) {
        return ArbitraryZigzag.into();
    }
    if r.iter().all(|&x| x == 1 || x == 7) {
        return ArbitraryAllExtremes.into();
    }
    Ok.into()
}

/// The maximal tail of ratings equal to their own item numbers starts at item 7
/// or earlier ("7. 7, 8. 8, 9. 9, 10. 10").
fn numbering_confusion(r: &[i32; ITEM_COUNT]) -> bool {
    let tail = r
        .iter()
        .enumerate()
        .rev()
        .take_while(|&(i, &x)| x == i as i32 + 1)
        .count();
    tail > 0 && ITEM_COUNT - tail < 7
}

/// Perfect alternation between exactly two values.
fn is_zigzag(r: &[i32; ITEM_COUNT]) -> bool {
    let (a, b) = (r[0], r[1]);
    a != b && r.iter().enumerate().all(|(i, &x)| x == if i % 2 == 0 { a } else { b })
}
