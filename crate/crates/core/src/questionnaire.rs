//! Ten-item questionnaire banks and prompt rendering.
//!
//! A bank is plain data: item texts, the factor each item loads on, which item of
//! each pair is reverse-keyed, the seven scale anchors and the instruction text.
//! The factor mapping lives in the bank file so a corrected mapping needs no rebuild.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ITEM_COUNT: usize = 10;
pub const SCALE_POINTS: u8 = 7;
pub const INSTRUCTION_BLOCKS: usize = 8;

const ENGLISH_BANK: &str = include_str!("../banks/en.json");

#[derive(Debug, Error)]
pub enum QuestionnaireError {
    #[error("malformed bank: {0}")]
    MalformedBank(String),
    #[error("bank is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("failed to read bank: {0}")]
    Io(#[from] std::io::Error),
}

/// Big Five factor. Neuroticism is measured as its inverse, emotional stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Factor {
    O,
    C,
    E,
    A,
    ES,
}

impl Factor {
    /// Canonical report order.
    pub const ALL: [Factor; 5] = [Factor::O, Factor::C, Factor::E, Factor::A, Factor::ES];

    pub fn code(self) -> &'static str {
        match self {
            Factor::O => "O",
            Factor::C => "C",
            Factor::E => "E",
            Factor::A => "A",
            Factor::ES => "ES",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Factor::O => "Openness",
            Factor::C => "Conscientiousness",
            Factor::E => "Extraversion",
            Factor::A => "Agreeableness",
            Factor::ES => "Emotional Stability",
        }
    }

    /// Position in [`Factor::ALL`].
    pub fn position(self) -> usize {
        self as usize
    }

    pub fn from_code(code: &str) -> Option<Factor> {
        Factor::ALL.into_iter().find(|f| f.code().eq_ignore_ascii_case(code))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub index: u8,
    pub text: String,
    pub factor: Factor,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleAnchor {
    pub value: u8,
    pub label: String,
}

/// A validated, language-tagged questionnaire. Immutable after loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireBank {
    language: String,
    /// Framing, rating demand, completeness demand, scale intro, numeric demand,
    /// count demand, explanation demand, list trigger.
    instruction_blocks: Vec<String>,
    self_statement: String,
    items: Vec<Item>,
    anchors: Vec<ScaleAnchor>,
}

/// Indices of the two items measuring one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemPair {
    pub normal: u8,
    pub reversed: u8,
}

impl QuestionnaireBank {
    /// Reads a bank document and checks every structural invariant.
    ///
    /// `language` must match the tag recorded in the document.
    pub fn load<R: Read>(source: R, language: &str) -> Result<Self, QuestionnaireError> {
        let bank: QuestionnaireBank = serde_json::from_reader(source)?;
        if bank.language != language {
            return Err(QuestionnaireError::MalformedBank(format!(
                "document is tagged {:?}, expected {:?}",
                bank.language, language
            )));
        }
        bank.validated()
    }

    /// Loads a bank file, taking the language from the document itself.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, QuestionnaireError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, QuestionnaireError> {
        let bank: QuestionnaireBank = serde_json::from_str(text)?;
        bank.validated()
    }

    /// The built-in English bank, verbatim from the original instrument.
    pub fn english() -> Self {
        Self::from_json(ENGLISH_BANK).expect("built-in English bank is valid")
    }

    pub fn new(
        language: impl Into<String>,
        instruction_blocks: Vec<String>,
        self_statement: impl Into<String>,
        items: Vec<Item>,
        anchors: Vec<ScaleAnchor>,
    ) -> Result<Self, QuestionnaireError> {
        QuestionnaireBank {
            language: language.into(),
            instruction_blocks,
            self_statement: self_statement.into(),
            items,
            anchors,
        }
        .validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bank serializes")
    }

    fn validated(mut self) -> Result<Self, QuestionnaireError> {
        let bad = |msg: String| Err(QuestionnaireError::MalformedBank(msg));
        if self.language.trim().is_empty() {
            return bad("empty language tag".into());
        }
        if self.instruction_blocks.len() != INSTRUCTION_BLOCKS {
            return bad(format!(
                "expected {INSTRUCTION_BLOCKS} instruction blocks, found {}",
                self.instruction_blocks.len()
            ));
        }
        if self.items.len() != ITEM_COUNT {
            return bad(format!("expected {ITEM_COUNT} items, found {}", self.items.len()));
        }
        self.items.sort_by_key(|item| item.index);
        for (expected, item) in (1..=ITEM_COUNT as u8).zip(&self.items) {
            if item.index != expected {
                return bad(format!(
                    "item indices must cover 1..=10 exactly once (problem at index {})",
                    item.index
                ));
            }
            if item.text.trim().is_empty() {
                return bad(format!("item {} has empty text", item.index));
            }
        }
        for factor in Factor::ALL {
            let members: Vec<&Item> = self.items.iter().filter(|i| i.factor == factor).collect();
            if members.len() != 2 {
                return bad(format!("factor {factor} has {} items, expected 2", members.len()));
            }
            if members.iter().filter(|i| i.reversed).count() != 1 {
                return bad(format!("factor {factor} must have exactly one reversed item"));
            }
        }
        self.anchors.sort_by_key(|a| a.value);
        let values: Vec<u8> = self.anchors.iter().map(|a| a.value).collect();
        if values != (1..=SCALE_POINTS).collect::<Vec<_>>() {
            return bad(format!("anchor values must be exactly 1..=7, found {values:?}"));
        }
        Ok(self)
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Item by 1-based index.
    pub fn item(&self, index: u8) -> Option<&Item> {
        self.items.get(usize::from(index).checked_sub(1)?)
    }

    pub fn anchors(&self) -> &[ScaleAnchor] {
        &self.anchors
    }

    pub fn instruction_blocks(&self) -> &[String] {
        &self.instruction_blocks
    }

    pub fn self_statement(&self) -> &str {
        &self.self_statement
    }

    pub fn pair(&self, factor: Factor) -> ItemPair {
        let find = |reversed: bool| {
            self.items
                .iter()
                .find(|i| i.factor == factor && i.reversed == reversed)
                .map(|i| i.index)
                .expect("validated bank has one normal and one reversed item per factor")
        };
        ItemPair {
            normal: find(false),
            reversed: find(true),
        }
    }

    /// Item texts for one factor, in index order.
    pub fn factor_texts(&self, factor: Factor) -> impl Iterator<Item = &str> {
        self.items.iter().filter(move |i| i.factor == factor).map(|i| i.text.as_str())
    }

    /// Renders the assessment prompt.
    ///
    /// Layout: the first three instruction blocks form one paragraph, then the
    /// self-statement, the numbered items with blanks, the scale intro, the anchors,
    /// the numeric, count and explanation demands, and finally the list trigger that
    /// invites the model to continue the numbered list.
    pub fn render_prompt(&self) -> String {
        let b = &self.instruction_blocks;
        let mut sections: Vec<String> = Vec::with_capacity(10);
        sections.push(format!("{} {} {}", b[0], b[1], b[2]));
        sections.push(self.self_statement.clone());
        sections.push(
            self.items
                .iter()
                .map(|i| format!("{}. _____ {}", i.index, i.text))
                .collect::<Vec<_>>()
                .join("\n"),
        );
        sections.push(b[3].clone());
        sections.push(
            self.anchors
                .iter()
                .map(|a| format!("{} = {}", a.value, a.label))
                .collect::<Vec<_>>()
                .join("\n"),
        );
        sections.extend(b[4..8].iter().cloned());
        sections.join("\n\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Line breaks and trailing spaces as printed in the original prompt.
    const PRINTED_PROMPT: &str = concat!(
        "Here are a number of personality traits that may or may not \n",
        "apply to you. Please rate each statement to indicate the \n",
        "extent to which you agree or \n",
        "disagree with that statement. You should rate the extent \n",
        "to which the pair of traits applies to you, even if one \n",
        "characteristic applies more strongly than the other.\n",
        "\n",
        "I see myself as:\n",
        "\n",
        "1. _____ Extraverted, enthusiastic.\n",
        "2. _____ Critical, quarrelsome.\n",
        "3. _____ Dependable, self-disciplined.\n",
        "4. _____ Anxious, easily upset.\n",
        "5. _____ Open to new experiences, complex.\n",
        "6. _____ Reserved, quiet.\n",
        "7. _____ Sympathetic, warm.\n",
        "8. _____ Disorganized, careless.\n",
        "9. _____ Calm, emotionally stable.\n",
        "10. _____ Conventional, uncreative.\n",
        "\n",
        "Use the following scale for rating yourself:\n",
        "\n",
        "1 = Disagree strongly\n",
        "2 = Disagree moderately\n",
        "3 = Disagree a little\n",
        "4 = Neither agree nor disagree\n",
        "5 = Agree a little\n",
        "6 = Agree moderately\n",
        "7 = Agree strongly\n",
        "\n",
        "Rate yourself in numbers.\n",
        "\n",
        "You have to answer all ten questions.\n",
        "\n",
        "Also, describe shortly why you rate yourself like that.\n",
        "\n",
        "1."
    );

    fn english_value() -> serde_json::Value {
        serde_json::from_str(ENGLISH_BANK).unwrap()
    }

    fn load_value(v: &serde_json::Value) -> Result<QuestionnaireBank, QuestionnaireError> {
        QuestionnaireBank::load(v.to_string().as_bytes(), "en")
    }

    #[test]
    fn english_prompt_is_verbatim() {
        let bank = QuestionnaireBank::english();
        let prompt = bank.render_prompt();
        assert_eq!(prompt, PRINTED_PROMPT);
        let flattened = prompt.split_whitespace().collect::<Vec<_>>().join(" ");
        assert!(flattened.starts_with(
            "Here are a number of personality traits that may or may not apply to you."
        ));
        assert!(prompt.ends_with("1."));
        assert_eq!(prompt, bank.render_prompt());
    }

    #[test]
    fn english_factor_pairs() {
        let bank = QuestionnaireBank::english();
        assert_eq!(bank.pair(Factor::E), ItemPair { normal: 1, reversed: 6 });
        assert_eq!(bank.pair(Factor::A), ItemPair { normal: 7, reversed: 2 });
        assert_eq!(bank.pair(Factor::C), ItemPair { normal: 3, reversed: 8 });
        assert_eq!(bank.pair(Factor::ES), ItemPair { normal: 9, reversed: 4 });
        assert_eq!(bank.pair(Factor::O), ItemPair { normal: 5, reversed: 10 });
        assert_eq!(bank.item(2).unwrap().text, "Critical, quarrelsome.");
        assert!(bank.item(6).unwrap().reversed);
        assert_eq!(bank.item(7).unwrap().text, "Sympathetic, warm.");
    }

    #[test]
    fn nine_items_rejected() {
        let mut v = english_value();
        v["items"].as_array_mut().unwrap().pop();
        assert!(matches!(load_value(&v), Err(QuestionnaireError::MalformedBank(_))));
    }

    #[test]
    fn both_openness_items_reversed_rejected() {
        let mut v = english_value();
        v["items"][4]["reversed"] = true.into();
        assert!(matches!(load_value(&v), Err(QuestionnaireError::MalformedBank(_))));
    }

    #[test]
    fn duplicate_index_rejected() {
        let mut v = english_value();
        v["items"][9]["index"] = 9.into();
        assert!(matches!(load_value(&v), Err(QuestionnaireError::MalformedBank(_))));
    }

    #[test]
    fn bad_anchor_set_rejected() {
        let mut v = english_value();
        v["anchors"][6]["value"] = 8.into();
        assert!(matches!(load_value(&v), Err(QuestionnaireError::MalformedBank(_))));
        let mut v = english_value();
        v["anchors"].as_array_mut().unwrap().pop();
        assert!(matches!(load_value(&v), Err(QuestionnaireError::MalformedBank(_))));
    }

    #[test]
    fn language_mismatch_rejected() {
        let err = QuestionnaireBank::load(ENGLISH_BANK.as_bytes(), "de").unwrap_err();
        assert!(matches!(err, QuestionnaireError::MalformedBank(_)));
    }

    #[test]
    fn permuted_blocks_change_output_but_not_item_order() {
        let mut v = english_value();
        v["instruction_blocks"].as_array_mut().unwrap().swap(4, 6);
        let permuted = load_value(&v).unwrap().render_prompt();
        let original = QuestionnaireBank::english().render_prompt();
        assert_ne!(permuted, original);
        let positions: Vec<usize> = (1..=10)
            .map(|i| permuted.find(&format!("{i}. _____")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn non_latin_text_passes_through() {
        let mut v = english_value();
        v["language"] = "ja".into();
        v["items"][0]["text"] = "外向的、熱心".into();
        let bank = QuestionnaireBank::load(v.to_string().as_bytes(), "ja").unwrap();
        assert!(bank.render_prompt().contains("1. _____ 外向的、熱心"));
    }

    #[test]
    fn serialize_round_trip() {
        let bank = QuestionnaireBank::english();
        let again = QuestionnaireBank::load(bank.to_json().as_bytes(), "en").unwrap();
        assert_eq!(bank, again);
    }
}
