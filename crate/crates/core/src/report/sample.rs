//! Sample-size table and explanation token tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::emit::{csv_field, slug, svg_metadata, write_file, write_json, FIGURES, STATS, TABLES};
use super::{figures, ReportError};
use crate::parser::ParsedRecord;
use crate::provenance::Provenance;
use crate::questionnaire::{Factor, QuestionnaireBank};
use crate::textstats::{default_stoplist, item_overlap, token_count, token_frequencies, ItemOverlap};
use crate::transcript::RawTranscript;

const BAR_COUNT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub language: String,
    /// Valid cases.
    pub sample_size: usize,
    /// Share of valid cases with at least one explanation, in percent.
    pub pct_with_explanation: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub mean_tokens: f64,
}

/// One row per language with at least one valid case, in sorted order. Token
/// counts are taken over the full reply text. Languages listed in `languages`
/// without any valid case are skipped with a warning.
pub fn sample_table(languages: &[String], transcripts: &[RawTranscript], parsed: &[ParsedRecord]) -> Vec<SampleRow> {
    let text_by_id: BTreeMap<_, &str> = transcripts.iter().map(|t| (t.id, t.text.as_str())).collect();
    let mut by_language: BTreeMap<&str, Vec<(&ParsedRecord, usize)>> = BTreeMap::new();
    for p in parsed.iter().filter(|p| p.verdict.valid) {
        let Some(text) = text_by_id.get(&p.source_id) else {
            log::warn!("parsed record {} has no transcript; left out of the sample table", p.source_id);
            continue;
        };
        by_language.entry(&p.language).or_default().push((p, token_count(text)));
    }
    let requested: BTreeSet<&str> = languages.iter().map(String::as_str).collect();
    for lang in requested.iter().filter(|l| !by_language.contains_key(**l)) {
        log::warn!("no valid cases for language {lang}; row omitted");
    }
    by_language
        .into_iter()
        .map(|(language, rows)| {
            let n = rows.len();
            let with_expl = rows.iter().filter(|(p, _)| p.response.has_explanation()).count();
            let tokens: Vec<usize> = rows.iter().map(|(_, t)| *t).collect();
            SampleRow {
                language: language.to_string(),
                sample_size: n,
                pct_with_explanation: 100.0 * with_expl as f64 / n as f64,
                min_tokens: *tokens.iter().min().expect("non-empty group"),
                max_tokens: *tokens.iter().max().expect("non-empty group"),
                mean_tokens: tokens.iter().sum::<usize>() as f64 / n as f64,
            }
        })
        .collect()
}

/// Writes `tables/sample.csv`; percentages with two decimals, mean tokens rounded.
pub fn emit_sample_table(
    languages: &[String],
    transcripts: &[RawTranscript],
    parsed: &[ParsedRecord],
    prov: &Provenance,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf, ReportError> {
    let mut text = prov.csv_comment();
    text.push_str("language,sample_size,pct_with_explanation,min_tokens,max_tokens,mean_tokens\n");
    for r in sample_table(languages, transcripts, parsed) {
        text.push_str(&format!(
            "{},{},{:.2},{},{},{:.0}\n",
            csv_field(&r.language),
            r.sample_size,
            r.pct_with_explanation,
            r.min_tokens,
            r.max_tokens,
            r.mean_tokens
        ));
    }
    write_file(&out_dir.as_ref().join(TABLES).join("sample.csv"), &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OverlapRow {
    language: String,
    factor: Factor,
    overlap: ItemOverlap,
}

/// Token frequency CSV and bar chart per language and factor, from the
/// explanations of valid cases, plus item-wording overlap where the language's
/// bank is available. `structure` supplies the item-to-factor mapping.
pub fn emit_token_tables(
    parsed: &[ParsedRecord],
    structure: &QuestionnaireBank,
    banks: &BTreeMap<String, QuestionnaireBank>,
    top_n: usize,
    prov: &Provenance,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, ReportError> {
    let out = out_dir.as_ref();
    let meta = svg_metadata(prov);
    let mut by_language: BTreeMap<&str, Vec<&ParsedRecord>> = BTreeMap::new();
    for p in parsed.iter().filter(|p| p.verdict.valid) {
        by_language.entry(&p.language).or_default().push(p);
    }
    let mut files = Vec::new();
    let mut overlaps = Vec::new();
    for (language, records) in by_language {
        let stoplist = default_stoplist(language);
        for &factor in &Factor::ALL {
            let pair = structure.pair(factor);
            let texts: Vec<&str> = records
                .iter()
                .flat_map(|p| {
                    [pair.normal, pair.reversed]
                        .into_iter()
                        .filter_map(|i| p.response.explanations[usize::from(i) - 1].as_deref())
                })
                .collect();
            let table = token_frequencies(&texts, language, factor, &stoplist);
            let stem = format!("tokens_{}_{}", slug(language), factor.code());
            let csv = format!("{}{}", prov.csv_comment(), table.to_csv());
            files.push(write_file(&out.join(TABLES).join(format!("{stem}.csv")), &csv)?);
            let top: Vec<(String, usize)> = table.entries.iter().take(BAR_COUNT).cloned().collect();
            let title = format!("Explanation tokens, {language}, {}", factor.name());
            let svg = figures::frequency_bars(&title, &top, &meta);
            files.push(write_file(&out.join(FIGURES).join(format!("{stem}.svg")), &svg)?);
            if let Some(bank) = banks.get(language) {
                if let Ok(overlap) = item_overlap(&table, bank, top_n) {
                    overlaps.push(OverlapRow {
                        language: language.to_string(),
                        factor,
                        overlap,
                    });
                }
            }
        }
    }
    files.push(write_json(&out.join(STATS).join("item_overlap.json"), prov, &overlaps)?);
    Ok(files)
}
