#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use psychoprobe_core::questionnaire::QuestionnaireBank;
use psychoprobe_core::transcript::{self, prompt_sha256, RawTranscript, SamplingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn psychoprobe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psychoprobe"))
        .args(args)
        .env_remove("PSYCHOPROBE_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn reply(ratings: &[i32; 10], explain: bool) -> String {
    let bank = QuestionnaireBank::english();
    let mut out = String::new();
    for (i, r) in ratings.iter().enumerate() {
        let item = &bank.items()[i];
        if explain {
            out.push_str(&format!("{}. {}: {} - I tend to be like this.\n", i + 1, item.text.trim_end_matches('.'), r));
        } else {
            out.push_str(&format!("{}. {}\n", i + 1, r));
        }
    }
    out
}

/// Random replies for a few languages plus one excluded pattern per language.
pub fn synthetic_transcripts(seed: u64, per_language: usize) -> Vec<RawTranscript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prompt = QuestionnaireBank::english().render_prompt();
    let mut out = Vec::new();
    for (li, language) in ["de", "en", "es"].into_iter().enumerate() {
        for i in 0..=per_language {
            let ratings: [i32; 10] = if i == per_language {
                [4; 10]
            } else {
                std::array::from_fn(|_| rng.random_range(1..=7))
            };
            out.push(RawTranscript {
                id: uuid::Uuid::from_u128(((li as u128) << 64) | i as u128),
                language: language.into(),
                timestamp: "2023-01-01T00:00:00Z".into(),
                prompt_sha256: prompt_sha256(&prompt),
                sampling: SamplingConfig::default(),
                text: reply(&ratings, i % 3 != 0),
                endpoint_latency_ms: 1000,
                error: None,
            });
        }
    }
    out
}

pub fn write_transcripts(dir: &Path, transcripts: &[RawTranscript]) {
    let mut by_language: BTreeMap<&str, Vec<RawTranscript>> = BTreeMap::new();
    for t in transcripts {
        by_language.entry(&t.language).or_default().push(t.clone());
    }
    std::fs::create_dir_all(dir).unwrap();
    for (language, ts) in by_language {
        transcript::persist(&ts, dir.join(format!("{language}.jsonl"))).unwrap();
    }
}

/// Relative path to contents for every file under `dir`.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
