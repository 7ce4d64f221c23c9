//! Raw model replies with provenance, and the sampling settings used to get them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uuid::Uuid;

use crate::jsonl::{self, JsonlError};

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub model_id: String,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperature: 0.7,
            max_tokens: 1042,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            model_id: "text-davinci-002".into(),
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must lie in (0, 1], got {}", self.top_p));
        }
        if self.model_id.is_empty() {
            return Err("model_id must not be empty".into());
        }
        Ok(())
    }
}

/// One collected reply. Failed generations are kept with empty `text` and an
/// `error` note so per-language yield can be reported honestly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTranscript {
    pub id: Uuid,
    pub language: String,
    /// UTC, ISO-8601.
    pub timestamp: String,
    pub prompt_sha256: String,
    pub sampling: SamplingConfig,
    pub text: String,
    pub endpoint_latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RawTranscript {
    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }
}

/// Lowercase hex SHA-256 of the prompt text.
pub fn prompt_sha256(prompt: &str) -> String {
    Sha256::digest(prompt.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Writes transcripts as JSONL, one per line.
pub fn persist(transcripts: &[RawTranscript], path: impl AsRef<Path>) -> Result<usize, JsonlError> {
    jsonl::write(transcripts, path)
}

/// Reads transcripts written by [`persist`], checking the hash format.
pub fn load(path: impl AsRef<Path>) -> Result<Vec<RawTranscript>, JsonlError> {
    let transcripts: Vec<RawTranscript> = jsonl::read(path)?;
    for (i, t) in transcripts.iter().enumerate() {
        if !is_sha256_hex(&t.prompt_sha256) {
            return Err(JsonlError::SchemaViolation {
                line: i + 1,
                message: format!("prompt_sha256 {:?} is not 64 lowercase hex chars", t.prompt_sha256),
            });
        }
    }
    Ok(transcripts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sample(i: u8) -> RawTranscript {
        RawTranscript {
            id: Uuid::from_bytes([i; 16]),
            language: "de".into(),
            timestamp: "2022-11-01T10:00:00Z".into(),
            prompt_sha256: prompt_sha256("prompt"),
            sampling: SamplingConfig::default(),
            text: format!(" {i} - Ich bin gesellig\n2. 5: ..."),
            endpoint_latency_ms: 1200 + u64::from(i),
            error: (i == 3).then(|| "HTTP 500".to_string()),
        }
    }

    #[test]
    fn defaults_match_collection_settings() {
        let c = SamplingConfig::default();
        assert_eq!(c.temperature, 0.7);
        assert_eq!(c.max_tokens, 1042);
        assert_eq!(c.top_p, 1.0);
        assert_eq!(c.frequency_penalty, 0.0);
        assert_eq!(c.presence_penalty, 0.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn hash_is_lowercase_hex() {
        let h = prompt_sha256("abc");
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(is_sha256_hex(&h));
    }

    #[test]
    fn round_trip_five() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let items: Vec<_> = (1..=5).map(sample).collect();
        assert_eq!(persist(&items, &path).unwrap(), 5);
        assert_eq!(load(&path).unwrap(), items);
    }

    #[test]
    fn empty_sequence_gives_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        persist(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(load(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_last_line_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        persist(&[sample(1), sample(2)], &path).unwrap();
        let mut content = std::fs::read_to_string(&path).unwrap();
        content.truncate(content.len() - 20);
        std::fs::File::create(&path).unwrap().write_all(content.as_bytes()).unwrap();
        match load(&path) {
            Err(JsonlError::SchemaViolation { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_failure() {
        assert!(matches!(load("/nonexistent/x.jsonl"), Err(JsonlError::Io { .. })));
    }
}
