//! Line-delimited JSON files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> JsonlError + '_ {
    move |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one JSON document per line and returns the number of records written.
pub fn write<T: Serialize>(records: &[T], path: impl AsRef<Path>) -> Result<usize, JsonlError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize to JSON");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(records.len())
}

/// Reads a JSONL file. Line numbers in errors are 1-based.
pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_from(BufReader::new(file)).map_err(|e| match e {
        JsonlError::Io { source, .. } => io_err(path)(source),
        other => other,
    })
}

pub fn read_from<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            return Err(JsonlError::SchemaViolation {
                line: i + 1,
                message: "blank line".into(),
            });
        }
        let record = serde_json::from_str(&line).map_err(|e| JsonlError::SchemaViolation {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
