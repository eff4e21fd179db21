//! JSON Lines reading and writing with line-numbered errors.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| JsonlError::Io { path: display.clone(), source })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io { path: display.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| JsonlError::Parse {
            path: display.clone(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), JsonlError> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|source| JsonlError::Io { path: display.clone(), source })?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| JsonlError::Parse {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(writer, "{line}").map_err(|source| JsonlError::Io { path: display.clone(), source })?;
    }
    writer.flush().map_err(|source| JsonlError::Io { path: display, source })
}

/// Appends one record to a JSONL file, creating it if needed.
pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<(), JsonlError> {
    let display = path.display().to_string();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| JsonlError::Io { path: display.clone(), source })?;
    let mut writer = BufWriter::new(file);
    let line = serde_json::to_string(item).map_err(|e| JsonlError::Parse {
        path: display.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    writeln!(writer, "{line}").map_err(|source| JsonlError::Io { path: display.clone(), source })?;
    writer.flush().map_err(|source| JsonlError::Io { path: display, source })
}
