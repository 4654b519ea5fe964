//! Schema-tagged JSON-lines files.
//!
//! The first line is `{"schema":"<tag>"}`; every following line holds one
//! record.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: expected schema {expected:?}, found {found:?}")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

pub fn write<T: Serialize>(path: &Path, schema: &str, items: &[T]) -> Result<(), JsonlError> {
    let io = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    let header = serde_json::to_string(&Header { schema: schema.to_owned() }).expect("header serializes");
    writeln!(out, "{header}").map_err(io)?;
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| JsonlError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>, JsonlError> {
    let io = |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(io)?,
        None => String::new(),
    };
    let header: Header = serde_json::from_str(&header).map_err(|e| JsonlError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("missing schema header: {e}"),
    })?;
    if header.schema != schema {
        return Err(JsonlError::Schema {
            path: path.to_path_buf(),
            expected: schema.to_owned(),
            found: header.schema,
        });
    }
    let mut items = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| JsonlError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(items)
}
