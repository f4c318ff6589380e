//! Dataset loading: path or standard input, CSV or JSON.

use std::io::Read;
use std::path::Path;

use repmix_core::study::{parse_dataset, DataError, DatasetFormat};
use repmix_core::ReplicationSet;

#[derive(Debug)]
pub enum LoadError {
    Io { path: String, source: std::io::Error },
    Parse(DataError),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Io { path, source } => write!(f, "cannot read `{path}`: {source}"),
            LoadError::Parse(e) => write!(f, "dataset: {e}"),
        }
    }
}

impl std::error::Error for LoadError {}

impl From<DataError> for LoadError {
    fn from(e: DataError) -> Self {
        LoadError::Parse(e)
    }
}

/// Load a dataset from `path` (`-` reads standard input). The format is the
/// explicit one when given, otherwise inferred from the extension; standard
/// input defaults to CSV.
pub fn load(path: &str, explicit: Option<DatasetFormat>) -> Result<ReplicationSet, LoadError> {
    let (bytes, format) = if path == "-" {
        let mut buffer = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buffer)
            .map_err(|source| LoadError::Io { path: "<stdin>".into(), source })?;
        (buffer, explicit.unwrap_or(DatasetFormat::Csv))
    } else {
        let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let format = explicit.unwrap_or_else(|| infer_format(path));
        (bytes, format)
    };
    Ok(parse_dataset(&bytes, format)?)
}

fn infer_format(path: &str) -> DatasetFormat {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => DatasetFormat::Json,
        _ => DatasetFormat::Csv,
    }
}
