//! Reading sources and writing results.

pub mod delimited;
pub mod export;
pub mod facts;
pub mod ntriples;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use nmo_core::parser::{SourceDirective, SourceFormat};
use nmo_core::value::{CoercionError, PositionType};
use nmo_core::DataValue;

pub use export::{ExportFormat, Exporter};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: row {row} has {found} fields, expected {expected}", path.display())]
    Arity {
        path: PathBuf,
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error(
        "{}:{line}: {predicate} position {}: {}",
        path.display(),
        position + 1,
        error
    )]
    Coercion {
        path: PathBuf,
        line: u64,
        predicate: String,
        position: usize,
        error: CoercionError,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Syntax {
        path: PathBuf,
        line: u64,
        column: u64,
        message: String,
    },
    #[error("{}:{line}: fact for {found}, expected {expected}", path.display())]
    WrongPredicate {
        path: PathBuf,
        line: u64,
        expected: String,
        found: String,
    },
    #[error("{} already exists (use --overwrite to replace it)", path.display())]
    Exists { path: PathBuf },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Opens a file for reading, decompressing it when the name ends in `.gz`.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let gzip = path.extension().is_some_and(|ext| ext == "gz");
    Ok(if gzip {
        Box::new(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    })
}

/// Coerces one field, attaching the location to failures.
pub(crate) fn coerce_at(
    value: DataValue,
    ty: PositionType,
    path: &Path,
    line: u64,
    predicate: &str,
    position: usize,
) -> Result<DataValue, IoError> {
    nmo_core::value::coerce(value, ty).map_err(|error| IoError::Coercion {
        path: path.to_path_buf(),
        line,
        predicate: predicate.to_string(),
        position,
        error,
    })
}

/// Loads the rows of a source. Relative paths are resolved against `base`.
/// `types` gives the declared type of each position.
pub fn load_source(
    base: &Path,
    source: &SourceDirective,
    types: &[PositionType],
) -> Result<Vec<Vec<DataValue>>, IoError> {
    let path = base.join(&source.path);
    let reader = open_input(&path)?;
    match source.format {
        SourceFormat::Csv => delimited::read(reader, b',', &path, &source.predicate, types),
        SourceFormat::Tsv => delimited::read(reader, b'\t', &path, &source.predicate, types),
        SourceFormat::NTriples => ntriples::read(reader, &path, &source.predicate, types),
        SourceFormat::Facts => facts::read(reader, &path, &source.predicate, types),
    }
}
