//! Writing derived relations to files.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use nmo_core::reasoner::ChaseState;
use nmo_core::DataValue;

use super::ntriples::write_term;
use super::IoError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ExportFormat {
    #[default]
    Csv,
    #[value(name = "ntriples")]
    NTriples,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::NTriples => "nt",
        }
    }
}

/// Writes one file per predicate. Nulls are numbered by first appearance
/// across all files written by the same exporter.
#[derive(Debug)]
pub struct Exporter {
    dir: PathBuf,
    format: ExportFormat,
    overwrite: bool,
    nulls: HashMap<u64, u64>,
}

impl Exporter {
    pub fn new(dir: impl Into<PathBuf>, format: ExportFormat, overwrite: bool) -> Self {
        Exporter {
            dir: dir.into(),
            format,
            overwrite,
            nulls: HashMap::new(),
        }
    }

    pub fn path_for(&self, predicate: &str) -> PathBuf {
        self.dir
            .join(format!("{predicate}.{}", self.format.extension()))
    }

    fn label(&mut self, null: u64) -> u64 {
        let next = self.nulls.len() as u64;
        *self.nulls.entry(null).or_insert(next)
    }

    fn field(&mut self, value: &DataValue) -> String {
        match value {
            DataValue::Iri(text) | DataValue::String(text) => text.clone(),
            DataValue::Null(k) => format!("_:n{}", self.label(*k)),
            other => other.to_string(),
        }
    }

    /// CSV text of the given rows.
    pub fn render_csv(&mut self, rows: &[Vec<DataValue>]) -> Vec<u8> {
        if rows.iter().all(Vec::is_empty) {
            return vec![b'\n'; rows.len()];
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(Vec::new());
        for row in rows {
            let fields: Vec<String> = row.iter().map(|v| self.field(v)).collect();
            writer.write_record(&fields).expect("in-memory write");
        }
        writer.into_inner().expect("in-memory write")
    }

    /// N-Triples text of the given triples.
    pub fn render_ntriples(&mut self, rows: &[Vec<DataValue>]) -> Vec<u8> {
        let mut out = String::new();
        for row in rows {
            for value in row {
                if let DataValue::Null(k) = value {
                    self.label(*k);
                }
            }
            let labels = self.nulls.clone();
            for value in row {
                write_term(&mut out, value, |k| labels[&k]);
                out.push(' ');
            }
            out.push_str(".\n");
        }
        out.into_bytes()
    }

    /// Writes the facts of `predicate`. Returns the path and row count, or
    /// `None` when the format cannot represent the relation.
    pub fn export(
        &mut self,
        predicate: &str,
        state: &ChaseState,
    ) -> Result<Option<(PathBuf, usize)>, IoError> {
        let rows = state.facts(predicate);
        let arity = state.relation(predicate).map_or(0, |r| r.arity());
        let bytes = match self.format {
            ExportFormat::Csv => self.render_csv(&rows),
            ExportFormat::NTriples if arity == 3 => self.render_ntriples(&rows),
            ExportFormat::NTriples => {
                log::warn!("skipping {predicate}: N-Triples export needs arity 3, not {arity}");
                return Ok(None);
            }
        };
        let path = self.path_for(predicate);
        write_file(&path, &bytes, self.overwrite)?;
        Ok(Some((path, rows.len())))
    }
}

fn write_file(path: &Path, bytes: &[u8], overwrite: bool) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    let mut options = OpenOptions::new();
    options.write(true);
    if overwrite {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    let mut file = options.open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => IoError::Exists {
            path: path.to_path_buf(),
        },
        _ => IoError::io(path, e),
    })?;
    file.write_all(bytes).map_err(|e| IoError::io(path, e))
}
