//! CSV and TSV sources.
//!
//! CSV fields may be double-quoted to hold separators, quotes and line
//! breaks. TSV splits on hard tabs and has no quoting. Every field starts
//! out as a string and is then coerced to the declared type.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::Read;
use std::path::Path;
use std::rc::Rc;

use csv::{ReaderBuilder, StringRecord};
use nmo_core::value::PositionType;
use nmo_core::DataValue;

use super::{coerce_at, IoError};

pub fn read(
    input: impl Read,
    delimiter: u8,
    path: &Path,
    predicate: &str,
    types: &[PositionType],
) -> Result<Vec<Vec<DataValue>>, IoError> {
    let terminators = Rc::new(RefCell::new(Terminators::default()));
    let input = Tracked {
        inner: input,
        terminators: Rc::clone(&terminators),
    };
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .quoting(delimiter != b'\t')
        .from_reader(input);
    let mut rows = Vec::new();
    let mut record = StringRecord::new();
    let line_of = |position: Option<&csv::Position>| {
        position.map_or(0, |p| p.line() + terminators.borrow_mut().skipped(p.byte()))
    };
    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| csv_error(path, line_of(e.position()), e))?;
        if !more {
            break;
        }
        let line = line_of(record.position());
        if record.len() != types.len() {
            return Err(IoError::Arity {
                path: path.to_path_buf(),
                row: line,
                expected: types.len(),
                found: record.len(),
            });
        }
        let row = record
            .iter()
            .zip(types)
            .enumerate()
            .map(|(position, (field, ty))| {
                coerce_at(DataValue::string(field), *ty, path, line, predicate, position)
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Offsets of the `\r` and `\n` bytes read but not yet passed by a record.
#[derive(Default)]
struct Terminators {
    offset: u64,
    seen: VecDeque<(u64, bool)>,
}

impl Terminators {
    /// Line breaks of the blank lines the reader skipped before the record
    /// whose reported position is `byte`.
    fn skipped(&mut self, byte: u64) -> u64 {
        while self.seen.front().is_some_and(|&(at, _)| at < byte) {
            self.seen.pop_front();
        }
        let mut next = byte;
        let mut breaks = 0;
        while let Some(&(at, newline)) = self.seen.front() {
            if at != next {
                break;
            }
            breaks += u64::from(newline);
            next += 1;
            self.seen.pop_front();
        }
        breaks
    }
}

struct Tracked<R> {
    inner: R,
    terminators: Rc<RefCell<Terminators>>,
}

impl<R: Read> Read for Tracked<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        let mut t = self.terminators.borrow_mut();
        for &b in &buf[..n] {
            if b == b'\n' || b == b'\r' {
                let at = t.offset;
                t.seen.push_back((at, b == b'\n'));
            }
            t.offset += 1;
        }
        Ok(n)
    }
}

fn csv_error(path: &Path, line: u64, error: csv::Error) -> IoError {
    match error.into_kind() {
        csv::ErrorKind::Io(source) => IoError::io(path, source),
        csv::ErrorKind::Utf8 { err, .. } => IoError::Syntax {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("invalid UTF-8: {err}"),
        },
        other => IoError::Syntax {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}
