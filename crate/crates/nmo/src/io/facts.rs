//! Fact files: ground atoms `p(c1, ..., cn) .` in rule syntax.

use std::io::Read;
use std::path::Path;

use nmo_core::parser::{parse_ground_atoms, Term};
use nmo_core::value::PositionType;
use nmo_core::DataValue;

use super::{coerce_at, IoError};

pub fn read(
    mut input: impl Read,
    path: &Path,
    predicate: &str,
    types: &[PositionType],
) -> Result<Vec<Vec<DataValue>>, IoError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| IoError::io(path, e))?;
    let atoms = parse_ground_atoms(&text).map_err(|e| IoError::Syntax {
        path: path.to_path_buf(),
        line: e.line as u64,
        column: e.column as u64,
        message: e.message,
    })?;
    let mut rows = Vec::with_capacity(atoms.len());
    for (line, atom) in atoms {
        let line = line as u64;
        if atom.predicate != predicate {
            return Err(IoError::WrongPredicate {
                path: path.to_path_buf(),
                line,
                expected: predicate.to_string(),
                found: atom.predicate,
            });
        }
        if atom.arity() != types.len() {
            return Err(IoError::Arity {
                path: path.to_path_buf(),
                row: line,
                expected: types.len(),
                found: atom.arity(),
            });
        }
        let row = atom
            .terms
            .into_iter()
            .zip(types)
            .enumerate()
            .map(|(position, (term, ty))| match term {
                Term::Constant(value) => coerce_at(value, *ty, path, line, predicate, position),
                _ => unreachable!("ground atoms hold constants"),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}
