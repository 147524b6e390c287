//! N-Triples sources.
//!
//! Literals typed `xsd:integer` become integers, `xsd:double` and
//! `xsd:decimal` become doubles, and other literals become strings or
//! language-tagged strings. Blank nodes become IRIs with the `_:` prefix.

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use nmo_core::value::{parse_decimal, parse_integer, PositionType};
use nmo_core::DataValue;

use super::{coerce_at, IoError};

const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// Prefix under which blank node labels are stored as IRIs.
pub const BLANK_PREFIX: &str = "_:";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

/// Parses one line. Blank and comment lines give `Ok(None)`.
pub fn parse_line(line: &str) -> Result<Option<[DataValue; 3]>, LineError> {
    let mut p = Cursor {
        chars: line.chars().collect(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() || p.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match p.peek() {
        Some('<') => DataValue::Iri(p.iri()?),
        Some('_') => p.blank()?,
        _ => return Err(p.error("expected IRI or blank node as subject")),
    };
    p.skip_ws();
    if p.peek() != Some('<') {
        return Err(p.error("expected IRI as predicate"));
    }
    let predicate = DataValue::Iri(p.iri()?);
    p.skip_ws();
    let object = match p.peek() {
        Some('<') => DataValue::Iri(p.iri()?),
        Some('_') => p.blank()?,
        Some('"') => p.literal()?,
        _ => return Err(p.error("expected IRI, blank node or literal as object")),
    };
    p.skip_ws();
    if p.peek() != Some('.') {
        return Err(p.error("expected `.` at the end of the triple"));
    }
    p.pos += 1;
    p.skip_ws();
    if !(p.at_end() || p.peek() == Some('#')) {
        return Err(p.error("unexpected text after `.`"));
    }
    Ok(Some([subject, predicate, object]))
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> LineError {
        LineError {
            column: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn iri(&mut self) -> Result<String, LineError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(out),
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c <= ' ' || "<\"{}|^`".contains(c) => {
                    self.pos -= 1;
                    return Err(self.error("invalid character in IRI"));
                }
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
    }

    fn unicode_escape(&mut self) -> Result<char, LineError> {
        let digits = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape")),
        };
        let start = self.pos;
        let hex: String = self.chars.iter().skip(start).take(digits).collect();
        if hex.len() != digits {
            return Err(self.error("truncated unicode escape"));
        }
        self.pos += digits;
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| LineError {
                column: start + 1,
                message: format!("invalid unicode escape `{hex}`"),
            })
    }

    fn blank(&mut self) -> Result<DataValue, LineError> {
        if self.chars.get(self.pos + 1) != Some(&':') {
            return Err(self.error("expected `_:` blank node label"));
        }
        self.pos += 2;
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || "_-.".contains(c))
        {
            self.pos += 1;
        }
        while self.pos > start && self.chars[self.pos - 1] == '.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err(self.error("empty blank node label"));
        }
        let label: String = self.chars[start..self.pos].iter().collect();
        Ok(DataValue::Iri(format!("{BLANK_PREFIX}{label}")))
    }

    fn literal(&mut self) -> Result<DataValue, LineError> {
        self.bump();
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u' | 'U') => {
                            text.push(self.unicode_escape()?);
                            continue;
                        }
                        _ => return Err(self.error("invalid escape in literal")),
                    };
                    self.pos += 1;
                    text.push(c);
                }
                Some(c) => text.push(c),
                None => return Err(self.error("unterminated literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let lang: String = self.chars[start..self.pos].iter().collect();
                if !lang.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(LineError {
                        column: start + 1,
                        message: "invalid language tag".into(),
                    });
                }
                Ok(DataValue::LangString { text, lang })
            }
            Some('^') => {
                let column = self.pos + 1;
                if self.chars.get(self.pos + 1) != Some(&'^') {
                    return Err(self.error("expected `^^`"));
                }
                self.pos += 2;
                if self.peek() != Some('<') {
                    return Err(self.error("expected datatype IRI"));
                }
                let datatype = self.iri()?;
                typed(text, &datatype).ok_or_else(|| LineError {
                    column,
                    message: format!("invalid lexical form for <{datatype}>"),
                })
            }
            _ => Ok(DataValue::String(text)),
        }
    }
}

fn typed(text: String, datatype: &str) -> Option<DataValue> {
    match datatype.strip_prefix(XSD) {
        Some("integer") => parse_integer(&text).map(DataValue::Integer),
        Some("double" | "decimal") => parse_decimal(&text).and_then(DataValue::double),
        _ => Some(DataValue::String(text)),
    }
}

/// Parses every line, continuing past errors. Yields `(line, result)` for
/// each non-blank line.
pub fn parse_all(
    input: impl BufRead,
) -> impl Iterator<Item = std::io::Result<(u64, Result<[DataValue; 3], LineError>)>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(index, line)| {
            let line_no = index as u64 + 1;
            match line {
                Err(e) => Some(Err(e)),
                Ok(text) => match parse_line(&text) {
                    Ok(None) => None,
                    Ok(Some(triple)) => Some(Ok((line_no, Ok(triple)))),
                    Err(e) => Some(Ok((line_no, Err(e)))),
                },
            }
        })
}

/// Loads a file, stopping at the first malformed line.
pub fn read(
    input: impl BufRead,
    path: &Path,
    predicate: &str,
    types: &[PositionType],
) -> Result<Vec<Vec<DataValue>>, IoError> {
    let mut rows = Vec::new();
    for item in parse_all(input) {
        let (line, parsed) = item.map_err(|e| IoError::io(path, e))?;
        let triple = parsed.map_err(|e| IoError::Syntax {
            path: path.to_path_buf(),
            line,
            column: e.column as u64,
            message: e.message,
        })?;
        let row = triple
            .into_iter()
            .zip(types)
            .enumerate()
            .map(|(position, (value, ty))| coerce_at(value, *ty, path, line, predicate, position))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Renders a value as an N-Triples term.
pub fn write_term(out: &mut String, value: &DataValue, null_label: impl Fn(u64) -> u64) {
    match value {
        DataValue::Iri(iri) if iri.starts_with(BLANK_PREFIX) => out.push_str(iri),
        DataValue::Iri(iri) => {
            out.push('<');
            for c in iri.chars() {
                if c <= ' ' || "<>\"{}|^`\\".contains(c) {
                    out.push_str(&format!("\\u{:04X}", c as u32));
                } else {
                    out.push(c);
                }
            }
            out.push('>');
        }
        DataValue::String(text) => quote(out, text),
        DataValue::LangString { text, lang } => {
            quote(out, text);
            out.push('@');
            out.push_str(lang);
        }
        DataValue::Integer(i) => {
            out.push_str(&format!("\"{i}\"^^<{XSD}integer>"));
        }
        DataValue::Double(d) => {
            out.push_str(&format!("\"{d}\"^^<{XSD}double>"));
        }
        DataValue::Null(k) => out.push_str(&format!("_:n{}", null_label(*k))),
    }
}

fn quote(out: &mut String, text: &str) {
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}
