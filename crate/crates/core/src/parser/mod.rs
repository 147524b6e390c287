//! The rule language: syntax tree, parser and safety checks.

mod ast;
mod parse;
mod validate;

use core::fmt;

pub use ast::{
    Atom, ComparisonOp, Constraint, Program, Rule, SourceDirective, SourceFormat, Term,
};
pub use parse::{parse_constant, parse_ground_atoms, parse_unchecked, ParseError};
pub use validate::{check_safety, ValidationReport, VariablePlace, Violation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProgramError {
    Syntax(ParseError),
    Invalid(ValidationReport),
}

impl fmt::Display for ProgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramError::Syntax(err) => write!(f, "syntax error at {err}"),
            ProgramError::Invalid(report) => write!(f, "invalid program:\n{report}"),
        }
    }
}

impl core::error::Error for ProgramError {}

impl From<ParseError> for ProgramError {
    fn from(err: ParseError) -> Self {
        ProgramError::Syntax(err)
    }
}

/// Parses and validates a program.
pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let program = parse_unchecked(text)?;
    let report = check_safety(&program);
    if report.is_valid() {
        Ok(program)
    } else {
        Err(ProgramError::Invalid(report))
    }
}
