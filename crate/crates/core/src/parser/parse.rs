//! Recursive-descent parser for rule files.
//!
//! The grammar is scannerless: `<` starts an IRI where a term is expected and
//! is a comparison operator after a term; `!` starts an existential variable
//! unless followed by `=`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{
    Atom, ComparisonOp, Constraint, Program, Rule, SourceDirective, SourceFormat, Term,
};
use crate::value::{DataValue, PositionType, TypeDeclaration};

/// Syntax error with a 1-based position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}

type Result<T> = core::result::Result<T, ParseError>;

/// Parses program text without running the safety checks.
pub fn parse_unchecked(text: &str) -> Result<Program> {
    let mut parser = Parser::new(text);
    let mut program = Program::default();
    loop {
        parser.skip_trivia();
        if parser.at_eof() {
            return Ok(program);
        }
        parser.statement(&mut program)?;
    }
}

/// Parses a single constant such as `"a"`, `42`, `<http://x>` or `abc`.
/// Surrounding whitespace is ignored.
pub fn parse_constant(text: &str) -> Result<DataValue> {
    let mut parser = Parser::new(text);
    parser.skip_trivia();
    let value = parser.constant()?;
    parser.skip_trivia();
    if !parser.at_eof() {
        return Err(parser.expected("end of input"));
    }
    Ok(value)
}

/// Parses a file of ground atoms `p(c1, ..., cn) .`.
pub fn parse_ground_atoms(text: &str) -> Result<Vec<(usize, Atom)>> {
    let mut parser = Parser::new(text);
    let mut atoms = Vec::new();
    loop {
        parser.skip_trivia();
        if parser.at_eof() {
            return Ok(atoms);
        }
        let (line, column) = (parser.line, parser.column);
        let atom = parser.atom()?;
        if !atom.is_ground() {
            return Err(ParseError {
                line,
                column,
                message: format!("fact `{atom}` is not ground"),
            });
        }
        parser.skip_trivia();
        parser.expect_char('.')?;
        atoms.push((line, atom));
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        self.rest().chars().nth(1)
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        self.error(format!("expected {what}, found {found}"))
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect_char(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("`{c}`")))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
        &self.text[start..self.pos]
    }

    /// `[A-Za-z][A-Za-z0-9_-]*`
    fn identifier(&mut self, what: &str) -> Result<&'a str> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                Ok(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            }
            _ => Err(self.expected(what)),
        }
    }

    fn variable_name(&mut self) -> Result<String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                Ok(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_').to_string())
            }
            _ => Err(self.expected("variable name")),
        }
    }

    fn statement(&mut self, program: &mut Program) -> Result<()> {
        if self.peek() == Some('@') {
            return self.directive(program);
        }
        let start = (self.line, self.column);
        let head = self.atom_list()?;
        self.skip_trivia();
        if self.eat(":-") {
            let rule = self.body(head)?;
            program.rules.push(rule);
            return Ok(());
        }
        self.expect_char('.')
            .map_err(|_| self.expected("`:-`, `,` or `.`"))?;
        for atom in head {
            if !atom.is_ground() {
                return Err(ParseError {
                    line: start.0,
                    column: start.1,
                    message: format!("fact `{atom}` is not ground"),
                });
            }
            program.facts.push(atom);
        }
        Ok(())
    }

    fn directive(&mut self, program: &mut Program) -> Result<()> {
        self.expect_char('@')?;
        let name = self.identifier("directive name")?;
        self.skip_trivia();
        match name {
            "declare" => {
                let predicate = self.identifier("predicate name")?.to_string();
                self.skip_trivia();
                self.expect_char('(')?;
                let mut positions = Vec::new();
                loop {
                    self.skip_trivia();
                    let type_name = self.identifier("type name")?;
                    let ty = PositionType::from_name(type_name).ok_or_else(|| {
                        self.error(format!("unknown type `{type_name}`"))
                    })?;
                    positions.push(ty);
                    self.skip_trivia();
                    if self.peek() == Some(',') {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect_char(')')?;
                self.skip_trivia();
                self.expect_char('.')?;
                program
                    .declarations
                    .push(TypeDeclaration::new(predicate, positions));
                Ok(())
            }
            "source" => {
                let predicate = self.identifier("predicate name")?.to_string();
                self.skip_trivia();
                self.expect_char('[')?;
                self.skip_trivia();
                let digits = self.take_while(|c| c.is_ascii_digit());
                let arity = digits
                    .parse::<usize>()
                    .map_err(|_| self.expected("arity"))?;
                self.skip_trivia();
                self.expect_char(']')?;
                self.skip_trivia();
                self.expect_char(':')?;
                self.skip_trivia();
                let format_name = self.identifier("source format")?;
                let format = SourceFormat::from_directive_name(format_name).ok_or_else(|| {
                    self.error(format!("unknown source format `{format_name}`"))
                })?;
                self.skip_trivia();
                self.expect_char('(')?;
                self.skip_trivia();
                let path = self.quoted_string()?;
                self.skip_trivia();
                self.expect_char(')')?;
                self.skip_trivia();
                self.expect_char('.')?;
                program.sources.push(SourceDirective {
                    predicate,
                    arity,
                    format,
                    path,
                });
                Ok(())
            }
            other => Err(self.error(format!("unknown directive `@{other}`"))),
        }
    }

    fn atom_list(&mut self) -> Result<Vec<Atom>> {
        let mut atoms = Vec::new();
        loop {
            self.skip_trivia();
            atoms.push(self.atom()?);
            self.skip_trivia();
            if self.peek() == Some(',') {
                self.bump();
            } else {
                return Ok(atoms);
            }
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let predicate = self.identifier("predicate name")?.to_string();
        self.skip_trivia();
        self.expect_char('(')?;
        let mut terms = Vec::new();
        self.skip_trivia();
        if self.eat(")") {
            return Ok(Atom { predicate, terms });
        }
        loop {
            self.skip_trivia();
            terms.push(self.term()?);
            self.skip_trivia();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(')') => {
                    self.bump();
                    return Ok(Atom { predicate, terms });
                }
                _ => return Err(self.expected("`,` or `)`")),
            }
        }
    }

    fn body(&mut self, head: Vec<Atom>) -> Result<Rule> {
        let mut rule = Rule::new(head, Vec::new());
        loop {
            self.skip_trivia();
            if self.peek() == Some('~') {
                self.bump();
                self.skip_trivia();
                rule.negative.push(self.atom()?);
            } else if self.at_atom_start() {
                rule.positive.push(self.atom()?);
            } else {
                rule.constraints.push(self.constraint()?);
            }
            self.skip_trivia();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('.') => {
                    self.bump();
                    return Ok(rule);
                }
                _ => return Err(self.expected("`,` or `.`")),
            }
        }
    }

    /// An identifier followed by `(`.
    fn at_atom_start(&self) -> bool {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() => {}
            _ => return false,
        }
        let after = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .map_or(rest.len(), |(i, _)| i);
        rest[after..].trim_start().starts_with('(')
    }

    fn constraint(&mut self) -> Result<Constraint> {
        let (line, column) = (self.line, self.column);
        let left = self.term()?;
        self.skip_trivia();
        let op = self.comparison_op()?;
        self.skip_trivia();
        let right = self.term()?;
        if !left.is_variable() && !right.is_variable() {
            return Err(ParseError {
                line,
                column,
                message: "comparison needs at least one variable".to_string(),
            });
        }
        Ok(Constraint { left, op, right })
    }

    fn comparison_op(&mut self) -> Result<ComparisonOp> {
        let op = if self.eat("<=") {
            ComparisonOp::Le
        } else if self.eat(">=") {
            ComparisonOp::Ge
        } else if self.eat("!=") {
            ComparisonOp::Ne
        } else if self.eat("<") {
            ComparisonOp::Lt
        } else if self.eat(">") {
            ComparisonOp::Gt
        } else if self.eat("=") {
            ComparisonOp::Eq
        } else {
            return Err(self.expected("comparison operator"));
        };
        Ok(op)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some('?') => {
                self.bump();
                Ok(Term::Universal(self.variable_name()?))
            }
            Some('!') if self.peek_second() != Some('=') => {
                self.bump();
                Ok(Term::Existential(self.variable_name()?))
            }
            _ => self.constant().map(Term::Constant),
        }
    }

    fn constant(&mut self) -> Result<DataValue> {
        match self.peek() {
            Some('"') => {
                let text = self.quoted_string()?;
                if self.peek() == Some('@') {
                    self.bump();
                    let lang = self.language_tag()?;
                    Ok(DataValue::LangString { text, lang })
                } else {
                    Ok(DataValue::String(text))
                }
            }
            Some('<') => {
                self.bump();
                let iri = self.take_while(|c| c != '>' && c != '\n');
                let iri = iri.to_string();
                self.expect_char('>')?;
                Ok(DataValue::Iri(iri))
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                Ok(DataValue::Iri(self.identifier("constant")?.to_string()))
            }
            _ => Err(self.expected("term")),
        }
    }

    fn language_tag(&mut self) -> Result<String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => Ok(self
                .take_while(|c| c.is_ascii_alphanumeric() || c == '-')
                .to_string()),
            _ => Err(self.expected("language tag")),
        }
    }

    fn number(&mut self) -> Result<DataValue> {
        let (line, column) = (self.line, self.column);
        let start = self.pos;
        if matches!(self.peek(), Some('-' | '+')) {
            self.bump();
        }
        if self.take_while(|c| c.is_ascii_digit()).is_empty() {
            return Err(self.expected("digit"));
        }
        let mut is_double = false;
        if self.peek() == Some('.') && self.peek_second().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            self.take_while(|c| c.is_ascii_digit());
            is_double = true;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let rest = &self.rest()[1..];
            let digits = rest.strip_prefix(['+', '-']).unwrap_or(rest);
            if digits.starts_with(|c: char| c.is_ascii_digit()) {
                self.bump();
                if matches!(self.peek(), Some('-' | '+')) {
                    self.bump();
                }
                self.take_while(|c| c.is_ascii_digit());
                is_double = true;
            }
        }
        let token = &self.text[start..self.pos];
        let out_of_range = || ParseError {
            line,
            column,
            message: format!("number `{token}` is out of range"),
        };
        if is_double {
            let value: f64 = token.parse().map_err(|_| out_of_range())?;
            DataValue::double(value).ok_or_else(out_of_range)
        } else {
            token
                .parse::<i64>()
                .map(DataValue::Integer)
                .map_err(|_| out_of_range())
        }
    }

    fn quoted_string(&mut self) -> Result<String> {
        self.expect_char('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some(c) => return Err(self.error(format!("unknown escape `\\{c}`"))),
                    None => return Err(self.error("unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
