//! Syntax tree of rule programs.
//!
//! `Display` on [`Program`] renders text that parses back to an equal
//! program.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::value::{DataValue, TypeDeclaration};

#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Term {
    /// `?name`
    Universal(String),
    /// `!name`, only allowed in rule heads.
    Existential(String),
    Constant(DataValue),
}

impl Term {
    pub fn universal(name: impl Into<String>) -> Self {
        Term::Universal(name.into())
    }

    pub fn existential(name: impl Into<String>) -> Self {
        Term::Existential(name.into())
    }

    pub fn constant(value: impl Into<DataValue>) -> Self {
        Term::Constant(value.into())
    }

    pub fn as_universal(&self) -> Option<&str> {
        match self {
            Term::Universal(name) => Some(name),
            _ => None,
        }
    }

    pub fn is_variable(&self) -> bool {
        !matches!(self, Term::Constant(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Universal(name) => write!(f, "?{name}"),
            Term::Existential(name) => write!(f, "!{name}"),
            Term::Constant(value) => write!(f, "{value}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, terms: Vec<Term>) -> Self {
        Self {
            predicate: predicate.into(),
            terms,
        }
    }

    pub fn arity(&self) -> usize {
        self.terms.len()
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| !t.is_variable())
    }

    pub fn universal_variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_universal)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{term}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum ComparisonOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl ComparisonOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ComparisonOp::Eq => "=",
            ComparisonOp::Ne => "!=",
            ComparisonOp::Lt => "<",
            ComparisonOp::Le => "<=",
            ComparisonOp::Gt => ">",
            ComparisonOp::Ge => ">=",
        }
    }
}

/// A comparison built-in such as `?age > 200`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Constraint {
    pub left: Term,
    pub op: ComparisonOp,
    pub right: Term,
}

impl Constraint {
    pub fn new(left: Term, op: ComparisonOp, right: Term) -> Self {
        Self { left, op, right }
    }

    pub fn terms(&self) -> [&Term; 2] {
        [&self.left, &self.right]
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Rule {
    pub head: Vec<Atom>,
    pub positive: Vec<Atom>,
    pub negative: Vec<Atom>,
    pub constraints: Vec<Constraint>,
}

impl Rule {
    pub fn new(head: Vec<Atom>, positive: Vec<Atom>) -> Self {
        Self {
            head,
            positive,
            negative: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn with_negative(mut self, negative: Vec<Atom>) -> Self {
        self.negative = negative;
        self
    }

    pub fn with_constraints(mut self, constraints: Vec<Constraint>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn is_existential(&self) -> bool {
        self.head
            .iter()
            .flat_map(|a| &a.terms)
            .any(|t| matches!(t, Term::Existential(_)))
    }

    /// Existential variable names in first-occurrence order.
    pub fn existential_variables(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for term in self.head.iter().flat_map(|a| &a.terms) {
            if let Term::Existential(name) = term {
                if !names.contains(&name.as_str()) {
                    names.push(name);
                }
            }
        }
        names
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str(" :- ")?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            if first {
                first = false;
                Ok(())
            } else {
                f.write_str(", ")
            }
        };
        for atom in &self.positive {
            sep(f)?;
            write!(f, "{atom}")?;
        }
        for atom in &self.negative {
            sep(f)?;
            write!(f, "~{atom}")?;
        }
        for constraint in &self.constraints {
            sep(f)?;
            write!(f, "{constraint}")?;
        }
        f.write_str(" .")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SourceFormat {
    Csv,
    Tsv,
    NTriples,
    Facts,
}

impl SourceFormat {
    pub fn directive_name(self) -> &'static str {
        match self {
            SourceFormat::Csv => "load-csv",
            SourceFormat::Tsv => "load-tsv",
            SourceFormat::NTriples => "load-ntriples",
            SourceFormat::Facts => "load-facts",
        }
    }

    pub fn from_directive_name(name: &str) -> Option<Self> {
        match name {
            "load-csv" => Some(SourceFormat::Csv),
            "load-tsv" => Some(SourceFormat::Tsv),
            "load-ntriples" | "load-rdf" => Some(SourceFormat::NTriples),
            "load-facts" => Some(SourceFormat::Facts),
            _ => None,
        }
    }
}

/// `@source pred[arity]: load-csv("path") .`
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceDirective {
    pub predicate: String,
    pub arity: usize,
    pub format: SourceFormat,
    pub path: String,
}

impl SourceDirective {
    /// Gzip compression is detected from the path suffix.
    pub fn is_gzip(&self) -> bool {
        self.path.ends_with(".gz")
    }
}

impl fmt::Display for SourceDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "@source {}[{}]: {}(",
            self.predicate,
            self.arity,
            self.format.directive_name()
        )?;
        crate::value::write_quoted(f, &self.path)?;
        f.write_str(") .")
    }
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Program {
    pub declarations: Vec<TypeDeclaration>,
    pub sources: Vec<SourceDirective>,
    pub facts: Vec<Atom>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn declaration(&self, predicate: &str) -> Option<&TypeDeclaration> {
        self.declarations.iter().find(|d| d.predicate == predicate)
    }

    /// Predicates that occur in some rule head, in first-occurrence order.
    pub fn derived_predicates(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for atom in self.rules.iter().flat_map(|r| &r.head) {
            if !out.contains(&atom.predicate.as_str()) {
                out.push(&atom.predicate);
            }
        }
        out
    }

    /// Arity of a predicate from its declaration or any use.
    pub fn arity_of(&self, predicate: &str) -> Option<usize> {
        if let Some(decl) = self.declaration(predicate) {
            return Some(decl.arity());
        }
        if let Some(src) = self.sources.iter().find(|s| s.predicate == predicate) {
            return Some(src.arity);
        }
        self.facts
            .iter()
            .chain(self.rules.iter().flat_map(|r| {
                r.head.iter().chain(&r.positive).chain(&r.negative)
            }))
            .find(|a| a.predicate == predicate)
            .map(Atom::arity)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for decl in &self.declarations {
            write!(f, "@declare {}(", decl.predicate)?;
            for (i, ty) in decl.positions.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{ty}")?;
            }
            f.write_str(") .\n")?;
        }
        for source in &self.sources {
            writeln!(f, "{source}")?;
        }
        for fact in &self.facts {
            writeln!(f, "{fact} .")?;
        }
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}
