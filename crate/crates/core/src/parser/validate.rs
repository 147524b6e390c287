//! Safety and well-formedness checks for parsed programs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Atom, Program, SourceFormat, Term};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VariablePlace {
    Head,
    NegatedAtom,
    Constraint,
}

impl fmt::Display for VariablePlace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariablePlace::Head => "rule head",
            VariablePlace::NegatedAtom => "negated atom",
            VariablePlace::Constraint => "comparison",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A universal variable does not occur in any positive body atom.
    UnboundVariable {
        rule: usize,
        variable: String,
        place: VariablePlace,
    },
    ExistentialInBody { rule: usize, variable: String },
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    DuplicateDeclaration { predicate: String },
    NullaryDeclaration { predicate: String },
    /// N-Triples sources always produce triples.
    NTriplesArity { predicate: String, arity: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundVariable {
                rule,
                variable,
                place,
            } => write!(
                f,
                "rule {}: variable ?{variable} in {place} does not occur in a positive body atom",
                rule + 1
            ),
            Violation::ExistentialInBody { rule, variable } => write!(
                f,
                "rule {}: existential variable !{variable} may only occur in the head",
                rule + 1
            ),
            Violation::ArityMismatch {
                predicate,
                expected,
                found,
            } => write!(
                f,
                "predicate {predicate} is used with arity {found} but has arity {expected}"
            ),
            Violation::DuplicateDeclaration { predicate } => {
                write!(f, "predicate {predicate} is declared more than once")
            }
            Violation::NullaryDeclaration { predicate } => {
                write!(f, "declaration of {predicate} has no positions")
            }
            Violation::NTriplesArity { predicate, arity } => write!(
                f,
                "N-Triples source for {predicate} must have arity 3, not {arity}"
            ),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, violation) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{violation}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationReport {}

pub fn check_safety(program: &Program) -> ValidationReport {
    let mut violations = Vec::new();
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();

    for decl in &program.declarations {
        if decl.positions.is_empty() {
            violations.push(Violation::NullaryDeclaration {
                predicate: decl.predicate.clone(),
            });
        }
        if arities.insert(decl.predicate.clone(), decl.arity()).is_some() {
            violations.push(Violation::DuplicateDeclaration {
                predicate: decl.predicate.clone(),
            });
        }
    }

    let mut check_arity = |predicate: &str, found: usize, violations: &mut Vec<Violation>| {
        let expected = *arities.entry(predicate.into()).or_insert(found);
        if expected != found {
            violations.push(Violation::ArityMismatch {
                predicate: predicate.into(),
                expected,
                found,
            });
        }
    };

    for source in &program.sources {
        if source.format == SourceFormat::NTriples && source.arity != 3 {
            violations.push(Violation::NTriplesArity {
                predicate: source.predicate.clone(),
                arity: source.arity,
            });
        }
        check_arity(&source.predicate, source.arity, &mut violations);
    }
    let all_atoms = program.facts.iter().chain(
        program
            .rules
            .iter()
            .flat_map(|r| r.head.iter().chain(&r.positive).chain(&r.negative)),
    );
    for atom in all_atoms {
        check_arity(&atom.predicate, atom.arity(), &mut violations);
    }

    for (index, rule) in program.rules.iter().enumerate() {
        let positive: Vec<&str> = rule
            .positive
            .iter()
            .flat_map(Atom::universal_variables)
            .collect();
        let mut report_unbound = |term: &Term, place: VariablePlace, seen: &mut Vec<String>| {
            if let Term::Universal(name) = term {
                if !positive.contains(&name.as_str()) && !seen.contains(name) {
                    seen.push(name.clone());
                    violations.push(Violation::UnboundVariable {
                        rule: index,
                        variable: name.clone(),
                        place,
                    });
                }
            }
        };
        let mut seen = Vec::new();
        for term in rule.head.iter().flat_map(|a| &a.terms) {
            report_unbound(term, VariablePlace::Head, &mut seen);
        }
        for term in rule.negative.iter().flat_map(|a| &a.terms) {
            report_unbound(term, VariablePlace::NegatedAtom, &mut seen);
        }
        for term in rule.constraints.iter().flat_map(|c| c.terms()) {
            report_unbound(term, VariablePlace::Constraint, &mut seen);
        }

        let body_terms = rule
            .positive
            .iter()
            .chain(&rule.negative)
            .flat_map(|a| &a.terms)
            .chain(rule.constraints.iter().flat_map(|c| c.terms()));
        let mut existential_seen: Vec<&str> = Vec::new();
        for term in body_terms {
            if let Term::Existential(name) = term {
                if !existential_seen.contains(&name.as_str()) {
                    existential_seen.push(name);
                    violations.push(Violation::ExistentialInBody {
                        rule: index,
                        variable: name.clone(),
                    });
                }
            }
        }
    }

    ValidationReport { violations }
}
