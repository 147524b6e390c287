//! Join planning.
//!
//! Variables are ordered by the number of positive atoms they occur in
//! (descending), ties broken by first occurrence in the rule written in
//! canonical form: head atoms as written, then positive atoms sorted. Body
//! atoms are kept in that sorted order, so permuting the body of a rule
//! yields the same plan.

use alloc::string::String;
use alloc::vec::Vec;

use crate::parser::{Atom, ComparisonOp, Constraint, Rule, Term};
use crate::value::DataValue;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanTerm {
    /// Index into [`JoinPlan::variables`].
    Variable(usize),
    Constant(DataValue),
}

/// How one body atom feeds the join.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomBinding {
    pub predicate: String,
    /// Position of the atom in the rule as written.
    pub source_index: usize,
    /// One entry per atom position.
    pub terms: Vec<PlanTerm>,
    /// Attribute order the input trie must have: constant positions first,
    /// then variable positions by variable index.
    pub trie_order: Vec<usize>,
}

impl AtomBinding {
    fn new(atom: &Atom, source_index: usize, variables: &[String]) -> Self {
        let terms: Vec<PlanTerm> = atom
            .terms
            .iter()
            .map(|term| match term {
                Term::Constant(value) => PlanTerm::Constant(value.clone()),
                Term::Universal(name) | Term::Existential(name) => PlanTerm::Variable(
                    variables
                        .iter()
                        .position(|v| v == name)
                        .expect("body variable missing from plan"),
                ),
            })
            .collect();
        let mut trie_order: Vec<usize> = (0..terms.len()).collect();
        trie_order.sort_by_key(|&pos| match &terms[pos] {
            PlanTerm::Constant(_) => (0, 0, pos),
            PlanTerm::Variable(var) => (1, *var, pos),
        });
        Self {
            predicate: atom.predicate.clone(),
            source_index,
            terms,
            trie_order,
        }
    }

    /// The term at each trie level.
    pub fn levels(&self) -> impl Iterator<Item = &PlanTerm> {
        self.trie_order.iter().map(|&pos| &self.terms[pos])
    }

    pub fn constant_count(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| matches!(t, PlanTerm::Constant(_)))
            .count()
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().filter_map(|t| match t {
            PlanTerm::Variable(v) => Some(*v),
            PlanTerm::Constant(_) => None,
        })
    }
}

/// A constraint attached to the depth of its deepest variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledConstraint {
    pub left: PlanTerm,
    pub op: ComparisonOp,
    pub right: PlanTerm,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinPlan {
    /// Global variable order; bindings are produced in this column order.
    pub variables: Vec<String>,
    pub positive: Vec<AtomBinding>,
    /// Anti-joined once every variable is bound.
    pub negative: Vec<AtomBinding>,
    pub constraints: Vec<ScheduledConstraint>,
}

impl JoinPlan {
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }
}

fn sorted_with_index(atoms: &[Atom]) -> Vec<(usize, &Atom)> {
    let mut indexed: Vec<(usize, &Atom)> = atoms.iter().enumerate().collect();
    indexed.sort_by(|a, b| a.1.cmp(b.1));
    indexed
}

pub fn plan(rule: &Rule) -> JoinPlan {
    let positive = sorted_with_index(&rule.positive);
    let negative = sorted_with_index(&rule.negative);

    // (name, atom count, first occurrence)
    let mut stats: Vec<(String, usize, usize)> = Vec::new();
    let mut occurrence = 0usize;
    let mut note = |name: &str, stats: &mut Vec<(String, usize, usize)>| {
        if !stats.iter().any(|(n, _, _)| n == name) {
            stats.push((name.into(), 0, occurrence));
        }
        occurrence += 1;
    };
    for atom in &rule.head {
        for name in atom.universal_variables() {
            note(name, &mut stats);
        }
    }
    for (_, atom) in &positive {
        for name in atom.universal_variables() {
            note(name, &mut stats);
        }
    }
    for (_, atom) in &positive {
        let mut counted: Vec<&str> = Vec::new();
        for name in atom.universal_variables() {
            if !counted.contains(&name) {
                counted.push(name);
                if let Some(entry) = stats.iter_mut().find(|(n, _, _)| n == name) {
                    entry.1 += 1;
                }
            }
        }
    }
    // Head-only variables are unsafe and never reach planning.
    stats.retain(|(_, count, _)| *count > 0);
    stats.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let variables: Vec<String> = stats.into_iter().map(|(name, _, _)| name).collect();

    let positive = positive
        .into_iter()
        .map(|(index, atom)| AtomBinding::new(atom, index, &variables))
        .collect();
    let negative = negative
        .into_iter()
        .map(|(index, atom)| AtomBinding::new(atom, index, &variables))
        .collect();

    let mut constraints: Vec<&Constraint> = rule.constraints.iter().collect();
    constraints.sort();
    let constraints = constraints
        .into_iter()
        .map(|c| {
            let to_plan = |term: &Term| match term {
                Term::Constant(value) => PlanTerm::Constant(value.clone()),
                Term::Universal(name) | Term::Existential(name) => PlanTerm::Variable(
                    variables
                        .iter()
                        .position(|v| v == name)
                        .expect("constraint variable missing from plan"),
                ),
            };
            let left = to_plan(&c.left);
            let right = to_plan(&c.right);
            let depth = [&left, &right]
                .iter()
                .filter_map(|t| match t {
                    PlanTerm::Variable(v) => Some(*v),
                    PlanTerm::Constant(_) => None,
                })
                .max()
                .unwrap_or(0);
            ScheduledConstraint {
                left,
                op: c.op,
                right,
                depth,
            }
        })
        .collect();

    JoinPlan {
        variables,
        positive,
        negative,
        constraints,
    }
}
