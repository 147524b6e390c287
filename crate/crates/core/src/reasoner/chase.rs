//! Rule heads: plain instantiation and the restricted chase.
//!
//! For an existential rule a binding of the frontier (the universal head
//! variables) only fires when no assignment of the existential variables
//! maps the whole head conjunction into the known facts. Known facts are the
//! full tries plus whatever the current iteration has derived so far.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::state::{Pending, Relation, Version};
use crate::parser::{Atom, Term};
use crate::storage::{identity_order, Trie};
use crate::value::{DataValue, Dictionary, ValueId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum HeadTerm {
    /// Index into the frontier tuple.
    Frontier(usize),
    Existential(usize),
    Constant(ValueId),
}

#[derive(Clone, Debug)]
pub(crate) struct HeadAtom {
    pub predicate: String,
    pub terms: Vec<HeadTerm>,
    /// Frontier and constant positions first, then existential positions.
    pub lookup_order: Vec<usize>,
    /// Number of leading positions of `lookup_order` that are fixed by the
    /// frontier.
    pub bound_prefix: usize,
}

/// Head of a rule, compiled against its frontier.
#[derive(Clone, Debug)]
pub(crate) struct RuleHead {
    pub atoms: Vec<HeadAtom>,
    /// Plan variable index of each frontier position.
    pub frontier: Vec<usize>,
    pub existentials: usize,
}

impl RuleHead {
    pub fn compile(head: &[Atom], variables: &[String], dict: &mut Dictionary) -> Self {
        let mut frontier_names: Vec<&str> = Vec::new();
        let mut existential_names: Vec<&str> = Vec::new();
        let mut atoms = Vec::new();
        for atom in head {
            let terms: Vec<HeadTerm> = atom
                .terms
                .iter()
                .map(|term| match term {
                    Term::Universal(name) => HeadTerm::Frontier(position_or_push(
                        &mut frontier_names,
                        name,
                    )),
                    Term::Existential(name) => HeadTerm::Existential(position_or_push(
                        &mut existential_names,
                        name,
                    )),
                    Term::Constant(value) => HeadTerm::Constant(dict.intern(value.clone())),
                })
                .collect();
            let mut lookup_order: Vec<usize> = (0..terms.len()).collect();
            lookup_order.sort_by_key(|&p| matches!(terms[p], HeadTerm::Existential(_)));
            let bound_prefix = terms
                .iter()
                .filter(|t| !matches!(t, HeadTerm::Existential(_)))
                .count();
            atoms.push(HeadAtom {
                predicate: atom.predicate.clone(),
                terms,
                lookup_order,
                bound_prefix,
            });
        }
        let frontier = frontier_names
            .iter()
            .map(|name| {
                variables
                    .iter()
                    .position(|v| v == name)
                    .expect("head variable bound by the body")
            })
            .collect();
        RuleHead {
            atoms,
            frontier,
            existentials: existential_names.len(),
        }
    }

    pub fn is_existential(&self) -> bool {
        self.existentials > 0
    }

    /// Makes the lookup orders of all head atoms available.
    pub fn prepare(&self, relations: &mut BTreeMap<String, Relation>, dict: &Dictionary) {
        for atom in &self.atoms {
            if let Some(relation) = relations.get_mut(&atom.predicate) {
                relation.prepare(Version::Full, &atom.lookup_order, dict);
            }
        }
    }

    /// Projects bindings onto the frontier; sorted and duplicate free.
    pub fn frontier_rows(&self, bindings: &Trie, dict: &Dictionary) -> Trie {
        Trie::from_rows(
            self.frontier.len(),
            bindings
                .rows()
                .map(|row| self.frontier.iter().map(|&v| row[v]).collect::<Vec<_>>()),
            identity_order(self.frontier.len()),
            dict,
        )
        .expect("frontier rows have frontier width")
    }

    pub fn instantiate(&self, atom: &HeadAtom, frontier: &[ValueId], nulls: &[ValueId]) -> Vec<ValueId> {
        atom.terms
            .iter()
            .map(|t| match *t {
                HeadTerm::Frontier(i) => frontier[i],
                HeadTerm::Existential(i) => nulls[i],
                HeadTerm::Constant(id) => id,
            })
            .collect()
    }

    /// Whether some assignment of the existential variables maps every head
    /// atom to a known fact.
    pub fn is_satisfied(
        &self,
        frontier: &[ValueId],
        relations: &BTreeMap<String, Relation>,
        pending: &Pending,
        dict: &Dictionary,
    ) -> bool {
        let mut assignment = vec![None; self.existentials];
        self.search(0, frontier, &mut assignment, relations, pending, dict)
    }

    fn search(
        &self,
        atom_index: usize,
        frontier: &[ValueId],
        assignment: &mut Vec<Option<ValueId>>,
        relations: &BTreeMap<String, Relation>,
        pending: &Pending,
        dict: &Dictionary,
    ) -> bool {
        let Some(atom) = self.atoms.get(atom_index) else {
            return true;
        };
        let pattern: Vec<Option<ValueId>> = atom
            .terms
            .iter()
            .map(|t| match *t {
                HeadTerm::Frontier(i) => Some(frontier[i]),
                HeadTerm::Constant(id) => Some(id),
                HeadTerm::Existential(i) => assignment[i],
            })
            .collect();

        let mut candidates: Vec<Vec<ValueId>> = Vec::new();
        if let Some(relation) = relations.get(&atom.predicate) {
            let trie = relation.view(Version::Full, &atom.lookup_order);
            let prefix: Vec<ValueId> = atom.lookup_order[..atom.bound_prefix]
                .iter()
                .map(|&p| pattern[p].expect("bound position"))
                .collect();
            let mut collect = |suffix: &[ValueId]| {
                let mut row = vec![ValueId(0); atom.terms.len()];
                for (level, &p) in atom.lookup_order.iter().enumerate() {
                    row[p] = if level < prefix.len() {
                        prefix[level]
                    } else {
                        suffix[level - prefix.len()]
                    };
                }
                if row
                    .iter()
                    .zip(&pattern)
                    .all(|(v, p)| p.is_none_or(|p| p == *v))
                {
                    candidates.push(row);
                }
            };
            if prefix.is_empty() {
                let mut rows = trie.rows();
                while let Some(row) = rows.next_row() {
                    collect(row);
                }
            } else if let Some(node) = trie.descend(&prefix, dict) {
                trie.for_each_suffix(prefix.len() - 1, node, collect);
            }
        }
        if let Some(rows) = pending.get(&atom.predicate) {
            candidates.extend(rows.matching(&pattern).cloned());
        }

        for row in candidates {
            let saved = assignment.clone();
            let mut consistent = true;
            for (position, term) in atom.terms.iter().enumerate() {
                if let HeadTerm::Existential(i) = *term {
                    match assignment[i] {
                        None => assignment[i] = Some(row[position]),
                        Some(v) if v != row[position] => {
                            consistent = false;
                            break;
                        }
                        Some(_) => {}
                    }
                }
            }
            if consistent
                && self.search(atom_index + 1, frontier, assignment, relations, pending, dict)
            {
                return true;
            }
            *assignment = saved;
        }
        false
    }
}

fn position_or_push<'a>(names: &mut Vec<&'a str>, name: &'a str) -> usize {
    match names.iter().position(|n| *n == name) {
        Some(i) => i,
        None => {
            names.push(name);
            names.len() - 1
        }
    }
}

/// Mints a fresh labelled null.
pub(crate) fn mint_null(dict: &mut Dictionary, next_null: &mut u64) -> ValueId {
    let id = dict.intern(DataValue::Null(*next_null));
    *next_null += 1;
    id
}
