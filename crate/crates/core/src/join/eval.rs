//! Leapfrog triejoin over a [`JoinPlan`].

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use super::leapfrog::{leapfrog_search, TrieCursor};
use super::plan::{JoinPlan, PlanTerm, ScheduledConstraint};
use crate::parser::ComparisonOp;
use crate::storage::{identity_order, Trie, TrieBuilder};
use crate::value::{DataValue, Dictionary, ValueId};

/// An ordering comparison was applied to values that have no numeric
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintTypeError {
    pub left: DataValue,
    pub op: ComparisonOp,
    pub right: DataValue,
}

impl fmt::Display for ConstraintTypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cannot compare {} {} {}",
            self.left,
            self.op.symbol(),
            self.right
        )
    }
}

impl core::error::Error for ConstraintTypeError {}

/// Numbers compare numerically across integer and double. `=` and `!=` on
/// anything else compare value identity. Ordering comparisons involving a
/// non-number are type errors.
pub fn check_constraint(
    op: ComparisonOp,
    left: &DataValue,
    right: &DataValue,
) -> Result<bool, ConstraintTypeError> {
    let ordering = match (left.as_number(), right.as_number()) {
        (Some(a), Some(b)) => a.compare(b),
        _ => match op {
            ComparisonOp::Eq => return Ok(left == right),
            ComparisonOp::Ne => return Ok(left != right),
            _ => {
                return Err(ConstraintTypeError {
                    left: left.clone(),
                    op,
                    right: right.clone(),
                })
            }
        },
    };
    Ok(match op {
        ComparisonOp::Eq => ordering == Ordering::Equal,
        ComparisonOp::Ne => ordering != Ordering::Equal,
        ComparisonOp::Lt => ordering == Ordering::Less,
        ComparisonOp::Le => ordering != Ordering::Greater,
        ComparisonOp::Gt => ordering == Ordering::Greater,
        ComparisonOp::Ge => ordering != Ordering::Less,
    })
}

/// [`check_constraint`] with type errors read as `false`.
pub fn evaluate_constraint(op: ComparisonOp, left: &DataValue, right: &DataValue) -> bool {
    check_constraint(op, left, right).unwrap_or(false)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JoinStats {
    pub constraint_type_errors: usize,
    /// First offending comparison, kept for diagnostics.
    pub first_type_error: Option<ConstraintTypeError>,
}

/// Computes every binding of `plan.variables` that satisfies the positive
/// atoms, the constraints and none of the negated atoms.
///
/// `positive[i]` must be sorted in `plan.positive[i].trie_order`; negated
/// tries may use any attribute order. The result has identity attribute
/// order over the plan's variables.
pub fn leapfrog_join(
    plan: &JoinPlan,
    positive: &[&Trie],
    negative: &[&Trie],
    dict: &Dictionary,
) -> (Trie, JoinStats) {
    assert_eq!(positive.len(), plan.positive.len(), "one trie per positive atom");
    assert_eq!(negative.len(), plan.negative.len(), "one trie per negated atom");
    for (binding, trie) in plan.positive.iter().zip(positive) {
        assert_eq!(
            binding.trie_order,
            trie.order(),
            "trie for {} has the wrong attribute order",
            binding.predicate
        );
    }

    let width = plan.variables.len();
    let mut join = Join {
        plan,
        dict,
        cursors: positive.iter().map(|t| TrieCursor::new(t)).collect(),
        members: vec![Vec::new(); width],
        repeats: vec![Vec::new(); width],
        constraints_at: vec![Vec::new(); width],
        negated: Vec::new(),
        binding: vec![ValueId(0); width],
        out: TrieBuilder::new(identity_order(width)),
        stats: JoinStats::default(),
    };

    for (index, atom) in plan.positive.iter().enumerate() {
        let mut last_var = None;
        for term in atom.levels() {
            match term {
                PlanTerm::Constant(value) => {
                    let Some(id) = dict.lookup(value) else {
                        return join.finish();
                    };
                    let cursor = &mut join.cursors[index];
                    cursor.open();
                    cursor.seek(id, dict);
                    if cursor.at_end() || cursor.key() != id {
                        return join.finish();
                    }
                }
                PlanTerm::Variable(var) => {
                    if last_var == Some(*var) {
                        match join.repeats[*var].last_mut() {
                            Some((atom_index, count)) if *atom_index == index => *count += 1,
                            _ => join.repeats[*var].push((index, 1)),
                        }
                    } else {
                        join.members[*var].push(index);
                    }
                    last_var = Some(*var);
                }
            }
        }
    }
    for (index, constraint) in plan.constraints.iter().enumerate() {
        if width == 0 {
            // Constraints always mention a variable, so this cannot happen
            // for validated rules.
            continue;
        }
        join.constraints_at[constraint.depth].push(index);
    }
    for (binding, trie) in plan.negative.iter().zip(negative) {
        // A constant that was never interned cannot match anything.
        let mut row = Vec::with_capacity(binding.terms.len());
        let mut matchable = true;
        for &attr in trie.order() {
            row.push(match &binding.terms[attr] {
                PlanTerm::Variable(var) => NegatedTerm::Variable(*var),
                PlanTerm::Constant(value) => match dict.lookup(value) {
                    Some(id) => NegatedTerm::Constant(id),
                    None => {
                        matchable = false;
                        break;
                    }
                },
            });
        }
        if matchable {
            join.negated.push((trie, row));
        }
    }

    join.descend(0);
    join.finish()
}

enum NegatedTerm {
    Variable(usize),
    Constant(ValueId),
}

struct Join<'a, 'p> {
    plan: &'p JoinPlan,
    dict: &'a Dictionary,
    cursors: Vec<TrieCursor<'a>>,
    /// Atoms whose first level for the variable is intersected at its depth.
    members: Vec<Vec<usize>>,
    /// (atom, extra levels) for variables repeated within an atom.
    repeats: Vec<Vec<(usize, usize)>>,
    constraints_at: Vec<Vec<usize>>,
    /// Negated tries with their terms in trie attribute order.
    negated: Vec<(&'a Trie, Vec<NegatedTerm>)>,
    binding: Vec<ValueId>,
    out: TrieBuilder,
    stats: JoinStats,
}

impl Join<'_, '_> {
    fn finish(self) -> (Trie, JoinStats) {
        (self.out.finish(), self.stats)
    }

    fn descend(&mut self, depth: usize) {
        if depth == self.binding.len() {
            if self.negation_holds() {
                self.out.push_sorted(&self.binding);
            }
            return;
        }
        let members = core::mem::take(&mut self.members[depth]);
        for &m in &members {
            self.cursors[m].open();
        }
        while let Some(key) = leapfrog_search(&mut self.cursors, &members, self.dict) {
            self.binding[depth] = key;
            let (opened, consistent) = self.open_repeats(depth, key);
            if consistent && self.constraints_hold(depth) {
                self.descend(depth + 1);
            }
            for (atom, count) in opened {
                for _ in 0..count {
                    self.cursors[atom].up();
                }
            }
            self.cursors[members[0]].next();
        }
        for &m in &members {
            self.cursors[m].up();
        }
        self.members[depth] = members;
    }

    /// Opens the extra levels of atoms that repeat the variable at `depth`
    /// and checks they contain `key`.
    fn open_repeats(&mut self, depth: usize, key: ValueId) -> (Vec<(usize, usize)>, bool) {
        let mut opened = Vec::new();
        for &(atom, count) in &self.repeats[depth] {
            let cursor = &mut self.cursors[atom];
            let mut done = 0;
            let mut ok = true;
            for _ in 0..count {
                cursor.open();
                done += 1;
                cursor.seek(key, self.dict);
                if cursor.at_end() || cursor.key() != key {
                    ok = false;
                    break;
                }
            }
            opened.push((atom, done));
            if !ok {
                return (opened, false);
            }
        }
        (opened, true)
    }

    fn term_value(&self, term: &PlanTerm) -> DataValue {
        match term {
            PlanTerm::Variable(var) => self.dict.value(self.binding[*var]).clone(),
            PlanTerm::Constant(value) => value.clone(),
        }
    }

    fn constraints_hold(&mut self, depth: usize) -> bool {
        for i in 0..self.constraints_at[depth].len() {
            let constraint: &ScheduledConstraint = &self.plan.constraints[self.constraints_at[depth][i]];
            let left = self.term_value(&constraint.left);
            let right = self.term_value(&constraint.right);
            match check_constraint(constraint.op, &left, &right) {
                Ok(true) => {}
                Ok(false) => return false,
                Err(err) => {
                    self.stats.constraint_type_errors += 1;
                    if self.stats.first_type_error.is_none() {
                        self.stats.first_type_error = Some(err);
                    }
                    return false;
                }
            }
        }
        true
    }

    fn negation_holds(&self) -> bool {
        let mut row = Vec::new();
        self.negated.iter().all(|(trie, terms)| {
            row.clear();
            row.extend(terms.iter().map(|t| match t {
                NegatedTerm::Variable(var) => self.binding[*var],
                NegatedTerm::Constant(id) => *id,
            }));
            !trie.contains(&row, self.dict)
        })
    }
}

/// Sorts bindings for an [`IdOrder`]-independent comparison in tests and
/// oracles.
pub fn bindings_as_values(trie: &Trie, dict: &Dictionary) -> Vec<Vec<DataValue>> {
    let mut rows: Vec<Vec<DataValue>> = trie
        .tuples()
        .map(|row| row.iter().map(|id| dict.value(*id).clone()).collect())
        .collect();
    rows.sort();
    rows
}
