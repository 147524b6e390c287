//! Reference implementations used to check the engine: a nested-loop join,
//! a naive bottom-up evaluator with its own stratification, and a model
//! checker. They work directly on values and share no code with the engine
//! beyond the AST.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use nmo_core::parser::{Atom, ComparisonOp, Constraint, Program, Rule, Term};
use nmo_core::DataValue;

pub type Facts = BTreeMap<String, BTreeSet<Vec<DataValue>>>;
pub type Binding = HashMap<String, DataValue>;

fn numeric(value: &DataValue) -> Option<f64> {
    match value {
        DataValue::Integer(i) => Some(*i as f64),
        DataValue::Double(d) => Some(d.get()),
        _ => None,
    }
}

fn compare_numbers(a: &DataValue, b: &DataValue) -> Option<Ordering> {
    match (a, b) {
        (DataValue::Integer(x), DataValue::Integer(y)) => Some(x.cmp(y)),
        _ => numeric(a)?.partial_cmp(&numeric(b)?),
    }
}

pub fn holds(op: ComparisonOp, a: &DataValue, b: &DataValue) -> bool {
    match compare_numbers(a, b) {
        Some(o) => match op {
            ComparisonOp::Eq => o == Ordering::Equal,
            ComparisonOp::Ne => o != Ordering::Equal,
            ComparisonOp::Lt => o == Ordering::Less,
            ComparisonOp::Le => o != Ordering::Greater,
            ComparisonOp::Gt => o == Ordering::Greater,
            ComparisonOp::Ge => o != Ordering::Less,
        },
        None => match op {
            ComparisonOp::Eq => a == b,
            ComparisonOp::Ne => a != b,
            _ => false,
        },
    }
}

fn term_value<'a>(term: &'a Term, binding: &'a Binding) -> Option<&'a DataValue> {
    match term {
        Term::Constant(v) => Some(v),
        Term::Universal(name) | Term::Existential(name) => binding.get(name),
    }
}

/// Extends `binding` so that `atom` matches `row`.
fn unify(atom: &Atom, row: &[DataValue], binding: &Binding) -> Option<Binding> {
    let mut out = binding.clone();
    for (term, value) in atom.terms.iter().zip(row) {
        match term {
            Term::Constant(c) => {
                if c != value {
                    return None;
                }
            }
            Term::Universal(name) | Term::Existential(name) => match out.get(name) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    out.insert(name.clone(), value.clone());
                }
            },
        }
    }
    Some(out)
}

fn ground(atom: &Atom, binding: &Binding) -> Vec<DataValue> {
    atom.terms
        .iter()
        .map(|t| term_value(t, binding).expect("bound").clone())
        .collect()
}

fn constraint_holds(c: &Constraint, binding: &Binding) -> bool {
    let a = term_value(&c.left, binding).expect("bound");
    let b = term_value(&c.right, binding).expect("bound");
    holds(c.op, a, b)
}

/// All bindings of the body variables, by nested loops over the facts.
pub fn body_bindings(rule: &Rule, facts: &Facts) -> Vec<Binding> {
    let empty = BTreeSet::new();
    let mut bindings = vec![Binding::new()];
    for atom in &rule.positive {
        let rows = facts.get(&atom.predicate).unwrap_or(&empty);
        let mut next = Vec::new();
        for b in &bindings {
            for row in rows {
                if let Some(extended) = unify(atom, row, b) {
                    next.push(extended);
                }
            }
        }
        bindings = next;
    }
    bindings.retain(|b| {
        rule.constraints.iter().all(|c| constraint_holds(c, b))
            && rule.negative.iter().all(|n| {
                !facts
                    .get(&n.predicate)
                    .is_some_and(|rows| rows.contains(&ground(n, b)))
            })
    });
    bindings
}

/// Body bindings projected onto `variables`, sorted and unique.
pub fn nested_loop_join(rule: &Rule, facts: &Facts, variables: &[String]) -> Vec<Vec<DataValue>> {
    let set: BTreeSet<Vec<DataValue>> = body_bindings(rule, facts)
        .into_iter()
        .map(|b| variables.iter().map(|v| b[v].clone()).collect())
        .collect();
    set.into_iter().collect()
}

/// Predicate levels by fixpoint iteration, or `None` if unstratifiable.
pub fn levels(program: &Program) -> Option<BTreeMap<String, usize>> {
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    for rule in &program.rules {
        for atom in rule.head.iter().chain(&rule.positive).chain(&rule.negative) {
            level.entry(atom.predicate.clone()).or_insert(0);
        }
    }
    let bound = level.len() + 1;
    loop {
        let mut changed = false;
        for rule in &program.rules {
            let mut need = 0;
            for atom in &rule.positive {
                need = need.max(level[&atom.predicate]);
            }
            for atom in &rule.negative {
                need = need.max(level[&atom.predicate] + 1);
            }
            for atom in &rule.head {
                need = need.max(level[&atom.predicate]);
            }
            for atom in &rule.head {
                if level[&atom.predicate] < need {
                    level.insert(atom.predicate.clone(), need);
                    changed = true;
                }
            }
        }
        if level.values().any(|&l| l > bound) {
            return None;
        }
        if !changed {
            return Some(level);
        }
    }
}

/// Perfect model of a program without existential variables: naive
/// evaluation, one level at a time.
pub fn naive_model(program: &Program, input: &Facts) -> Option<Facts> {
    let levels = levels(program)?;
    let mut facts = input.clone();
    for fact in &program.facts {
        facts
            .entry(fact.predicate.clone())
            .or_default()
            .insert(ground(fact, &Binding::new()));
    }
    let top = levels.values().copied().max().unwrap_or(0);
    for level in 0..=top {
        let rules: Vec<&Rule> = program
            .rules
            .iter()
            .filter(|r| levels[&r.head[0].predicate] == level)
            .collect();
        loop {
            let mut new = Vec::new();
            for rule in &rules {
                assert!(!rule.is_existential(), "naive oracle has no chase");
                for b in body_bindings(rule, &facts) {
                    for head in &rule.head {
                        let row = ground(head, &b);
                        if !facts.get(&head.predicate).is_some_and(|s| s.contains(&row)) {
                            new.push((head.predicate.clone(), row));
                        }
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            for (p, row) in new {
                facts.entry(p).or_default().insert(row);
            }
        }
    }
    Some(facts)
}

fn head_satisfied(rule: &Rule, binding: &Binding, facts: &Facts, index: usize) -> bool {
    let Some(atom) = rule.head.get(index) else {
        return true;
    };
    let Some(rows) = facts.get(&atom.predicate) else {
        return false;
    };
    rows.iter().any(|row| {
        unify(atom, row, binding).is_some_and(|b| head_satisfied(rule, &b, facts, index + 1))
    })
}

/// Rules whose body holds for some binding while the head does not.
pub fn violated_rules(program: &Program, facts: &Facts) -> Vec<usize> {
    program
        .rules
        .iter()
        .enumerate()
        .filter(|(_, rule)| {
            body_bindings(rule, facts)
                .iter()
                .any(|b| !head_satisfied(rule, b, facts, 0))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Facts of every predicate in a reasoner state.
pub fn state_facts(state: &nmo_core::reasoner::ChaseState) -> Facts {
    state
        .relations()
        .map(|(name, _)| (name.to_string(), state.facts(name).into_iter().collect()))
        .filter(|(_, rows): &(String, BTreeSet<Vec<DataValue>>)| !rows.is_empty())
        .collect()
}

pub fn drop_empty(mut facts: Facts) -> Facts {
    facts.retain(|_, rows| !rows.is_empty());
    facts
}

/// Renames nulls by first appearance, predicates sorted, rows sorted with
/// nulls compared by their original label.
pub fn normalise_nulls(facts: &Facts) -> Facts {
    let mut names: HashMap<u64, u64> = HashMap::new();
    let mut out = Facts::new();
    for (p, rows) in facts {
        let mut renamed = BTreeSet::new();
        for row in rows {
            renamed.insert(
                row.iter()
                    .map(|v| match v {
                        DataValue::Null(k) => {
                            let next = names.len() as u64;
                            DataValue::Null(*names.entry(*k).or_insert(next))
                        }
                        other => other.clone(),
                    })
                    .collect(),
            );
        }
        out.insert(p.clone(), renamed);
    }
    out
}
