//! Random programs over small integer domains, rendered as rule text.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const EDB: [(&str, usize); 3] = [("e0", 2), ("e1", 2), ("e2", 1)];
pub const LOWER: [(&str, usize); 3] = [("p0", 2), ("p1", 1), ("p2", 2)];
pub const UPPER: [(&str, usize); 2] = [("n0", 1), ("n1", 2)];
const VARS: [&str; 4] = ["x", "y", "z", "w"];
const OPS: [&str; 6] = ["=", "!=", "<", "<=", ">", ">="];

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    /// Add a second stratum whose rules may negate the first.
    pub two_strata: bool,
    pub constraints: bool,
    /// Allow negation of input predicates in the first stratum.
    pub negate_input: bool,
    pub domain: i64,
    /// Upper bound on positive body atoms per rule.
    pub max_atoms: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            two_strata: false,
            constraints: true,
            negate_input: false,
            domain: 6,
            max_atoms: 3,
        }
    }
}

pub fn facts(rng: &mut StdRng, domain: i64) -> String {
    let mut out = String::new();
    for (name, arity) in EDB {
        for _ in 0..rng.gen_range(3..14) {
            let values: Vec<String> = (0..arity)
                .map(|_| rng.gen_range(0..domain).to_string())
                .collect();
            out.push_str(&format!("{name}({}) .\n", values.join(", ")));
        }
    }
    out
}

fn term(rng: &mut StdRng, domain: i64) -> String {
    if rng.gen_bool(0.85) {
        format!("?{}", VARS.choose(rng).unwrap())
    } else {
        rng.gen_range(0..domain).to_string()
    }
}

fn atom(rng: &mut StdRng, (name, arity): (&str, usize), domain: i64) -> (String, Vec<String>) {
    let terms: Vec<String> = (0..arity).map(|_| term(rng, domain)).collect();
    (format!("{name}({})", terms.join(", ")), terms)
}

fn bound_term(rng: &mut StdRng, vars: &[String], domain: i64) -> String {
    if !vars.is_empty() && rng.gen_bool(0.85) {
        vars.choose(rng).unwrap().clone()
    } else {
        rng.gen_range(0..domain).to_string()
    }
}

fn rule(
    rng: &mut StdRng,
    head: (&str, usize),
    body_preds: &[(&'static str, usize)],
    negatable: &[(&'static str, usize)],
    shape: &Shape,
) -> String {
    let mut literals = Vec::new();
    let mut vars: Vec<String> = Vec::new();
    for _ in 0..rng.gen_range(1..=shape.max_atoms) {
        let pred = *body_preds.choose(rng).unwrap();
        let (text, terms) = atom(rng, pred, shape.domain);
        for t in terms {
            if t.starts_with('?') && !vars.contains(&t) {
                vars.push(t);
            }
        }
        literals.push(text);
    }
    if !negatable.is_empty() && rng.gen_bool(0.5) {
        let (name, arity) = *negatable.choose(rng).unwrap();
        let terms: Vec<String> = (0..arity).map(|_| bound_term(rng, &vars, shape.domain)).collect();
        literals.push(format!("~{name}({})", terms.join(", ")));
    }
    if shape.constraints && !vars.is_empty() && rng.gen_bool(0.4) {
        let left = vars.choose(rng).unwrap().clone();
        let right = bound_term(rng, &vars, shape.domain);
        literals.push(format!("{left} {} {right}", OPS.choose(rng).unwrap()));
    }
    let head_terms: Vec<String> = (0..head.1).map(|_| bound_term(rng, &vars, shape.domain)).collect();
    format!("{}({}) :- {} .\n", head.0, head_terms.join(", "), literals.join(", "))
}

/// Rules only (no facts).
pub fn rules(rng: &mut StdRng, shape: &Shape) -> String {
    let mut out = String::new();
    let lower_body: Vec<(&str, usize)> = EDB.iter().chain(&LOWER).copied().collect();
    let lower_neg: Vec<(&str, usize)> = if shape.negate_input { EDB.to_vec() } else { Vec::new() };
    for _ in 0..rng.gen_range(2..=5) {
        let head = *LOWER.choose(rng).unwrap();
        out.push_str(&rule(rng, head, &lower_body, &lower_neg, shape));
    }
    if shape.two_strata {
        let upper_body: Vec<(&str, usize)> = lower_body.iter().chain(&UPPER).copied().collect();
        for _ in 0..rng.gen_range(1..=4) {
            let head = *UPPER.choose(rng).unwrap();
            out.push_str(&rule(rng, head, &upper_body, &lower_body, shape));
        }
    }
    out
}
