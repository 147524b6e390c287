//! Stratification by negation over the predicate dependency graph.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::parser::Program;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    /// Rule indices per stratum, each list in program order.
    pub strata: Vec<Vec<usize>>,
    /// Stratum of every predicate that occurs in a rule head.
    pub predicate_stratum: BTreeMap<String, usize>,
}

impl Stratification {
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }
}

/// The program negates a predicate that depends on its own result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegationCycle {
    /// Predicates along the cycle, starting at the least name.
    pub cycle: Vec<String>,
}

impl fmt::Display for NegationCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("negation cycle: ")?;
        for name in &self.cycle {
            write!(f, "{name} -> ")?;
        }
        write!(f, "{}", self.cycle[0])
    }
}

impl core::error::Error for NegationCycle {}

struct Graph {
    names: Vec<String>,
    /// (target, negative)
    edges: Vec<Vec<(usize, bool)>>,
}

impl Graph {
    fn build(program: &Program) -> Graph {
        let mut names = BTreeSet::new();
        for rule in &program.rules {
            for atom in rule.head.iter().chain(&rule.positive).chain(&rule.negative) {
                names.insert(atom.predicate.clone());
            }
        }
        let names: Vec<String> = names.into_iter().collect();
        let id = |name: &str| names.binary_search_by(|n| n.as_str().cmp(name)).unwrap();
        let mut edges = vec![Vec::new(); names.len()];
        for rule in &program.rules {
            for head in &rule.head {
                let h = id(&head.predicate);
                for atom in &rule.positive {
                    edges[id(&atom.predicate)].push((h, false));
                }
                for atom in &rule.negative {
                    edges[id(&atom.predicate)].push((h, true));
                }
                // Atoms of one head are derived together and must share a
                // stratum.
                for other in &rule.head {
                    edges[id(&other.predicate)].push((h, false));
                }
            }
        }
        for list in &mut edges {
            list.sort_unstable();
            list.dedup();
        }
        Graph { names, edges }
    }

    /// Tarjan's algorithm; components come out in reverse topological order.
    fn components(&self) -> Vec<Vec<usize>> {
        struct State {
            index: Vec<Option<usize>>,
            low: Vec<usize>,
            on_stack: Vec<bool>,
            stack: Vec<usize>,
            next: usize,
            out: Vec<Vec<usize>>,
        }
        fn connect(graph: &Graph, v: usize, s: &mut State) {
            s.index[v] = Some(s.next);
            s.low[v] = s.next;
            s.next += 1;
            s.stack.push(v);
            s.on_stack[v] = true;
            for &(w, _) in &graph.edges[v] {
                match s.index[w] {
                    None => {
                        connect(graph, w, s);
                        s.low[v] = s.low[v].min(s.low[w]);
                    }
                    Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(s.low[v]) == s.index[v] {
                let mut component = Vec::new();
                loop {
                    let w = s.stack.pop().unwrap();
                    s.on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort_unstable();
                s.out.push(component);
            }
        }
        let n = self.names.len();
        let mut state = State {
            index: vec![None; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            out: Vec::new(),
        };
        for v in 0..n {
            if state.index[v].is_none() {
                connect(self, v, &mut state);
            }
        }
        state.out
    }

    /// Shortest path `from -> .. -> to` inside `allowed`.
    fn path(&self, from: usize, to: usize, allowed: &[bool]) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.names.len()];
        let mut queue = VecDeque::from([from]);
        parent[from] = from;
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &(w, _) in &self.edges[v] {
                if allowed[w] && parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        path
    }
}

pub fn stratify(program: &Program) -> Result<Stratification, NegationCycle> {
    let graph = Graph::build(program);
    let components = graph.components();
    let mut component_of = vec![0; graph.names.len()];
    for (c, members) in components.iter().enumerate() {
        for &v in members {
            component_of[v] = c;
        }
    }
    let id = |name: &str| {
        graph
            .names
            .binary_search_by(|n| n.as_str().cmp(name))
            .unwrap()
    };

    // A negative edge inside a component is a cycle through negation. Look
    // for one in program order so the report is deterministic.
    for rule in &program.rules {
        for head in &rule.head {
            let h = id(&head.predicate);
            for atom in &rule.negative {
                let q = id(&atom.predicate);
                if component_of[q] == component_of[h] {
                    let mut allowed = vec![false; graph.names.len()];
                    for &v in &components[component_of[h]] {
                        allowed[v] = true;
                    }
                    let mut cycle = graph.path(h, q, &allowed);
                    let start = (0..cycle.len())
                        .min_by(|&a, &b| graph.names[cycle[a]].cmp(&graph.names[cycle[b]]))
                        .unwrap();
                    cycle.rotate_left(start);
                    return Err(NegationCycle {
                        cycle: cycle.into_iter().map(|v| graph.names[v].clone()).collect(),
                    });
                }
            }
        }
    }

    // Components are in reverse topological order; walk them forwards.
    let mut level = vec![0usize; components.len()];
    for c in (0..components.len()).rev() {
        for &v in &components[c] {
            for &(w, negative) in &graph.edges[v] {
                let target = component_of[w];
                if target != c {
                    let needed = level[c] + usize::from(negative);
                    level[target] = level[target].max(needed);
                }
            }
        }
    }

    let rule_level: Vec<usize> = program
        .rules
        .iter()
        .map(|rule| level[component_of[id(&rule.head[0].predicate)]])
        .collect();
    let mut used: Vec<usize> = rule_level.clone();
    used.sort_unstable();
    used.dedup();
    let compress = |l: usize| used.binary_search(&l).unwrap();

    let mut strata = vec![Vec::new(); used.len()];
    let mut predicate_stratum = BTreeMap::new();
    for (index, rule) in program.rules.iter().enumerate() {
        let stratum = compress(rule_level[index]);
        strata[stratum].push(index);
        for head in &rule.head {
            predicate_stratum.insert(head.predicate.clone(), stratum);
        }
    }
    Ok(Stratification {
        strata,
        predicate_stratum,
    })
}
