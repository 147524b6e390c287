//! Materialisation: stratified semi-naive evaluation with the restricted
//! chase.
//!
//! Within a stratum every iteration evaluates the rules in program order.
//! Each rule runs once per semi-naive variant: one recursive body atom reads
//! the facts new in the previous iteration, recursive atoms before it read
//! the facts known before that iteration, and all other atoms read
//! everything. Results of an iteration are committed together when it ends.
//! Existential rules see only bindings produced by the variants, so they
//! fire on fresh bindings.

mod chase;
mod state;
mod stratify;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

pub use state::{ChaseState, Relation, Version};
pub use stratify::{stratify, NegationCycle, Stratification};

use chase::{mint_null, RuleHead};
use state::Pending;

use crate::join::{leapfrog_join, plan, JoinPlan};
use crate::parser::{Program, Rule};
use crate::storage::{identity_order, union, Trie};
use crate::value::{coerce, CoercionError, DataValue, PositionType, ValueId};

/// Bounds on a materialisation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// A run stops before the total number of facts reaches this value.
    pub max_facts: usize,
    /// Iterations allowed per stratum.
    pub max_iterations: usize,
    pub timeout: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_facts: 1_000_000_000,
            max_iterations: 1_000_000,
            timeout: None,
        }
    }
}

/// Monotonic time source.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// A clock that never advances; timeouts never fire and all durations are
/// zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitExceeded {
    Facts { limit: usize },
    Iterations { limit: usize },
    Time { limit: Duration },
}

impl fmt::Display for LimitExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitExceeded::Facts { limit } => write!(f, "fact limit of {limit} reached"),
            LimitExceeded::Iterations { limit } => {
                write!(f, "iteration limit of {limit} reached")
            }
            LimitExceeded::Time { limit } => {
                write!(f, "time limit of {:.3} s reached", limit.as_secs_f64())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputError {
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    Coercion {
        predicate: String,
        position: usize,
        error: CoercionError,
    },
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Arity {
                predicate,
                expected,
                found,
            } => write!(
                f,
                "fact for {predicate} has {found} values but the predicate has arity {expected}"
            ),
            InputError::Coercion {
                predicate,
                position,
                error,
            } => write!(f, "{predicate} position {}: {error}", position + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReasonError {
    NegationCycle(NegationCycle),
    Limit(LimitExceeded),
    Input(InputError),
}

impl fmt::Display for ReasonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReasonError::NegationCycle(e) => e.fmt(f),
            ReasonError::Limit(e) => e.fmt(f),
            ReasonError::Input(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for ReasonError {}

impl From<NegationCycle> for ReasonError {
    fn from(e: NegationCycle) -> Self {
        ReasonError::NegationCycle(e)
    }
}

impl From<LimitExceeded> for ReasonError {
    fn from(e: LimitExceeded) -> Self {
        ReasonError::Limit(e)
    }
}

impl From<InputError> for ReasonError {
    fn from(e: InputError) -> Self {
        ReasonError::Input(e)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StratumOutcome {
    pub iterations: usize,
    pub chase_applications: u64,
    pub constraint_type_errors: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionReport {
    /// Filled in by whoever loads the sources.
    pub load_time: Duration,
    pub stratum_times: Vec<Duration>,
    pub stratum_iterations: Vec<usize>,
    /// Facts per head predicate beyond those given as input.
    pub derived: BTreeMap<String, usize>,
    pub chase_applications: u64,
    /// Nulls minted by this run.
    pub nulls: u64,
    pub constraint_type_errors: usize,
}

impl ExecutionReport {
    pub fn reasoning_time(&self) -> Duration {
        self.stratum_times.iter().sum()
    }

    pub fn total_derived(&self) -> usize {
        self.derived.values().sum()
    }
}

impl ChaseState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates an empty relation unless one exists.
    pub fn ensure_relation(&mut self, predicate: &str, arity: usize) -> Result<(), InputError> {
        match self.relations.get(predicate) {
            Some(r) if r.arity() != arity => Err(InputError::Arity {
                predicate: predicate.into(),
                expected: r.arity(),
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(predicate.into(), Relation::new(arity));
                Ok(())
            }
        }
    }

    /// Adds input facts. Returns the number of rows given.
    pub fn insert_facts<I>(&mut self, predicate: &str, arity: usize, rows: I) -> Result<usize, InputError>
    where
        I: IntoIterator<Item = Vec<DataValue>>,
    {
        self.ensure_relation(predicate, arity)?;
        let mut staged = Vec::new();
        for row in rows {
            if row.len() != arity {
                return Err(InputError::Arity {
                    predicate: predicate.into(),
                    expected: arity,
                    found: row.len(),
                });
            }
            let ids: Vec<ValueId> = row
                .into_iter()
                .map(|value| {
                    if let DataValue::Null(k) = value {
                        self.next_null = self.next_null.max(k + 1);
                    }
                    self.dict.intern(value)
                })
                .collect();
            staged.push(ids);
        }
        let count = staged.len();
        let relation = self.relations.get_mut(predicate).expect("relation exists");
        for row in staged {
            relation.stage(row);
        }
        relation.seal_input(&self.dict);
        Ok(count)
    }

    fn commit(&mut self, predicates: &BTreeSet<String>, pending: Pending) {
        let mut rows = pending.into_rows();
        for predicate in predicates {
            let relation = self.relations.get_mut(predicate).expect("head relation");
            let new = rows.remove(predicate).unwrap_or_default();
            let trie = Trie::from_rows(relation.arity(), new, identity_order(relation.arity()), &self.dict)
                .expect("derived rows have the relation arity");
            relation.advance(trie, &self.dict);
        }
    }
}

struct Budget<'a> {
    limits: &'a Limits,
    clock: &'a dyn Clock,
    deadline: Option<Duration>,
}

impl<'a> Budget<'a> {
    fn new(limits: &'a Limits, clock: &'a dyn Clock) -> Self {
        Budget {
            limits,
            clock,
            deadline: limits.timeout.map(|t| clock.now() + t),
        }
    }

    fn check_time(&self) -> Result<(), LimitExceeded> {
        match (self.deadline, self.limits.timeout) {
            (Some(deadline), Some(limit)) if self.clock.now() >= deadline => {
                Err(LimitExceeded::Time { limit })
            }
            _ => Ok(()),
        }
    }

    fn check_facts(&self, total: usize) -> Result<(), LimitExceeded> {
        if total >= self.limits.max_facts {
            Err(LimitExceeded::Facts {
                limit: self.limits.max_facts,
            })
        } else {
            Ok(())
        }
    }
}

struct CompiledRule<'r> {
    rule: &'r Rule,
    plan: JoinPlan,
    head: RuleHead,
    /// Whether each plan atom reads a predicate of the current stratum.
    recursive: Vec<bool>,
    warned: bool,
}

/// Runs `rules` as one stratum until no new facts appear. Lower strata
/// must be complete.
pub fn seminaive_fixpoint(
    rules: &[Rule],
    state: &mut ChaseState,
    limits: &Limits,
    clock: &dyn Clock,
) -> Result<StratumOutcome, ReasonError> {
    let rules: Vec<&Rule> = rules.iter().collect();
    fixpoint(&rules, state, &Budget::new(limits, clock))
}

fn fixpoint(
    rules: &[&Rule],
    state: &mut ChaseState,
    budget: &Budget<'_>,
) -> Result<StratumOutcome, ReasonError> {
    let heads: BTreeSet<String> = rules
        .iter()
        .flat_map(|r| r.head.iter().map(|a| a.predicate.clone()))
        .collect();
    for rule in rules {
        for atom in rule.head.iter().chain(&rule.positive).chain(&rule.negative) {
            state.ensure_relation(&atom.predicate, atom.arity())?;
        }
    }
    let mut compiled: Vec<CompiledRule<'_>> = rules
        .iter()
        .map(|rule| {
            let plan = plan(rule);
            let head = RuleHead::compile(&rule.head, &plan.variables, &mut state.dict);
            let recursive = plan
                .positive
                .iter()
                .map(|a| heads.contains(&a.predicate))
                .collect();
            CompiledRule {
                rule,
                plan,
                head,
                recursive,
                warned: false,
            }
        })
        .collect();
    let indexed = compiled.iter().any(|c| c.head.is_existential());

    let mut outcome = StratumOutcome::default();
    let result = loop {
        if outcome.iterations >= budget.limits.max_iterations {
            break Err(LimitExceeded::Iterations {
                limit: budget.limits.max_iterations,
            }
            .into());
        }
        if let Err(e) = budget.check_time() {
            break Err(e.into());
        }
        state.iteration = outcome.iterations;
        let first = outcome.iterations == 0;
        let known = state.total_facts();
        let mut pending = Pending::new(indexed);
        let mut failure = None;
        for rule in &mut compiled {
            let step = apply_rule(rule, first, state, &mut pending, budget, known)
                .and_then(|applied| {
                    outcome.chase_applications += applied;
                    budget.check_time()?;
                    budget.check_facts(known + pending.total())
                });
            if let Err(e) = step {
                failure = Some(e);
                break;
            }
        }
        if let Some(e) = failure {
            break Err(e.into());
        }
        outcome.iterations += 1;
        let derived = pending.total();
        state.commit(&heads, pending);
        if derived == 0 {
            break Ok(());
        }
    };
    for predicate in &heads {
        if let Some(relation) = state.relations.get_mut(predicate) {
            relation.settle();
        }
    }
    outcome.constraint_type_errors = compiled
        .iter()
        .filter(|c| c.warned)
        .count()
        .max(outcome.constraint_type_errors);
    result.map(|()| outcome)
}

/// Evaluates every semi-naive variant of one rule and stages the head
/// facts. Returns the number of chase applications.
fn apply_rule(
    rule: &mut CompiledRule<'_>,
    first: bool,
    state: &mut ChaseState,
    pending: &mut Pending,
    budget: &Budget<'_>,
    known: usize,
) -> Result<u64, LimitExceeded> {
    let atoms = rule.plan.positive.len();
    let variants: Vec<Vec<Version>> = if first {
        vec![vec![Version::Full; atoms]]
    } else {
        (0..atoms)
            .filter(|&i| rule.recursive[i] && !state.relations[&rule.plan.positive[i].predicate].delta().is_empty())
            .map(|i| {
                (0..atoms)
                    .map(|j| match j.cmp(&i) {
                        core::cmp::Ordering::Less if rule.recursive[j] => Version::Old,
                        core::cmp::Ordering::Equal => Version::Delta,
                        _ => Version::Full,
                    })
                    .collect()
            })
            .collect()
    };
    if variants.is_empty() {
        return Ok(0);
    }

    let mut bindings: Option<Trie> = None;
    for versions in &variants {
        for (atom, version) in rule.plan.positive.iter().zip(versions) {
            state
                .relations
                .get_mut(&atom.predicate)
                .expect("body relation")
                .prepare(*version, &atom.trie_order, &state.dict);
        }
        let positive: Vec<&Trie> = rule
            .plan
            .positive
            .iter()
            .zip(versions)
            .map(|(atom, version)| state.relations[&atom.predicate].view(*version, &atom.trie_order))
            .collect();
        let negative: Vec<&Trie> = rule
            .plan
            .negative
            .iter()
            .map(|atom| state.relations[&atom.predicate].full())
            .collect();
        let (found, stats) = leapfrog_join(&rule.plan, &positive, &negative, &state.dict);
        if let Some(error) = stats.first_type_error {
            if !rule.warned {
                rule.warned = true;
                log::warn!("in rule `{}`: {error}; the comparison is treated as false", rule.rule);
            }
        }
        bindings = Some(match bindings {
            None => found,
            Some(previous) => union(&previous, &found, &state.dict).expect("same order"),
        });
    }
    let bindings = bindings.expect("at least one variant");
    if bindings.is_empty() {
        return Ok(0);
    }
    if rule.head.is_existential() {
        chase(&rule.head, &bindings, state, pending, Some((budget, known)))
    } else {
        derive(&rule.head, &bindings, state, pending);
        Ok(0)
    }
}

fn derive(head: &RuleHead, bindings: &Trie, state: &ChaseState, pending: &mut Pending) {
    let mut frontier = vec![ValueId(0); head.frontier.len()];
    let mut rows = bindings.rows();
    while let Some(binding) = rows.next_row() {
        for (slot, &v) in frontier.iter_mut().zip(&head.frontier) {
            *slot = binding[v];
        }
        for atom in &head.atoms {
            let row = head.instantiate(atom, &frontier, &[]);
            if !state.relations[&atom.predicate].full().contains(&row, &state.dict) {
                pending.insert(&atom.predicate, row);
            }
        }
    }
}

fn chase(
    head: &RuleHead,
    bindings: &Trie,
    state: &mut ChaseState,
    pending: &mut Pending,
    budget: Option<(&Budget<'_>, usize)>,
) -> Result<u64, LimitExceeded> {
    head.prepare(&mut state.relations, &state.dict);
    let frontier = head.frontier_rows(bindings, &state.dict);
    let mut applications = 0;
    let mut rows = frontier.rows();
    let mut nulls = Vec::with_capacity(head.existentials);
    while let Some(binding) = rows.next_row() {
        if head.is_satisfied(binding, &state.relations, pending, &state.dict) {
            continue;
        }
        nulls.clear();
        for _ in 0..head.existentials {
            nulls.push(mint_null(&mut state.dict, &mut state.next_null));
        }
        for atom in &head.atoms {
            let row = head.instantiate(atom, binding, &nulls);
            if !state.relations[&atom.predicate].full().contains(&row, &state.dict) {
                pending.insert(&atom.predicate, row);
            }
        }
        applications += 1;
        if let Some((budget, known)) = budget {
            budget.check_facts(known + pending.total())?;
            if applications % 1024 == 0 {
                budget.check_time()?;
            }
        }
    }
    Ok(applications)
}

/// Applies the restricted chase for an existential rule to `bindings`
/// (over the variables of [`plan`]`(rule)`). Returns the facts it would add;
/// nothing is committed, but minted nulls stay allocated.
pub fn chase_step(rule: &Rule, bindings: &Trie, state: &mut ChaseState) -> Vec<(String, Vec<DataValue>)> {
    for atom in &rule.head {
        state
            .ensure_relation(&atom.predicate, atom.arity())
            .expect("head arity matches the state");
    }
    let plan = plan(rule);
    let head = RuleHead::compile(&rule.head, &plan.variables, &mut state.dict);
    let mut pending = Pending::new(true);
    chase(&head, bindings, state, &mut pending, None).expect("no budget, no limit");
    pending
        .into_rows()
        .into_iter()
        .flat_map(|(predicate, rows)| rows.into_iter().map(move |row| (predicate.clone(), row)))
        .map(|(predicate, row)| {
            let values = row.iter().map(|id| state.dict.value(*id).clone()).collect();
            (predicate, values)
        })
        .collect()
}

/// Drives materialisation of one program.
#[derive(Clone, Debug)]
pub struct Reasoner {
    program: Program,
    stratification: Stratification,
    state: ChaseState,
    report: ExecutionReport,
}

impl Reasoner {
    /// Stratifies the program and loads its explicit facts. The program
    /// should have passed [`crate::parser::check_safety`].
    pub fn new(program: Program) -> Result<Self, ReasonError> {
        let stratification = stratify(&program)?;
        let mut state = ChaseState::new();
        state.strata_done = vec![false; stratification.len()];
        let mut predicates: BTreeSet<&str> = BTreeSet::new();
        for atom in program.facts.iter().chain(program.rules.iter().flat_map(|r| {
            r.head.iter().chain(&r.positive).chain(&r.negative)
        })) {
            predicates.insert(&atom.predicate);
        }
        predicates.extend(program.sources.iter().map(|s| s.predicate.as_str()));
        predicates.extend(program.declarations.iter().map(|d| d.predicate.as_str()));
        for predicate in predicates {
            let arity = program.arity_of(predicate).expect("predicate occurs in the program");
            state.ensure_relation(predicate, arity)?;
        }
        let mut reasoner = Reasoner {
            program,
            stratification,
            state,
            report: ExecutionReport::default(),
        };
        let mut facts: BTreeMap<String, Vec<Vec<DataValue>>> = BTreeMap::new();
        for atom in &reasoner.program.facts {
            let row = atom
                .terms
                .iter()
                .map(|t| match t {
                    crate::parser::Term::Constant(v) => v.clone(),
                    _ => unreachable!("facts are ground"),
                })
                .collect();
            facts.entry(atom.predicate.clone()).or_default().push(row);
        }
        for (predicate, rows) in facts {
            reasoner.add_facts(&predicate, rows)?;
        }
        Ok(reasoner)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn stratification(&self) -> &Stratification {
        &self.stratification
    }

    pub fn state(&self) -> &ChaseState {
        &self.state
    }

    pub fn into_state(self) -> ChaseState {
        self.state
    }

    /// The report of the last [`Reasoner::materialise`] call, complete up to
    /// the point where it stopped.
    pub fn report(&self) -> &ExecutionReport {
        &self.report
    }

    pub fn report_mut(&mut self) -> &mut ExecutionReport {
        &mut self.report
    }

    /// Declared type of each position, or `Any` everywhere.
    pub fn position_types(&self, predicate: &str, arity: usize) -> Vec<PositionType> {
        match self.program.declaration(predicate) {
            Some(decl) => decl.positions.clone(),
            None => vec![PositionType::Any; arity],
        }
    }

    /// Adds input facts after coercing them to the declared types.
    pub fn add_facts<I>(&mut self, predicate: &str, rows: I) -> Result<usize, InputError>
    where
        I: IntoIterator<Item = Vec<DataValue>>,
    {
        let arity = match self.state.relation(predicate) {
            Some(r) => r.arity(),
            None => {
                let mut rows = rows.into_iter().peekable();
                let arity = rows.peek().map_or(0, Vec::len);
                return self.add_typed(predicate, arity, rows);
            }
        };
        self.add_typed(predicate, arity, rows)
    }

    fn add_typed<I>(&mut self, predicate: &str, arity: usize, rows: I) -> Result<usize, InputError>
    where
        I: IntoIterator<Item = Vec<DataValue>>,
    {
        let types = self.position_types(predicate, arity);
        let mut coerced = Vec::new();
        for row in rows {
            if row.len() != arity {
                return Err(InputError::Arity {
                    predicate: predicate.into(),
                    expected: arity,
                    found: row.len(),
                });
            }
            let row = row
                .into_iter()
                .zip(&types)
                .enumerate()
                .map(|(position, (value, ty))| {
                    coerce(value, *ty).map_err(|error| InputError::Coercion {
                        predicate: predicate.into(),
                        position,
                        error,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            coerced.push(row);
        }
        self.state.insert_facts(predicate, arity, coerced)
    }

    /// Runs every stratum not yet completed. On error the state holds the
    /// facts committed so far and the report covers the work done.
    pub fn materialise(&mut self, limits: &Limits, clock: &dyn Clock) -> Result<&ExecutionReport, ReasonError> {
        let budget = Budget::new(limits, clock);
        let load_time = self.report.load_time;
        self.report = ExecutionReport {
            load_time,
            ..ExecutionReport::default()
        };
        let nulls_before = self.state.null_count();
        let mut result = Ok(());
        for (index, rule_ids) in self.stratification.strata.iter().enumerate() {
            if self.state.strata_done[index] {
                continue;
            }
            let rules: Vec<&Rule> = rule_ids.iter().map(|&i| &self.program.rules[i]).collect();
            let started = clock.now();
            let outcome = fixpoint(&rules, &mut self.state, &budget);
            self.report.stratum_times.push(clock.now().saturating_sub(started));
            match outcome {
                Ok(outcome) => {
                    self.report.stratum_iterations.push(outcome.iterations);
                    self.report.chase_applications += outcome.chase_applications;
                    self.report.constraint_type_errors += outcome.constraint_type_errors;
                    self.state.strata_done[index] = true;
                }
                Err(e) => {
                    self.report.stratum_iterations.push(self.state.iteration + 1);
                    result = Err(e);
                    break;
                }
            }
        }
        self.report.nulls = self.state.null_count() - nulls_before;
        self.report.derived = self
            .stratification
            .predicate_stratum
            .keys()
            .map(|p| {
                let r = &self.state.relations[p];
                (p.clone(), r.len() - r.input_rows())
            })
            .collect();
        result.map(|()| &self.report)
    }
}

/// Materialises a program with only its explicit facts as input.
pub fn materialise(program: &Program, limits: &Limits) -> Result<(ChaseState, ExecutionReport), ReasonError> {
    let mut reasoner = Reasoner::new(program.clone())?;
    reasoner.materialise(limits, &NoClock)?;
    let report = reasoner.report.clone();
    Ok((reasoner.state, report))
}
