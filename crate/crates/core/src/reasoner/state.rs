//! Per-predicate fact storage during materialisation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::storage::{identity_order, union, Trie};
use crate::value::{Dictionary, ValueId};

/// Which part of a relation a body atom reads in a semi-naive variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Version {
    /// Everything derived so far.
    Full,
    /// Facts known before the last iteration.
    Old,
    /// Facts new in the last iteration.
    Delta,
}

/// Facts of one predicate. `full = old ∪ delta` and `old ∩ delta = ∅`.
#[derive(Clone, Debug)]
pub struct Relation {
    arity: usize,
    full: Trie,
    old: Trie,
    delta: Trie,
    input_rows: usize,
    staged: Vec<Vec<ValueId>>,
    cache: HashMap<(Version, Vec<usize>), Trie>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        let empty = Trie::empty(identity_order(arity));
        Self {
            arity,
            full: empty.clone(),
            old: empty.clone(),
            delta: empty,
            input_rows: 0,
            staged: Vec::new(),
            cache: HashMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// All facts, identity attribute order.
    pub fn full(&self) -> &Trie {
        &self.full
    }

    pub fn delta(&self) -> &Trie {
        &self.delta
    }

    pub fn old(&self) -> &Trie {
        &self.old
    }

    pub fn input_rows(&self) -> usize {
        self.input_rows
    }

    pub fn len(&self) -> usize {
        self.full.row_count()
    }

    pub fn is_empty(&self) -> bool {
        self.full.is_empty()
    }

    pub(crate) fn stage(&mut self, row: Vec<ValueId>) {
        self.staged.push(row);
    }

    /// Merges staged input rows into the relation.
    pub(crate) fn seal_input(&mut self, dict: &Dictionary) {
        if self.staged.is_empty() {
            return;
        }
        let staged = core::mem::take(&mut self.staged);
        let input = Trie::from_rows(self.arity, staged, identity_order(self.arity), dict)
            .expect("staged rows have the relation arity");
        self.full = union(&self.full, &input, dict).expect("identity orders");
        self.old = self.full.clone();
        self.input_rows = self.full.row_count();
        self.cache.clear();
    }

    fn version(&self, version: Version) -> &Trie {
        match version {
            Version::Full => &self.full,
            Version::Old => &self.old,
            Version::Delta => &self.delta,
        }
    }

    /// Makes the given version available in `order`.
    pub(crate) fn prepare(&mut self, version: Version, order: &[usize], dict: &Dictionary) {
        if order.iter().enumerate().all(|(i, &a)| i == a) {
            return;
        }
        let key = (version, order.to_vec());
        if !self.cache.contains_key(&key) {
            let trie = self
                .version(version)
                .reorder(order.to_vec(), dict)
                .expect("valid attribute order");
            self.cache.insert(key, trie);
        }
    }

    /// A version in `order`; [`Relation::prepare`] must have been called
    /// for non-identity orders.
    pub fn view(&self, version: Version, order: &[usize]) -> &Trie {
        if order.iter().enumerate().all(|(i, &a)| i == a) {
            return self.version(version);
        }
        self.cache
            .get(&(version, order.to_vec()))
            .expect("view prepared before use")
    }

    /// Ends an iteration: `new` becomes the delta.
    pub(crate) fn advance(&mut self, new: Trie, dict: &Dictionary) {
        self.old = self.full.clone();
        if !new.is_empty() {
            self.full = union(&self.full, &new, dict).expect("identity orders");
        }
        self.delta = new;
        self.cache.clear();
    }

    /// Ends a stratum: everything is old, nothing is new.
    pub(crate) fn settle(&mut self) {
        if !self.delta.is_empty() {
            self.delta = Trie::empty(identity_order(self.arity));
            self.old = self.full.clone();
            self.cache.clear();
        }
    }
}

/// Facts derived in the current iteration and not yet committed. Rows are
/// unique and absent from the relation's full trie.
#[derive(Debug, Default)]
pub(crate) struct Pending {
    rows: BTreeMap<String, PendingRows>,
    total: usize,
    indexed: bool,
}

#[derive(Debug, Default)]
pub(crate) struct PendingRows {
    rows: Vec<Vec<ValueId>>,
    set: HashSet<Vec<ValueId>>,
    /// (position, value) -> row numbers; kept only when chase checks need
    /// to search pending facts.
    index: HashMap<(usize, ValueId), Vec<usize>>,
}

impl PendingRows {
    /// Rows matching a pattern (`None` matches anything).
    pub(crate) fn matching<'a>(
        &'a self,
        pattern: &'a [Option<ValueId>],
    ) -> impl Iterator<Item = &'a Vec<ValueId>> + 'a {
        let probe = pattern
            .iter()
            .enumerate()
            .find_map(|(pos, v)| v.map(|v| (pos, v)));
        let candidates: alloc::boxed::Box<dyn Iterator<Item = &'a Vec<ValueId>>> = match probe {
            Some(key) => match self.index.get(&key) {
                Some(list) => alloc::boxed::Box::new(list.iter().map(|&i| &self.rows[i])),
                None => alloc::boxed::Box::new(core::iter::empty()),
            },
            None => alloc::boxed::Box::new(self.rows.iter()),
        };
        candidates.filter(move |row| {
            row.iter()
                .zip(pattern)
                .all(|(value, p)| p.is_none_or(|p| p == *value))
        })
    }
}

impl Pending {
    pub(crate) fn new(indexed: bool) -> Self {
        Self {
            indexed,
            ..Self::default()
        }
    }

    pub(crate) fn total(&self) -> usize {
        self.total
    }

    pub(crate) fn get(&self, predicate: &str) -> Option<&PendingRows> {
        self.rows.get(predicate)
    }

    /// Returns whether the row was new.
    pub(crate) fn insert(&mut self, predicate: &str, row: Vec<ValueId>) -> bool {
        let entry = match self.rows.get_mut(predicate) {
            Some(entry) => entry,
            None => self.rows.entry(predicate.into()).or_default(),
        };
        if entry.set.contains(&row) {
            return false;
        }
        if self.indexed {
            let number = entry.rows.len();
            for (pos, value) in row.iter().enumerate() {
                entry.index.entry((pos, *value)).or_default().push(number);
            }
        }
        entry.set.insert(row.clone());
        entry.rows.push(row);
        self.total += 1;
        true
    }

    pub(crate) fn into_rows(self) -> BTreeMap<String, Vec<Vec<ValueId>>> {
        self.rows
            .into_iter()
            .map(|(name, rows)| (name, rows.rows))
            .collect()
    }
}

/// Everything the reasoner knows: the dictionary, one relation per
/// predicate, and the null counter.
#[derive(Clone, Debug, Default)]
pub struct ChaseState {
    pub(crate) dict: Dictionary,
    pub(crate) relations: BTreeMap<String, Relation>,
    pub(crate) next_null: u64,
    pub(crate) iteration: usize,
    pub(crate) strata_done: Vec<bool>,
}

impl ChaseState {
    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn relation(&self, predicate: &str) -> Option<&Relation> {
        self.relations.get(predicate)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// One past the highest null label in use.
    pub fn null_count(&self) -> u64 {
        self.next_null
    }

    /// Iterations run in the most recent stratum.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn strata_done(&self) -> &[bool] {
        &self.strata_done
    }

    pub fn total_facts(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    /// Facts of a predicate as values, in trie order.
    pub fn facts(&self, predicate: &str) -> Vec<Vec<crate::value::DataValue>> {
        self.relations
            .get(predicate)
            .map(|r| {
                r.full()
                    .tuples()
                    .map(|row| row.iter().map(|id| self.dict.value(*id).clone()).collect())
                    .collect()
            })
            .unwrap_or_default()
    }
}
