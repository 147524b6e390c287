//! Immutable columnar tries.
//!
//! A trie over `n` attributes has `n` layers. Layer `k` stores one data
//! column of value ids; entry `i` of layer `k` owns the child interval
//! `starts[i]..starts[i + 1]` of layer `k + 1` (the last entry runs to the end
//! of the child column). Layer 0 is a single interval. Within every interval
//! the data is strictly increasing under the supplied [`IdOrder`], so the
//! rows read off root-to-leaf are sorted and duplicate free, and the length
//! of the last layer is the row count.
//!
//! Rows are always stored in the trie's attribute order: level `j` holds the
//! input attribute `order[j]`.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::cmp::Ordering;
use core::fmt;
use core::ops::Range;

use crate::value::{IdOrder, ValueId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrieError {
    ArityMismatch {
        expected: usize,
        found: usize,
        row: usize,
    },
    /// The attribute order is not a permutation of `0..arity`.
    InvalidOrder { order: Vec<usize>, arity: usize },
    /// Set operations need equal arity and attribute order.
    OrderMismatch { left: Vec<usize>, right: Vec<usize> },
}

impl fmt::Display for TrieError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrieError::ArityMismatch {
                expected,
                found,
                row,
            } => write!(f, "row {row} has {found} columns, expected {expected}"),
            TrieError::InvalidOrder { order, arity } => {
                write!(f, "{order:?} is not a permutation of 0..{arity}")
            }
            TrieError::OrderMismatch { left, right } => {
                write!(f, "attribute orders {left:?} and {right:?} differ")
            }
        }
    }
}

impl core::error::Error for TrieError {}

/// One attribute level of a trie.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ColumnLayer {
    data: Vec<ValueId>,
    starts: Vec<usize>,
}

impl ColumnLayer {
    pub fn data(&self) -> &[ValueId] {
        &self.data
    }

    /// Offsets into the next layer, one per data entry. Empty on the last
    /// layer.
    pub fn interval_starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trie {
    order: Vec<usize>,
    layers: Vec<ColumnLayer>,
    rows: usize,
}

pub fn identity_order(arity: usize) -> Vec<usize> {
    (0..arity).collect()
}

fn check_permutation(order: &[usize], arity: usize) -> Result<(), TrieError> {
    let mut seen = vec![false; arity];
    let valid = order.len() == arity
        && order
            .iter()
            .all(|&i| i < arity && !core::mem::replace(&mut seen[i], true));
    if valid {
        Ok(())
    } else {
        Err(TrieError::InvalidOrder {
            order: order.to_vec(),
            arity,
        })
    }
}

pub fn compare_rows(a: &[ValueId], b: &[ValueId], cmp: &impl IdOrder) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp.cmp_ids(*x, *y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

impl Trie {
    pub fn empty(order: Vec<usize>) -> Self {
        let arity = order.len();
        Trie {
            order,
            layers: vec![ColumnLayer::default(); arity],
            rows: 0,
        }
    }

    /// Builds a trie from rows given in input attribute order. Duplicates
    /// are collapsed.
    pub fn from_rows<R: AsRef<[ValueId]>>(
        arity: usize,
        rows: impl IntoIterator<Item = R>,
        order: Vec<usize>,
        cmp: &impl IdOrder,
    ) -> Result<Trie, TrieError> {
        check_permutation(&order, arity)?;
        let mut flat = Vec::new();
        let mut count = 0usize;
        for (index, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.len() != arity {
                return Err(TrieError::ArityMismatch {
                    expected: arity,
                    found: row.len(),
                    row: index,
                });
            }
            flat.extend(order.iter().map(|&attr| row[attr]));
            count += 1;
        }
        Ok(Self::from_flat_in_order(flat, count, order, cmp))
    }

    /// `flat` holds `count` rows already permuted into `order`.
    fn from_flat_in_order(
        flat: Vec<ValueId>,
        count: usize,
        order: Vec<usize>,
        cmp: &impl IdOrder,
    ) -> Trie {
        let arity = order.len();
        if arity == 0 {
            return Trie {
                order,
                layers: Vec::new(),
                rows: usize::from(count > 0),
            };
        }
        let row = |i: usize| &flat[i * arity..(i + 1) * arity];
        let mut indices: Vec<usize> = (0..count).collect();
        indices.sort_unstable_by(|&a, &b| compare_rows(row(a), row(b), cmp));
        let mut builder = TrieBuilder::new(order);
        let mut last: Option<usize> = None;
        for index in indices {
            if let Some(prev) = last {
                if compare_rows(row(prev), row(index), cmp) == Ordering::Equal {
                    continue;
                }
            }
            builder.push_sorted(row(index));
            last = Some(index);
        }
        builder.finish()
    }

    pub fn arity(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn layers(&self) -> &[ColumnLayer] {
        &self.layers
    }

    pub fn layer(&self, level: usize) -> &ColumnLayer {
        &self.layers[level]
    }

    /// Interval of layer 0.
    pub fn root_range(&self) -> Range<usize> {
        0..self.layers.first().map_or(0, ColumnLayer::len)
    }

    /// Interval of layer `level + 1` owned by entry `index` of `level`.
    pub fn child_range(&self, level: usize, index: usize) -> Range<usize> {
        let layer = &self.layers[level];
        let start = layer.starts[index];
        let end = layer
            .starts
            .get(index + 1)
            .copied()
            .unwrap_or_else(|| self.layers[level + 1].len());
        start..end
    }

    /// Rows in trie attribute order, ascending.
    pub fn rows(&self) -> Rows<'_> {
        Rows::new(self)
    }

    /// Rows mapped back to input attribute order, in trie order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<ValueId>> + '_ {
        self.rows().map(move |row| {
            let mut out = vec![ValueId(0); row.len()];
            for (level, &attr) in self.order.iter().enumerate() {
                out[attr] = row[level];
            }
            out
        })
    }

    /// The same relation under another attribute order.
    pub fn reorder(&self, order: Vec<usize>, cmp: &impl IdOrder) -> Result<Trie, TrieError> {
        if order == self.order {
            return Ok(self.clone());
        }
        Trie::from_rows(self.arity(), self.tuples(), order, cmp)
    }

    /// Membership of a row given in trie attribute order.
    pub fn contains(&self, row: &[ValueId], cmp: &impl IdOrder) -> bool {
        if row.len() != self.arity() {
            return false;
        }
        if self.arity() == 0 {
            return self.rows > 0;
        }
        self.descend(row, cmp).is_some()
    }

    /// Follows `prefix` (trie attribute order) down the trie. Returns the
    /// index of the matching entry at level `prefix.len() - 1`.
    pub fn descend(&self, prefix: &[ValueId], cmp: &impl IdOrder) -> Option<usize> {
        let mut range = self.root_range();
        let mut found = None;
        for (level, value) in prefix.iter().enumerate() {
            if level > 0 {
                range = self.child_range(level - 1, found?);
            }
            let data = &self.layers[level].data[range.clone()];
            let at = data
                .binary_search_by(|probe| cmp.cmp_ids(*probe, *value))
                .ok()?;
            found = Some(range.start + at);
        }
        found
    }

    /// Calls `f` with the remaining levels of every row below entry `index`
    /// of `level`, in order.
    pub fn for_each_suffix(&self, level: usize, index: usize, mut f: impl FnMut(&[ValueId])) {
        if level + 1 == self.arity() {
            f(&[]);
            return;
        }
        let mut buffer = Vec::with_capacity(self.arity() - level - 1);
        self.suffixes(level + 1, self.child_range(level, index), &mut buffer, &mut f);
    }

    fn suffixes(
        &self,
        level: usize,
        range: Range<usize>,
        buffer: &mut Vec<ValueId>,
        f: &mut impl FnMut(&[ValueId]),
    ) {
        for i in range {
            buffer.push(self.layers[level].data[i]);
            if level + 1 == self.arity() {
                f(buffer);
            } else {
                self.suffixes(level + 1, self.child_range(level, i), buffer, f);
            }
            buffer.pop();
        }
    }

    /// Checks the interval-partition and sortedness invariants.
    pub fn validate(&self, cmp: &impl IdOrder) -> Result<(), String> {
        if self.arity() == 0 {
            return if self.rows <= 1 {
                Ok(())
            } else {
                Err(format!("nullary trie with {} rows", self.rows))
            };
        }
        if self.layers.len() != self.arity() {
            return Err(format!("{} layers for arity {}", self.layers.len(), self.arity()));
        }
        let last = self.layers.len() - 1;
        if self.layers[last].len() != self.rows {
            return Err("row count differs from leaf count".into());
        }
        if self.rows == 0 && self.layers.iter().any(|l| !l.is_empty()) {
            return Err("empty trie with data".into());
        }
        for (level, layer) in self.layers.iter().enumerate() {
            let intervals: Vec<Range<usize>> = if level == 0 {
                vec![self.root_range()]
            } else {
                (0..self.layers[level - 1].len())
                    .map(|i| self.child_range(level - 1, i))
                    .collect()
            };
            let mut expected_start = 0;
            for interval in intervals {
                if interval.start != expected_start || interval.end < interval.start {
                    return Err(format!("level {level}: interval {interval:?} leaves a gap"));
                }
                if level > 0 && interval.is_empty() {
                    return Err(format!("level {level}: empty child interval"));
                }
                expected_start = interval.end;
                for pair in layer.data[interval].windows(2) {
                    if cmp.cmp_ids(pair[0], pair[1]) != Ordering::Less {
                        return Err(format!("level {level}: data not strictly increasing"));
                    }
                }
            }
            if expected_start != layer.len() {
                return Err(format!("level {level}: intervals do not cover the column"));
            }
            if level < last && layer.starts.len() != layer.len() {
                return Err(format!("level {level}: missing interval markers"));
            }
            if level == last && !layer.starts.is_empty() {
                return Err("leaf level has interval markers".into());
            }
        }
        Ok(())
    }
}

/// Appends strictly increasing rows (in trie attribute order).
#[derive(Debug)]
pub struct TrieBuilder {
    order: Vec<usize>,
    layers: Vec<ColumnLayer>,
    last: Vec<ValueId>,
    rows: usize,
}

impl TrieBuilder {
    pub fn new(order: Vec<usize>) -> Self {
        let arity = order.len();
        Self {
            order,
            layers: vec![ColumnLayer::default(); arity],
            last: Vec::with_capacity(arity),
            rows: 0,
        }
    }

    /// `row` must compare greater than every row pushed before.
    pub fn push_sorted(&mut self, row: &[ValueId]) {
        let arity = self.order.len();
        debug_assert_eq!(row.len(), arity);
        if arity == 0 {
            self.rows = 1;
            return;
        }
        let shared = if self.rows == 0 {
            0
        } else {
            self.last
                .iter()
                .zip(row)
                .take_while(|(a, b)| a == b)
                .count()
        };
        debug_assert!(shared < arity, "duplicate row pushed");
        for (level, &id) in row.iter().enumerate().skip(shared) {
            if level + 1 < arity {
                let child_len = self.layers[level + 1].data.len();
                self.layers[level].starts.push(child_len);
            }
            self.layers[level].data.push(id);
        }
        self.last.clear();
        self.last.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn finish(self) -> Trie {
        Trie {
            order: self.order,
            layers: self.layers,
            rows: self.rows,
        }
    }
}

/// Row iterator; yields rows in trie attribute order.
pub struct Rows<'a> {
    trie: &'a Trie,
    next_leaf: usize,
    positions: Vec<usize>,
    buffer: Vec<ValueId>,
}

impl<'a> Rows<'a> {
    fn new(trie: &'a Trie) -> Self {
        Self {
            trie,
            next_leaf: 0,
            positions: vec![0; trie.arity()],
            buffer: vec![ValueId(0); trie.arity()],
        }
    }

    /// Advances and exposes the row without allocating.
    pub fn next_row(&mut self) -> Option<&[ValueId]> {
        let trie = self.trie;
        if self.next_leaf >= trie.rows {
            return None;
        }
        let arity = trie.arity();
        if arity > 0 {
            let leaf = arity - 1;
            self.positions[leaf] = self.next_leaf;
            // Move each ancestor forward until its interval covers the child.
            for level in (0..leaf).rev() {
                let child = self.positions[level + 1];
                while trie.child_range(level, self.positions[level]).end <= child {
                    self.positions[level] += 1;
                }
            }
            for level in 0..arity {
                self.buffer[level] = trie.layers[level].data[self.positions[level]];
            }
        }
        self.next_leaf += 1;
        Some(&self.buffer)
    }
}

impl Iterator for Rows<'_> {
    type Item = Vec<ValueId>;

    fn next(&mut self) -> Option<Vec<ValueId>> {
        self.next_row().map(<[ValueId]>::to_vec)
    }
}

fn check_compatible(a: &Trie, b: &Trie) -> Result<(), TrieError> {
    if a.order != b.order {
        return Err(TrieError::OrderMismatch {
            left: a.order.clone(),
            right: b.order.clone(),
        });
    }
    Ok(())
}

/// Set union by a sorted merge.
pub fn union(a: &Trie, b: &Trie, cmp: &impl IdOrder) -> Result<Trie, TrieError> {
    check_compatible(a, b)?;
    if b.is_empty() {
        return Ok(a.clone());
    }
    if a.is_empty() {
        return Ok(b.clone());
    }
    if a.arity() == 0 {
        return Ok(a.clone());
    }
    let mut builder = TrieBuilder::new(a.order.clone());
    let (mut left, mut right) = (a.rows(), b.rows());
    let mut l = left.next_row().map(<[ValueId]>::to_vec);
    let mut r = right.next_row().map(<[ValueId]>::to_vec);
    loop {
        match (&l, &r) {
            (None, None) => break,
            (Some(x), None) => {
                builder.push_sorted(x);
                l = left.next_row().map(<[ValueId]>::to_vec);
            }
            (None, Some(y)) => {
                builder.push_sorted(y);
                r = right.next_row().map(<[ValueId]>::to_vec);
            }
            (Some(x), Some(y)) => match compare_rows(x, y, cmp) {
                Ordering::Less => {
                    builder.push_sorted(x);
                    l = left.next_row().map(<[ValueId]>::to_vec);
                }
                Ordering::Greater => {
                    builder.push_sorted(y);
                    r = right.next_row().map(<[ValueId]>::to_vec);
                }
                Ordering::Equal => {
                    builder.push_sorted(x);
                    l = left.next_row().map(<[ValueId]>::to_vec);
                    r = right.next_row().map(<[ValueId]>::to_vec);
                }
            },
        }
    }
    Ok(builder.finish())
}

/// Rows of `a` that are not in `b`.
pub fn difference(a: &Trie, b: &Trie, cmp: &impl IdOrder) -> Result<Trie, TrieError> {
    check_compatible(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(a.clone());
    }
    if a.arity() == 0 {
        return Ok(Trie::empty(Vec::new()));
    }
    let mut builder = TrieBuilder::new(a.order.clone());
    let mut right = b.rows();
    let mut r = right.next_row().map(<[ValueId]>::to_vec);
    let mut left = a.rows();
    while let Some(x) = left.next_row() {
        loop {
            match &r {
                Some(y) if compare_rows(y, x, cmp) == Ordering::Less => {
                    r = right.next_row().map(<[ValueId]>::to_vec);
                }
                _ => break,
            }
        }
        match &r {
            Some(y) if compare_rows(y, x, cmp) == Ordering::Equal => {}
            _ => builder.push_sorted(x),
        }
    }
    Ok(builder.finish())
}
