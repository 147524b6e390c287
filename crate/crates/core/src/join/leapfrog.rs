//! Trie cursors and the leapfrog intersection of sorted levels.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::storage::Trie;
use crate::value::{IdOrder, ValueId};

/// Linear iterator over one trie level with `open`/`up` to move between
/// levels.
pub struct TrieCursor<'a> {
    trie: &'a Trie,
    /// (position, end) for each opened level.
    stack: Vec<(usize, usize)>,
}

impl<'a> TrieCursor<'a> {
    pub fn new(trie: &'a Trie) -> Self {
        Self {
            trie,
            stack: Vec::with_capacity(trie.arity()),
        }
    }

    /// Number of opened levels.
    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Descends to the children of the current key (or to the root level).
    pub fn open(&mut self) {
        let range = match self.stack.last() {
            None => self.trie.root_range(),
            Some(&(pos, _)) => self.trie.child_range(self.stack.len() - 1, pos),
        };
        self.stack.push((range.start, range.end));
    }

    pub fn up(&mut self) {
        self.stack.pop();
    }

    pub fn at_end(&self) -> bool {
        let &(pos, end) = self.stack.last().expect("cursor not opened");
        pos >= end
    }

    pub fn key(&self) -> ValueId {
        let &(pos, _) = self.stack.last().expect("cursor not opened");
        self.trie.layer(self.stack.len() - 1).data()[pos]
    }

    pub fn next(&mut self) {
        self.stack.last_mut().expect("cursor not opened").0 += 1;
    }

    /// Moves to the least key `>= target` in the current interval, or to the
    /// end. Never moves backwards.
    pub fn seek(&mut self, target: ValueId, cmp: &impl IdOrder) {
        let level = self.stack.len() - 1;
        let data = self.trie.layer(level).data();
        let (pos, end) = self.stack.last_mut().expect("cursor not opened");
        if *pos >= *end || cmp.cmp_ids(data[*pos], target) != Ordering::Less {
            return;
        }
        // Gallop to bracket the target, then binary search.
        let mut low = *pos;
        let mut step = 1;
        let mut high = low + step;
        while high < *end && cmp.cmp_ids(data[high], target) == Ordering::Less {
            low = high;
            step *= 2;
            high = low + step;
        }
        let high = high.min(*end);
        let offset = data[low..high].partition_point(|&v| cmp.cmp_ids(v, target) == Ordering::Less);
        *pos = low + offset;
    }
}

/// Finds the next key on which all cursors agree, starting from their
/// current positions. Returns `None` once any cursor runs out.
pub fn leapfrog_search(
    cursors: &mut [TrieCursor<'_>],
    members: &[usize],
    cmp: &impl IdOrder,
) -> Option<ValueId> {
    debug_assert!(!members.is_empty());
    // Largest current key; every cursor is sought up to it until all agree.
    let mut max = None;
    for &m in members {
        if cursors[m].at_end() {
            return None;
        }
        let key = cursors[m].key();
        if max.is_none_or(|current| cmp.cmp_ids(key, current) == Ordering::Greater) {
            max = Some(key);
        }
    }
    let mut max = max?;
    let mut agreeing = 0;
    let mut i = 0;
    while agreeing < members.len() {
        let cursor = &mut cursors[members[i]];
        cursor.seek(max, cmp);
        if cursor.at_end() {
            return None;
        }
        let key = cursor.key();
        if key == max {
            agreeing += 1;
        } else {
            max = key;
            agreeing = 1;
        }
        i = (i + 1) % members.len();
    }
    Some(max)
}
