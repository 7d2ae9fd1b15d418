//! Short-term and long-term memory tables and the periodic staging rule.
//!
//! Size accounting counts only the objects the dual-memory model defines:
//! `action_count` values per STM state and a (state, action, value) triple per
//! LTM state. Visit counters and timestamps are bookkeeping and never counted.

use std::collections::BTreeMap;

use crate::num::{Kappa, Scalar};

/// Time step index.
pub type Step = u64;

/// Returns true iff `t` is a nonzero multiple of `t_stage`.
pub fn staging_indicator(t: Step, t_stage: u64) -> bool {
    t != 0 && t.is_multiple_of(t_stage)
}

/// Index and value of the largest entry; ties go to the lowest index.
pub fn argmax<S: Scalar>(row: &[S]) -> (usize, S) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    (best, row[best])
}

#[derive(Clone, Debug, PartialEq)]
pub struct StmEntry<S> {
    pub q_row: Vec<S>,
    pub visits: u64,
    pub last_seen: Step,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortTermMemory<K, S> {
    action_count: usize,
    entries: BTreeMap<K, StmEntry<S>>,
}

impl<K: Ord + Clone, S: Scalar> ShortTermMemory<K, S> {
    pub fn new(action_count: usize) -> Self {
        ShortTermMemory {
            action_count,
            entries: BTreeMap::new(),
        }
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Number of states held (`m_s`).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records one observation of `state` at step `t`. Returns true if the
    /// state was new.
    pub fn observe(&mut self, state: K, t: Step) -> bool {
        match self.entries.get_mut(&state) {
            Some(entry) => {
                entry.visits += 1;
                entry.last_seen = t;
                false
            }
            None => {
                self.insert_fresh(state, t);
                true
            }
        }
    }

    fn insert_fresh(&mut self, state: K, t: Step) {
        self.entries.insert(
            state,
            StmEntry {
                q_row: vec![S::zero(); self.action_count],
                visits: 1,
                last_seen: t,
            },
        );
    }

    pub fn get(&self, state: &K) -> Option<&StmEntry<S>> {
        self.entries.get(state)
    }

    pub fn get_mut(&mut self, state: &K) -> Option<&mut StmEntry<S>> {
        self.entries.get_mut(state)
    }

    pub fn contains(&self, state: &K) -> bool {
        self.entries.contains_key(state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &StmEntry<S>)> {
        self.entries.iter()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LtmEntry<S> {
    pub action: usize,
    pub q: S,
}

/// Consolidated `(state, action, value)` store. Entries are never removed.
#[derive(Clone, Debug, PartialEq)]
pub struct LongTermMemory<K, S> {
    entries: BTreeMap<K, LtmEntry<S>>,
}

impl<K: Ord + Clone, S: Scalar> Default for LongTermMemory<K, S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone, S: Scalar> LongTermMemory<K, S> {
    pub fn new() -> Self {
        LongTermMemory {
            entries: BTreeMap::new(),
        }
    }

    /// Number of states held (`m_L`).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, state: &K) -> Option<&LtmEntry<S>> {
        self.entries.get(state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &LtmEntry<S>)> {
        self.entries.iter()
    }

    /// Inserts, or overwrites when `q` beats the stored value. Returns true
    /// if the state was not present before.
    pub fn upsert(&mut self, state: K, action: usize, q: S) -> bool {
        match self.entries.get_mut(&state) {
            Some(entry) => {
                if q > entry.q {
                    *entry = LtmEntry { action, q };
                }
                false
            }
            None => {
                self.entries.insert(state, LtmEntry { action, q });
                true
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageOutcome {
    /// STM states copied into LTM, `floor(kappa * m_s)`.
    pub selected: usize,
    /// How many of those were new to LTM.
    pub inserted: usize,
}

/// Moves `floor(kappa * m_s)` STM states into LTM, clears the STM and inserts
/// `current` as its only entry.
///
/// States are ranked by visit count, then by most recent `last_seen`, then by
/// key order. Each selected state is stored as the argmax of its row.
pub fn stage<K: Ord + Clone, S: Scalar>(
    stm: &mut ShortTermMemory<K, S>,
    ltm: &mut LongTermMemory<K, S>,
    kappa: Kappa,
    current: K,
    t: Step,
) -> StageOutcome {
    let take = kappa.staged_count(stm.len());
    let mut ranked: Vec<(&K, &StmEntry<S>)> = stm.iter().collect();
    ranked.sort_by(|(ka, a), (kb, b)| {
        b.visits
            .cmp(&a.visits)
            .then(b.last_seen.cmp(&a.last_seen))
            .then(ka.cmp(kb))
    });
    let mut inserted = 0;
    for (key, entry) in ranked.into_iter().take(take) {
        let (action, q) = argmax(&entry.q_row);
        if ltm.upsert(key.clone(), action, q) {
            inserted += 1;
        }
    }
    stm.clear();
    stm.insert_fresh(current, t);
    StageOutcome {
        selected: take,
        inserted,
    }
}

/// `3 * m_L + action_count * m_s`.
pub fn msize_dual<K: Ord + Clone, S: Scalar>(
    ltm: &LongTermMemory<K, S>,
    stm: &ShortTermMemory<K, S>,
    action_count: usize,
) -> u64 {
    3 * ltm.len() as u64 + (action_count * stm.len()) as u64
}
