//! The two agent types: a SARSA agent backed by a raw-state replay table, and
//! the dual-memory agent working on canonical states.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equivalence::{CanonicalState, RawState, SymmetryGroup};
use crate::error::{Error, Result};
use crate::memory::{self, argmax, LongTermMemory, ShortTermMemory, StageOutcome, Step};
use crate::num::{Kappa, Scalar};
use crate::sample::SizeSample;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperParams<S> {
    pub action_count: usize,
    pub kappa: Kappa,
    pub t_stage: u64,
    pub alpha: S,
    pub gamma: S,
    pub epsilon: S,
}

impl<S: Scalar> HyperParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.action_count == 0 {
            return Err(Error::invalid("action_count", "must be at least 1"));
        }
        if self.t_stage == 0 {
            return Err(Error::invalid("t_stage", "must be at least 1"));
        }
        let unit = |name, v: S, lo_open: bool, hi_open: bool| {
            let ok = v.is_finite()
                && if lo_open { v > S::zero() } else { v >= S::zero() }
                && if hi_open { v < S::one() } else { v <= S::one() };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} out of range")))
            }
        };
        unit("alpha", self.alpha, true, false)?;
        unit("gamma", self.gamma, false, true)?;
        unit("epsilon", self.epsilon, false, false)
    }
}

/// `q[a] += alpha * (r + gamma * q_next - q[a])`.
pub fn sarsa_update<S: Scalar>(q_row: &mut [S], action: usize, reward: S, q_next: S, alpha: S, gamma: S) -> Result<()> {
    if action >= q_row.len() {
        return Err(Error::ActionCountMismatch {
            expected: q_row.len(),
            got: action + 1,
        });
    }
    if !reward.is_finite() || !q_next.is_finite() || !alpha.is_finite() || !gamma.is_finite() {
        return Err(Error::NonFinite("sarsa update inputs"));
    }
    if !q_row.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("q_row"));
    }
    let q = q_row[action];
    let updated = q + alpha * (reward + gamma * q_next - q);
    if !updated.is_finite() {
        return Err(Error::NonFinite("updated q value"));
    }
    q_row[action] = updated;
    Ok(())
}

/// One SARSA transition `(s, a, r, s', a')`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: RawState,
    pub action: usize,
    pub reward: S,
    pub next_state: RawState,
    pub next_action: usize,
}

fn explores<S: Scalar>(rng: &mut ChaCha8Rng, epsilon: S) -> bool {
    rng.gen::<f64>() < epsilon.to_f64().unwrap_or(0.0)
}

/// Common driver interface used by the simulation loop.
pub trait TabularAgent<S: Scalar> {
    /// First observation of an episode; returns the first action.
    fn begin(&mut self, s: &RawState) -> usize;

    /// Learns from `(s, a, r, s')` and returns the action taken in `s'`.
    fn advance(&mut self, s: &RawState, a: usize, reward: S, next: &RawState) -> Result<usize>;

    /// Sizes at step `t`; `visited` is the number of distinct raw states seen
    /// so far on this trajectory.
    fn size_sample(&self, t: Step, visited: usize) -> SizeSample;
}

/// Raw state to action-value row, deduplicated by state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayTable<S> {
    action_count: usize,
    entries: BTreeMap<RawState, Vec<S>>,
}

impl<S: Scalar> ReplayTable<S> {
    pub fn new(action_count: usize) -> Self {
        ReplayTable {
            action_count,
            entries: BTreeMap::new(),
        }
    }

    /// Number of states held (`m_Q`).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `action_count * m_Q`.
    pub fn msize(&self) -> u64 {
        (self.action_count * self.entries.len()) as u64
    }

    pub fn row(&self, s: &RawState) -> Option<&[S]> {
        self.entries.get(s).map(Vec::as_slice)
    }

    pub fn row_mut(&mut self, s: RawState) -> &mut Vec<S> {
        let n = self.action_count;
        self.entries.entry(s).or_insert_with(|| vec![S::zero(); n])
    }

    pub fn contains(&self, s: &RawState) -> bool {
        self.entries.contains_key(s)
    }
}

/// Non-memory baseline: epsilon-greedy SARSA over raw states.
#[derive(Clone, Debug)]
pub struct SarsaAgent<S> {
    table: ReplayTable<S>,
    hp: HyperParams<S>,
    rng: ChaCha8Rng,
}

impl<S: Scalar> SarsaAgent<S> {
    pub fn new(hp: HyperParams<S>, seed: u64) -> Result<Self> {
        hp.validate()?;
        Ok(SarsaAgent {
            table: ReplayTable::new(hp.action_count),
            hp,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_rng(hp: HyperParams<S>, rng: ChaCha8Rng) -> Result<Self> {
        hp.validate()?;
        Ok(SarsaAgent {
            table: ReplayTable::new(hp.action_count),
            hp,
            rng,
        })
    }

    pub fn table(&self) -> &ReplayTable<S> {
        &self.table
    }

    pub fn hyper_params(&self) -> &HyperParams<S> {
        &self.hp
    }

    /// Epsilon-greedy action; inserts a zero row for unseen states.
    pub fn act(&mut self, s: &RawState) -> usize {
        let explore = explores(&mut self.rng, self.hp.epsilon);
        let row = self.table.row_mut(*s);
        if explore {
            self.rng.gen_range(0..self.hp.action_count)
        } else {
            argmax(row).0
        }
    }

    pub fn learn(&mut self, tr: &Transition<S>) -> Result<()> {
        let q_next = self
            .table
            .row(&tr.next_state)
            .map(|row| row.get(tr.next_action).copied().unwrap_or_else(S::zero))
            .unwrap_or_else(S::zero);
        let row = self.table.row_mut(tr.state);
        sarsa_update(row, tr.action, tr.reward, q_next, self.hp.alpha, self.hp.gamma)
    }

    pub fn size_sample(&self, t: Step) -> SizeSample {
        SizeSample::from_counts(t, self.hp.action_count, 0, 0, self.table.len())
    }
}

/// Memory-based agent: canonical-state STM with periodic staging into LTM.
///
/// Within one environment step the caller picks the next action with
/// [`choose`](Self::choose) and then calls [`step_end`](Self::step_end), which
/// records the observation of the next state: either as the fresh entry of a
/// staging event or as a plain STM observation. [`act`](Self::act) combines
/// both and is used for the first observation of an episode.
#[derive(Clone, Debug)]
pub struct DualMemoryAgent<S> {
    stm: ShortTermMemory<CanonicalState, S>,
    ltm: LongTermMemory<CanonicalState, S>,
    group: SymmetryGroup,
    hp: HyperParams<S>,
    step_counter: Step,
    stagings: u64,
    rng: ChaCha8Rng,
}

impl<S: Scalar> DualMemoryAgent<S> {
    pub fn new(hp: HyperParams<S>, group: SymmetryGroup, seed: u64) -> Result<Self> {
        Self::with_rng(hp, group, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(hp: HyperParams<S>, group: SymmetryGroup, rng: ChaCha8Rng) -> Result<Self> {
        hp.validate()?;
        if group.shape().phase_count as usize != hp.action_count {
            return Err(Error::ActionCountMismatch {
                expected: hp.action_count,
                got: group.shape().phase_count as usize,
            });
        }
        Ok(DualMemoryAgent {
            stm: ShortTermMemory::new(hp.action_count),
            ltm: LongTermMemory::new(),
            group,
            hp,
            step_counter: 0,
            stagings: 0,
            rng,
        })
    }

    pub fn stm(&self) -> &ShortTermMemory<CanonicalState, S> {
        &self.stm
    }

    pub fn ltm(&self) -> &LongTermMemory<CanonicalState, S> {
        &self.ltm
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    pub fn hyper_params(&self) -> &HyperParams<S> {
        &self.hp
    }

    pub fn step_counter(&self) -> Step {
        self.step_counter
    }

    /// Number of staging events so far.
    pub fn stagings(&self) -> u64 {
        self.stagings
    }

    pub fn msize(&self) -> u64 {
        memory::msize_dual(&self.ltm, &self.stm, self.hp.action_count)
    }

    /// Policy without recording an observation. Exploration is drawn first;
    /// LTM wins over STM; an unseen state behaves like a zero row.
    pub fn choose(&mut self, s: &RawState) -> usize {
        let (c, element) = self.group.canonicalize_with(s);
        let back = self.group.inverse_index(element);
        let canonical_action = if explores(&mut self.rng, self.hp.epsilon) {
            self.rng.gen_range(0..self.hp.action_count)
        } else if let Some(entry) = self.ltm.get(&c) {
            entry.action
        } else {
            self.stm.get(&c).map_or(0, |e| argmax(&e.q_row).0)
        };
        self.group.remap_action(canonical_action, back)
    }

    /// Chooses an action for `s` and records the observation at the current
    /// step.
    pub fn act(&mut self, s: &RawState) -> usize {
        let a = self.choose(s);
        let c = self.group.canonicalize(s);
        self.stm.observe(c, self.step_counter);
        a
    }

    /// TD update for the transition, then advances the step counter and either
    /// stages (if the new step is a staging step) or observes `next_state`.
    pub fn step_end(&mut self, tr: &Transition<S>) -> Result<Option<StageOutcome>> {
        let (c, element) = self.group.canonicalize_with(&tr.state);
        let (c_next, element_next) = self.group.canonicalize_with(&tr.next_state);
        let a = self.group.remap_action(tr.action, element);
        let a_next = self.group.remap_action(tr.next_action, element_next);

        let q_next = match (self.stm.get(&c_next), self.ltm.get(&c_next)) {
            (Some(entry), _) => entry.q_row[a_next],
            (None, Some(entry)) => entry.q,
            (None, None) => S::zero(),
        };
        if !self.stm.contains(&c) {
            // Only possible when `state` was never observed through this agent.
            self.stm.observe(c, self.step_counter);
        }
        let row = &mut self.stm.get_mut(&c).expect("observed above").q_row;
        sarsa_update(row, a, tr.reward, q_next, self.hp.alpha, self.hp.gamma)?;

        self.step_counter += 1;
        if memory::staging_indicator(self.step_counter, self.hp.t_stage) {
            self.stagings += 1;
            let out = memory::stage(&mut self.stm, &mut self.ltm, self.hp.kappa, c_next, self.step_counter);
            Ok(Some(out))
        } else {
            self.stm.observe(c_next, self.step_counter);
            Ok(None)
        }
    }

    /// Sizes at the current step. `m_q` is supplied by the caller (the number
    /// of distinct raw states a replay table would hold on this trajectory).
    pub fn size_sample(&self, m_q: usize) -> SizeSample {
        SizeSample::from_counts(
            self.step_counter,
            self.hp.action_count,
            self.stm.len(),
            self.ltm.len(),
            m_q,
        )
    }
}

impl<S: Scalar> TabularAgent<S> for SarsaAgent<S> {
    fn begin(&mut self, s: &RawState) -> usize {
        self.act(s)
    }

    fn advance(&mut self, s: &RawState, a: usize, reward: S, next: &RawState) -> Result<usize> {
        let next_action = self.act(next);
        self.learn(&Transition {
            state: *s,
            action: a,
            reward,
            next_state: *next,
            next_action,
        })?;
        Ok(next_action)
    }

    fn size_sample(&self, t: Step, _visited: usize) -> SizeSample {
        SarsaAgent::size_sample(self, t)
    }
}

impl<S: Scalar> TabularAgent<S> for DualMemoryAgent<S> {
    fn begin(&mut self, s: &RawState) -> usize {
        self.act(s)
    }

    fn advance(&mut self, s: &RawState, a: usize, reward: S, next: &RawState) -> Result<usize> {
        let next_action = self.choose(next);
        self.step_end(&Transition {
            state: *s,
            action: a,
            reward,
            next_state: *next,
            next_action,
        })?;
        Ok(next_action)
    }

    fn size_sample(&self, _t: Step, visited: usize) -> SizeSample {
        DualMemoryAgent::size_sample(self, visited)
    }
}
