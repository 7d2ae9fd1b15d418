//! Grid traffic network: `rows x cols` signalized intersections with straight
//! through movements and Bernoulli arrivals on the boundary.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::agents::TabularAgent;
pub use crate::approach::{ActionSpace, Approach, Phase};
use crate::equivalence::RawState;
use crate::error::{Error, Result};
use crate::num::{Rational, Scalar};
use crate::sample::{mean_series, SizeSample};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Intersection {
    /// Waiting vehicles per approach, `N, E, S, W`.
    pub queues: [u32; 4],
    pub phase: usize,
}

impl Intersection {
    pub fn total_queue(&self) -> u64 {
        self.queues.iter().map(|q| *q as u64).sum()
    }
}

/// Index of the first bound `>= queue`; the last bin is open-ended.
pub fn bin_index(queue: u32, bins: &[u32]) -> u8 {
    bins.iter().position(|b| queue <= *b).unwrap_or(bins.len()) as u8
}

pub fn encode_state(i: &Intersection, bins: &[u32]) -> RawState {
    RawState::new(i.queues.map(|q| bin_index(q, bins)), i.phase as u8)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    /// Bernoulli arrival probability per boundary approach per step.
    pub arrival_rate: Rational,
    /// Vehicles served per step on each approach of the active phase.
    pub discharge: u32,
    /// Ascending queue-bin upper bounds.
    pub bins: Vec<u32>,
    pub actions: ActionSpace,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            rows: 3,
            cols: 3,
            arrival_rate: Rational::new(3, 10),
            discharge: 2,
            bins: vec![1, 3],
            actions: ActionSpace::protected(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("rows/cols", format!("{}x{} grid", self.rows, self.cols)));
        }
        if self.arrival_rate < Rational::zero() || self.arrival_rate > Rational::one() {
            return Err(Error::invalid(
                "arrival_rate",
                format!("{} outside [0, 1]", self.arrival_rate),
            ));
        }
        if self.discharge == 0 {
            return Err(Error::invalid("discharge", "must be positive"));
        }
        if self.bins.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bins", "bounds must be strictly increasing"));
        }
        if self.bins.len() >= u8::MAX as usize || self.actions.len() > u8::MAX as usize {
            return Err(Error::invalid("bins", "too many bins or phases"));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> u8 {
        self.bins.len() as u8 + 1
    }
}

/// Per-step vehicle accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    /// `-(queue sum)` per intersection after the step.
    pub rewards: Vec<i64>,
    pub arrivals: u64,
    /// Vehicles that left the grid.
    pub exits: u64,
    pub discharged: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridNetwork {
    config: GridConfig,
    cells: Vec<Intersection>,
}

impl GridNetwork {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let cells = vec![Intersection::default(); config.rows * config.cols];
        Ok(GridNetwork { config, cells })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn cells(&self) -> &[Intersection] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Intersection] {
        &mut self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn observe(&self, idx: usize) -> RawState {
        encode_state(&self.cells[idx], &self.config.bins)
    }

    pub fn total_vehicles(&self) -> u64 {
        self.cells.iter().map(Intersection::total_queue).sum()
    }

    /// Cell receiving vehicles that pass straight through approach `a` of
    /// cell `(r, c)`, or `None` when they leave the grid.
    fn downstream(&self, r: usize, c: usize, a: Approach) -> Option<usize> {
        let (rows, cols) = (self.config.rows, self.config.cols);
        let (nr, nc) = match a {
            Approach::North => (r + 1, c),
            Approach::South => (r.checked_sub(1)?, c),
            Approach::East => (r, c.checked_sub(1)?),
            Approach::West => (r, c + 1),
        };
        (nr < rows && nc < cols).then_some(nr * cols + nc)
    }

    /// True when approach `a` of cell `(r, c)` is fed from outside the grid.
    fn is_boundary(&self, r: usize, c: usize, a: Approach) -> bool {
        match a {
            Approach::North => r == 0,
            Approach::South => r + 1 == self.config.rows,
            Approach::West => c == 0,
            Approach::East => c + 1 == self.config.cols,
        }
    }

    /// Advances one step: set phases, discharge served approaches from the
    /// pre-step queues, move vehicles downstream, then draw boundary arrivals.
    pub fn step(&mut self, actions: &[usize], rng: &mut ChaCha8Rng) -> Result<StepOutcome> {
        if actions.len() != self.cells.len() {
            return Err(Error::ActionCountMismatch {
                expected: self.cells.len(),
                got: actions.len(),
            });
        }
        if let Some(a) = actions.iter().find(|a| **a >= self.config.actions.len()) {
            return Err(Error::Structural(format!("action {a} has no phase")));
        }
        let cols = self.config.cols;
        let mut out = StepOutcome::default();
        let mut inflow = vec![[0u32; 4]; self.cells.len()];
        for (idx, action) in actions.iter().enumerate() {
            let phase = self.config.actions.phase(*action);
            self.cells[idx].phase = *action;
            for a in phase.approaches() {
                let q = &mut self.cells[idx].queues[a.index()];
                let served = (*q).min(self.config.discharge);
                *q -= served;
                out.discharged += served as u64;
                match self.downstream(idx / cols, idx % cols, a) {
                    Some(next) => inflow[next][a.index()] += served,
                    None => out.exits += served as u64,
                }
            }
        }
        let (num, den) = (
            *self.config.arrival_rate.numer() as u32,
            *self.config.arrival_rate.denom() as u32,
        );
        for (idx, incoming) in inflow.iter().enumerate() {
            for a in Approach::ALL {
                let mut q = incoming[a.index()];
                if self.is_boundary(idx / cols, idx % cols, a) && num > 0 && rng.gen_ratio(num, den) {
                    q += 1;
                    out.arrivals += 1;
                }
                self.cells[idx].queues[a.index()] += q;
            }
        }
        out.rewards = self.cells.iter().map(|c| -(c.total_queue() as i64)).collect();
        Ok(out)
    }
}

/// Memory-growth record of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    /// One series per intersection, `steps + 1` samples each.
    pub per_intersection: Vec<Vec<SizeSample>>,
    pub mean: Vec<SizeSample<Rational>>,
    /// Distinct raw states observed at each intersection.
    pub visited: Vec<BTreeSet<RawState>>,
}

/// Runs the observe, act, step, learn loop for `steps` steps with one agent
/// per intersection.
///
/// For agents without a replay table, `m_q` reports the number of distinct raw
/// states observed at that intersection, i.e. what a replay table would hold
/// on the same trajectory.
pub fn run_experiment<S: Scalar, A: TabularAgent<S>>(
    net: &mut GridNetwork,
    agents: &mut [A],
    steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ExperimentRecord> {
    if agents.len() != net.len() {
        return Err(Error::Structural(format!(
            "{} agents for {} intersections",
            agents.len(),
            net.len()
        )));
    }
    let n = net.len();
    let mut visited = vec![BTreeSet::new(); n];
    let mut series: Vec<Vec<SizeSample>> = vec![Vec::with_capacity(steps as usize + 1); n];
    let mut states: Vec<RawState> = (0..n).map(|i| net.observe(i)).collect();
    let mut actions: Vec<usize> = agents.iter_mut().zip(&states).map(|(ag, s)| ag.begin(s)).collect();

    let record = |series: &mut Vec<Vec<SizeSample>>, visited: &[BTreeSet<RawState>], agents: &[A], t: u64| {
        for (i, agent) in agents.iter().enumerate() {
            series[i].push(agent.size_sample(t, visited[i].len()));
        }
    };
    for (v, s) in visited.iter_mut().zip(&states) {
        v.insert(*s);
    }
    record(&mut series, &visited, agents, 0);

    for t in 1..=steps {
        let outcome = net.step(&actions, rng)?;
        for i in 0..n {
            let next = net.observe(i);
            let reward = S::from_f64(outcome.rewards[i] as f64);
            actions[i] = agents[i].advance(&states[i], actions[i], reward, &next)?;
            states[i] = next;
            visited[i].insert(next);
        }
        record(&mut series, &visited, agents, t);
    }
    let mean = mean_series(&series);
    Ok(ExperimentRecord {
        per_intersection: series,
        mean,
        visited,
    })
}
