//! Closed-form memory ratios for the worst- and best-case trajectories, the
//! hyperparameter constraint checker, and a direct simulation of the memory
//! recurrences that the closed forms are checked against.
//!
//! Every ratio here is `msize_q / msize_dual`. The closed forms are generic
//! over [`Field`] so the same code yields exact [`Rational`]s for verification
//! and `f64` for plotting.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::memory::{self, LongTermMemory, ShortTermMemory, Step};
use crate::num::{Field, Kappa, Rational};
use crate::sample::SizeSample;

/// Ratios just after (`zeta1`) and just before (`zeta2`) a staging step.
#[derive(Clone, Debug, PartialEq)]
pub struct ZetaPair<F> {
    pub zeta1: F,
    pub zeta2: F,
}

/// Worst case (every state new) at `t = n*T` and `t = n*T - 1`.
///
/// `zeta1 = (nT + 1)|A| / (|A| + 3 n kappa T)`,
/// `zeta2 = nT |A| / (T |A| + 3 (n - 1) kappa T)`.
pub fn zeta_worst<F: Field>(n: u64, action_count: usize, t_stage: u64, kappa: Kappa) -> ZetaPair<F> {
    assert!(n >= 1, "n must be positive");
    let a = F::from_count(action_count as u64);
    let t = F::from_count(t_stage);
    let k = F::from_rational(kappa.value());
    let three = F::from_count(3);
    let nf = F::from_count(n);
    let nt = nf.clone() * t.clone();
    let zeta1 = (nt.clone() + F::one()) * a.clone() / (a.clone() + three.clone() * nf * k.clone() * t.clone());
    let zeta2 = nt * a.clone() / (t.clone() * a + three * F::from_count(n - 1) * k * t);
    ZetaPair { zeta1, zeta2 }
}

/// Best case (all `M` states already in LTM) at staging steps and one step
/// before.
///
/// `zeta1 = M |A| / (|A| + 3M)`, `zeta2 = M |A| / (T |A| + 3M)`.
pub fn zeta_best<F: Field>(m_unique: u64, action_count: usize, t_stage: u64) -> ZetaPair<F> {
    assert!(m_unique >= 1, "M must be positive");
    let a = F::from_count(action_count as u64);
    let m = F::from_count(m_unique);
    let three_m = F::from_count(3) * m.clone();
    let top = m * a.clone();
    ZetaPair {
        zeta1: top.clone() / (a.clone() + three_m.clone()),
        zeta2: top / (F::from_count(t_stage) * a + three_m),
    }
}

/// Smallest `M` for which the best case never loses to the replay table:
/// `T |A| / (|A| - 3)`. Undefined for `|A| <= 3`.
pub fn m_bound(action_count: usize, t_stage: u64) -> Option<Rational> {
    (action_count > 3).then(|| Rational::new(t_stage as i64 * action_count as i64, action_count as i64 - 3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// `|A| > 3`, a property of the environment.
    ActionSpace,
    /// `kappa <= |A| / 3`.
    StagingRatio,
    /// `T_stage > 2`.
    StagingPeriod,
    /// `M >= T_stage |A| / (|A| - 3)`.
    UniqueStates,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::ActionSpace => "|A| > 3",
            ConstraintKind::StagingRatio => "kappa <= |A|/3",
            ConstraintKind::StagingPeriod => "T_stage > 2",
            ConstraintKind::UniqueStates => "M >= T_stage*|A|/(|A|-3)",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub satisfied: bool,
    /// Signed slack; positive (or zero for non-strict bounds) when satisfied.
    /// `None` when the bound itself is undefined.
    pub margin: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintReport {
    pub items: Vec<Constraint>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.items.iter().all(|c| c.satisfied)
    }

    pub fn get(&self, kind: ConstraintKind) -> Option<&Constraint> {
        self.items.iter().find(|c| c.kind == kind)
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.items {
            let margin = c.margin.map_or_else(|| "undefined".to_string(), |m| m.to_string());
            writeln!(
                f,
                "{:<28} {:<5} margin {}",
                c.kind.to_string(),
                if c.satisfied { "ok" } else { "FAIL" },
                margin
            )?;
        }
        Ok(())
    }
}

/// Evaluates the hyperparameter and environment conditions under which the
/// dual memory is never larger than the replay table.
pub fn check_constraints(action_count: usize, kappa: Kappa, t_stage: u64, m_unique: Option<u64>) -> ConstraintReport {
    let a = Rational::from_integer(action_count as i64);
    let three = Rational::from_integer(3);
    let mut items = vec![
        Constraint {
            kind: ConstraintKind::ActionSpace,
            satisfied: a > three,
            margin: Some(a - three),
        },
        Constraint {
            kind: ConstraintKind::StagingRatio,
            satisfied: kappa.value() <= a / three,
            margin: Some(a / three - kappa.value()),
        },
        Constraint {
            kind: ConstraintKind::StagingPeriod,
            satisfied: t_stage > 2,
            margin: Some(Rational::from_integer(t_stage as i64 - 2)),
        },
    ];
    if let Some(m) = m_unique {
        let margin = m_bound(action_count, t_stage).map(|b| Rational::from_integer(m as i64) - b);
        items.push(Constraint {
            kind: ConstraintKind::UniqueStates,
            satisfied: margin.is_some_and(|d| d >= Rational::zero()),
            margin,
        });
    }
    ConstraintReport { items }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Every step delivers a state never seen before.
    Worst,
    /// `m_unique` fresh states, one per step, then the same states cyclically.
    Best { m_unique: u64 },
    /// An explicit stream; element `t` is observed at step `t`.
    Replay { states: Vec<String> },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Worst => "worst",
            ScenarioKind::Best { .. } => "best",
            ScenarioKind::Replay { .. } => "replay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub action_count: usize,
    pub t_stage: u64,
    pub kappa: Kappa,
    pub horizon: Step,
}

impl ScenarioSpec {
    /// Step by which every unique state has been seen (best case only).
    pub fn tau(&self) -> Option<Step> {
        match self.kind {
            ScenarioKind::Best { m_unique } => Some(m_unique.saturating_sub(1)),
            _ => None,
        }
    }
}

/// Steps the memory recurrences directly on a state stream: observe at
/// `t = 0`, then at each later step either stage (clearing the STM and
/// inserting the current state) or observe. `m_q` counts distinct states.
pub fn trace_stream<K, I>(stream: I, action_count: usize, t_stage: u64, kappa: Kappa) -> Result<Vec<SizeSample>>
where
    K: Ord + Clone,
    I: IntoIterator<Item = K>,
{
    if t_stage == 0 {
        return Err(Error::invalid("t_stage", "must be at least 1"));
    }
    let mut stm: ShortTermMemory<K, f64> = ShortTermMemory::new(action_count);
    let mut ltm: LongTermMemory<K, f64> = LongTermMemory::new();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (t, state) in stream.into_iter().enumerate() {
        let t = t as Step;
        seen.insert(state.clone());
        if memory::staging_indicator(t, t_stage) {
            memory::stage(&mut stm, &mut ltm, kappa, state, t);
        } else {
            stm.observe(state, t);
        }
        out.push(SizeSample::from_counts(
            t,
            action_count,
            stm.len(),
            ltm.len(),
            seen.len(),
        ));
    }
    Ok(out)
}

/// Full size series for `t = 0..=horizon`.
pub fn trace_synthetic(spec: &ScenarioSpec) -> Result<Vec<SizeSample>> {
    let len = spec.horizon as usize + 1;
    let (a, t, k) = (spec.action_count, spec.t_stage, spec.kappa);
    match &spec.kind {
        ScenarioKind::Worst => trace_stream(0..len as u64, a, t, k),
        ScenarioKind::Best { m_unique } => {
            if *m_unique == 0 {
                return Err(Error::invalid("m_unique", "must be positive"));
            }
            let tau = spec.tau().unwrap_or(0);
            if spec.horizon < tau {
                return Err(Error::Structural(format!(
                    "horizon {} ends before all {m_unique} states are seen (tau = {tau})",
                    spec.horizon
                )));
            }
            trace_stream((0..len as u64).map(|i| i % m_unique), a, t, k)
        }
        ScenarioKind::Replay { states } => {
            if states.len() < len {
                return Err(Error::Structural(format!(
                    "replay stream has {} states, horizon {} needs {len}",
                    states.len(),
                    spec.horizon
                )));
            }
            trace_stream(states[..len].iter().cloned(), a, t, k)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    Worst,
    Best,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Worst => "worst",
            Scenario::Best => "best",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst" => Ok(Scenario::Worst),
            "best" => Ok(Scenario::Best),
            other => Err(Error::invalid("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

/// Parameter grid for [`sweep`]. `points` holds `n` values for the worst case
/// and `M` values for the best case.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub scenario: Scenario,
    pub action_counts: Vec<usize>,
    pub kappas: Vec<Kappa>,
    pub t_stages: Vec<u64>,
    pub points: Vec<u64>,
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub scenario: Scenario,
    pub action_count: usize,
    pub kappa: Kappa,
    pub t_stage: u64,
    pub n_or_m: u64,
    pub zeta1: Rational,
    pub zeta2: Rational,
    pub constraints: ConstraintReport,
}

impl BoundReport {
    /// The dual memory is larger than the replay table just before staging.
    pub fn shaded(&self) -> bool {
        self.zeta2 < Rational::one()
    }
}

/// Evaluates the closed forms over the grid in `(|A|, kappa, T, point)` order.
pub fn sweep(grid: &SweepGrid) -> Result<Vec<BoundReport>> {
    if grid.action_counts.is_empty() || grid.kappas.is_empty() || grid.t_stages.is_empty() || grid.points.is_empty() {
        return Err(Error::invalid("grid", "every sweep axis needs at least one value"));
    }
    if grid.points.contains(&0) {
        return Err(Error::invalid("grid", "n and M start at 1"));
    }
    if grid.action_counts.contains(&0) || grid.t_stages.contains(&0) {
        return Err(Error::invalid("grid", "|A| and T_stage must be positive"));
    }
    let mut rows = Vec::new();
    for &a in &grid.action_counts {
        for &k in &grid.kappas {
            for &t in &grid.t_stages {
                for &p in &grid.points {
                    let (pair, m) = match grid.scenario {
                        Scenario::Worst => (zeta_worst::<Rational>(p, a, t, k), None),
                        Scenario::Best => (zeta_best::<Rational>(p, a, t), Some(p)),
                    };
                    rows.push(BoundReport {
                        scenario: grid.scenario,
                        action_count: a,
                        kappa: k,
                        t_stage: t,
                        n_or_m: p,
                        zeta1: pair.zeta1,
                        zeta2: pair.zeta2,
                        constraints: check_constraints(a, k, t, m),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 11] = [
    "scenario",
    "action_count",
    "kappa_num",
    "kappa_den",
    "t_stage",
    "n_or_M",
    "zeta1_num",
    "zeta1_den",
    "zeta2_num",
    "zeta2_den",
    "shaded",
];

pub fn write_sweep_csv<W: Write>(w: W, rows: &[BoundReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        let k = r.kappa.value();
        out.write_record([
            r.scenario.name().to_string(),
            r.action_count.to_string(),
            k.numer().to_string(),
            k.denom().to_string(),
            r.t_stage.to_string(),
            r.n_or_m.to_string(),
            r.zeta1.numer().to_string(),
            r.zeta1.denom().to_string(),
            r.zeta2.numer().to_string(),
            r.zeta2.denom().to_string(),
            u8::from(r.shaded()).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
