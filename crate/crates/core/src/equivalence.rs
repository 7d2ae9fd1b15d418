//! Equivalence classes of intersection states under a finite symmetry group.
//!
//! A group element relabels approaches (moving the queue observed at approach
//! `i` to approach `perm[i]`) and carries the phase along with it. Every state
//! is represented by the lexicographically smallest member of its orbit.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::approach::ActionSpace;
use crate::error::{Error, Result};

/// Discretized observation at one intersection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawState {
    /// Queue bin per approach, `N, E, S, W`.
    pub queue_bins: [u8; 4],
    pub phase: u8,
}

impl RawState {
    pub fn new(queue_bins: [u8; 4], phase: u8) -> Self {
        RawState { queue_bins, phase }
    }
}

impl fmt::Display for RawState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [n, e, s, w] = self.queue_bins;
        write!(f, "{n}{e}{s}{w}:{}", self.phase)
    }
}

/// Orbit representative. Only [`SymmetryGroup::canonicalize`] builds one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalState(RawState);

impl CanonicalState {
    pub fn raw(&self) -> RawState {
        self.0
    }
}

impl fmt::Display for CanonicalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Valid range of state components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateShape {
    pub bin_count: u8,
    pub phase_count: u8,
}

impl StateShape {
    pub fn contains(&self, s: &RawState) -> bool {
        s.phase < self.phase_count && s.queue_bins.iter().all(|b| *b < self.bin_count)
    }

    pub fn size(&self) -> usize {
        (self.bin_count as usize).pow(4) * self.phase_count as usize
    }

    /// Every valid state, in lexicographic order.
    pub fn enumerate(&self) -> Vec<RawState> {
        let b = self.bin_count;
        let mut out = Vec::with_capacity(self.size());
        for n in 0..b {
            for e in 0..b {
                for s in 0..b {
                    for w in 0..b {
                        for p in 0..self.phase_count {
                            out.push(RawState::new([n, e, s, w], p));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    #[default]
    Dihedral,
    Identity,
}

impl FromStr for SymmetryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dihedral" => Ok(SymmetryKind::Dihedral),
            "identity" => Ok(SymmetryKind::Identity),
            other => Err(Error::invalid("symmetry", format!("unknown group `{other}`"))),
        }
    }
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymmetryKind::Dihedral => "dihedral",
            SymmetryKind::Identity => "identity",
        })
    }
}

/// One group element: an approach permutation with its induced phase
/// relabeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symmetry {
    label: String,
    approaches: [usize; 4],
    phases: Vec<usize>,
}

impl Symmetry {
    fn from_approaches(label: String, approaches: [usize; 4], actions: &ActionSpace) -> Result<Self> {
        let phases = actions
            .phases()
            .iter()
            .map(|p| {
                actions
                    .index_of(p.permuted(&approaches))
                    .ok_or_else(|| Error::PhaseSetNotClosed { element: label.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Symmetry {
            label,
            approaches,
            phases,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, s: &RawState) -> RawState {
        let mut bins = [0u8; 4];
        for (i, b) in s.queue_bins.iter().enumerate() {
            bins[self.approaches[i]] = *b;
        }
        RawState::new(bins, self.phases[s.phase as usize] as u8)
    }

    /// Action index corresponding to `action` after relabeling.
    pub fn remap_action(&self, action: usize) -> usize {
        self.phases[action]
    }

    /// `self ∘ other`: apply `other` first.
    fn compose(&self, other: &Symmetry) -> ([usize; 4], Vec<usize>) {
        let approaches = std::array::from_fn(|i| self.approaches[other.approaches[i]]);
        let phases = other.phases.iter().map(|p| self.phases[*p]).collect();
        (approaches, phases)
    }

    fn same_action(&self, approaches: &[usize; 4], phases: &[usize]) -> bool {
        self.approaches == *approaches && self.phases == phases
    }
}

/// Finite group acting on [`RawState`]s and on action indices.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    kind: SymmetryKind,
    elements: Vec<Symmetry>,
    identity: usize,
    inverse: Vec<usize>,
    shape: StateShape,
}

impl SymmetryGroup {
    pub fn new(kind: SymmetryKind, actions: &ActionSpace, bin_count: u8) -> Result<Self> {
        match kind {
            SymmetryKind::Dihedral => Self::dihedral(actions, bin_count),
            SymmetryKind::Identity => Self::identity(actions, bin_count),
        }
    }

    /// Four rotations and four reflections of the intersection.
    pub fn dihedral(actions: &ActionSpace, bin_count: u8) -> Result<Self> {
        let mut elements = Vec::with_capacity(8);
        for k in 0..4 {
            let perm = std::array::from_fn(|i| (i + k) % 4);
            elements.push(Symmetry::from_approaches(format!("r{}", 90 * k), perm, actions)?);
        }
        for k in 0..4 {
            let perm = std::array::from_fn(|i| (k + 4 - i) % 4);
            elements.push(Symmetry::from_approaches(format!("m{k}"), perm, actions)?);
        }
        Self::from_elements(SymmetryKind::Dihedral, elements, actions, bin_count)
    }

    pub fn identity(actions: &ActionSpace, bin_count: u8) -> Result<Self> {
        let e = Symmetry::from_approaches("r0".into(), [0, 1, 2, 3], actions)?;
        Self::from_elements(SymmetryKind::Identity, vec![e], actions, bin_count)
    }

    /// Checks the group axioms on the full composition table.
    fn from_elements(
        kind: SymmetryKind,
        elements: Vec<Symmetry>,
        actions: &ActionSpace,
        bin_count: u8,
    ) -> Result<Self> {
        let n = elements.len();
        let find =
            |approaches: &[usize; 4], phases: &[usize]| elements.iter().position(|e| e.same_action(approaches, phases));
        let ident_phases: Vec<usize> = (0..actions.len()).collect();
        let identity = find(&[0, 1, 2, 3], &ident_phases)
            .ok_or_else(|| Error::Structural("symmetry group lacks the identity".into()))?;
        let mut table = vec![vec![0usize; n]; n];
        for a in 0..n {
            for b in 0..n {
                let (ap, ph) = elements[a].compose(&elements[b]);
                table[a][b] = find(&ap, &ph).ok_or_else(|| {
                    Error::Structural(format!(
                        "symmetry group not closed: {} ∘ {}",
                        elements[a].label, elements[b].label
                    ))
                })?;
            }
        }
        let inverse = (0..n)
            .map(|a| {
                (0..n)
                    .find(|b| table[a][*b] == identity && table[*b][a] == identity)
                    .ok_or_else(|| Error::Structural(format!("{} has no inverse", elements[a].label)))
            })
            .collect::<Result<Vec<_>>>()?;
        if bin_count == 0 {
            return Err(Error::invalid("bins", "need at least one queue bin"));
        }
        Ok(SymmetryGroup {
            kind,
            elements,
            identity,
            inverse,
            shape: StateShape {
                bin_count,
                phase_count: actions.len() as u8,
            },
        })
    }

    pub fn kind(&self) -> SymmetryKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn shape(&self) -> StateShape {
        self.shape
    }

    pub fn element(&self, i: usize) -> &Symmetry {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Symmetry] {
        &self.elements
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn orbit(&self, s: &RawState) -> BTreeSet<RawState> {
        self.elements.iter().map(|e| e.apply(s)).collect()
    }

    /// Orbit minimum plus the index of the first element reaching it.
    pub fn canonicalize_with(&self, s: &RawState) -> (CanonicalState, usize) {
        let mut best = (self.elements[self.identity].apply(s), self.identity);
        for (i, e) in self.elements.iter().enumerate() {
            let image = e.apply(s);
            if image < best.0 || (image == best.0 && i < best.1) {
                best = (image, i);
            }
        }
        (CanonicalState(best.0), best.1)
    }

    pub fn canonicalize(&self, s: &RawState) -> CanonicalState {
        self.canonicalize_with(s).0
    }

    pub fn remap_action(&self, action: usize, element: usize) -> usize {
        self.elements[element].remap_action(action)
    }

    /// Number of orbits over the whole state space.
    pub fn class_count(&self) -> usize {
        self.shape
            .enumerate()
            .iter()
            .map(|s| self.canonicalize(s))
            .collect::<BTreeSet<_>>()
            .len()
    }
}
