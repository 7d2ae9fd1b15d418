//! Intersection approaches and signal phases.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The four approaches of an intersection, in `N, E, S, W` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Approach {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::North, Approach::East, Approach::South, Approach::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Approach {
        Self::ALL[i % 4]
    }

    fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

/// Set of approaches a phase serves, as a 4-bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase(u8);

impl Phase {
    pub fn new(approaches: &[Approach]) -> Self {
        Phase(approaches.iter().fold(0, |m, a| m | (1 << a.index())))
    }

    pub fn serves(self, a: Approach) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn approaches(self) -> impl Iterator<Item = Approach> {
        Approach::ALL.into_iter().filter(move |a| self.serves(*a))
    }

    /// Image of the phase when approach `i` is relabeled to `perm[i]`.
    pub fn permuted(self, perm: &[usize; 4]) -> Phase {
        Phase(self.approaches().fold(0, |m, a| m | (1 << perm[a.index()])))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("-");
        }
        for a in self.approaches() {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

impl FromStr for Phase {
    type Err = Error;

    /// `"NS"`, `"EW"`, `"N"`, ... ; `"-"` is the all-red phase.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Phase(0));
        }
        let mut mask = 0u8;
        for c in s.chars() {
            let bit = match c.to_ascii_uppercase() {
                'N' => 0,
                'E' => 1,
                'S' => 2,
                'W' => 3,
                _ => return Err(Error::invalid("phases", format!("unknown approach `{c}` in `{s}`"))),
            };
            mask |= 1 << bit;
        }
        if mask == 0 {
            return Err(Error::invalid("phases", "empty phase name"));
        }
        Ok(Phase(mask))
    }
}

/// The signal phases available at every intersection. Action `i` selects
/// phase `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    phases: Vec<Phase>,
}

impl ActionSpace {
    pub fn new(phases: Vec<Phase>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("phases", "at least one phase is required"));
        }
        for (i, p) in phases.iter().enumerate() {
            if phases[..i].contains(p) {
                return Err(Error::invalid("phases", format!("duplicate phase {p}")));
            }
        }
        Ok(ActionSpace { phases })
    }

    /// One protected phase per approach: `N, E, S, W`.
    pub fn protected() -> Self {
        ActionSpace {
            phases: Approach::ALL.iter().map(|a| Phase::new(&[*a])).collect(),
        }
    }

    /// Two through phases: `NS, EW`.
    pub fn through() -> Self {
        ActionSpace {
            phases: vec![
                Phase::new(&[Approach::North, Approach::South]),
                Phase::new(&[Approach::East, Approach::West]),
            ],
        }
    }

    pub fn parse<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let phases = names.iter().map(|n| n.as_ref().parse()).collect::<Result<Vec<_>>>()?;
        Self::new(phases)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phase(&self, action: usize) -> Phase {
        self.phases[action]
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn index_of(&self, phase: Phase) -> Option<usize> {
        self.phases.iter().position(|p| *p == phase)
    }

    pub fn names(&self) -> Vec<String> {
        self.phases.iter().map(|p| p.to_string()).collect()
    }
}
