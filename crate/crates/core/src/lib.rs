//! Tabular reinforcement learning with a dual short-term/long-term memory.
//!
//! Agents keep a short-term table of full action-value rows over
//! symmetry-reduced states and periodically consolidate a fraction of it into
//! a long-term store of `(state, action, value)` triples. The [`analysis`]
//! module gives exact closed forms for how that memory compares in size with a
//! plain SARSA replay table, and [`gridsim`] provides a small grid traffic
//! network for measuring the growth empirically.

pub mod agents;
pub mod analysis;
pub mod approach;
pub mod equivalence;
pub mod error;
pub mod gridsim;
pub mod memory;
pub mod num;
pub mod sample;

pub use agents::{DualMemoryAgent, HyperParams, ReplayTable, SarsaAgent, TabularAgent, Transition};
pub use equivalence::{CanonicalState, RawState, SymmetryGroup, SymmetryKind};
pub use error::{Error, Result};
pub use num::{Field, Kappa, Rational, Scalar};
pub use sample::SizeSample;

pub type DualMemoryAgentF64 = DualMemoryAgent<f64>;
pub type DualMemoryAgentF32 = DualMemoryAgent<f32>;
pub type SarsaAgentF64 = SarsaAgent<f64>;
pub type SarsaAgentF32 = SarsaAgent<f32>;
pub type HyperParamsF64 = HyperParams<f64>;
pub type ShortTermMemoryF64 = memory::ShortTermMemory<CanonicalState, f64>;
pub type LongTermMemoryF64 = memory::LongTermMemory<CanonicalState, f64>;
