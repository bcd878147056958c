//! Runtime mode selection.
//!
//! Every selection strategy implements [`ModeSelector`] and is looked up by
//! name in a [`SelectorRegistry`]. The built-in registry carries the greedy
//! AXIL-efficiency heuristic (with several cost scalarizations and an
//! eligibility-gated candidate variant) and the exhaustive oracle.

pub mod cost;
mod exact;
mod greedy;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AppId, Assignment, Instance, ModelError, ResourceVector, CAPACITY_TOLERANCE};

pub use cost::{CostModel, MaxCapacitySum, MaxComponent, RemainingSum};
pub use exact::{ExactSolver, SEARCH_SPACE_LIMIT};
pub use greedy::{replay, Candidate, CandidatePolicy, GreedySolver, UpgradeStep};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("capacity component {index} is negative or not finite")]
    InvalidCapacity { index: usize },
    #[error("capacity component {index} exceeds the instance maximum")]
    CapacityAboveMax { index: usize },
    #[error(
        "exhaustive search over {size} assignments exceeds the limit of {limit}; \
         shrink the instance or the request"
    )]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("unknown selector '{name}' (available: {available})")]
    UnknownSelector { name: String, available: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub selector: String,
    pub requested: Vec<AppId>,
    pub assignment: Assignment,
    pub total_axil: f64,
    pub usage: ResourceVector,
    pub iterations: usize,
    #[serde(with = "duration_micros")]
    pub solve_time: Duration,
    /// Upgrades applied by iterative selectors, in order. Empty for the oracle.
    #[serde(default)]
    pub trace: Vec<UpgradeStep>,
}

impl Solution {
    pub fn empty(selector: &str, n_apps: usize, resource_len: usize) -> Self {
        Solution {
            selector: selector.to_string(),
            requested: Vec::new(),
            assignment: Assignment::all_off(n_apps),
            total_axil: 0.0,
            usage: ResourceVector::zeros(resource_len),
            iterations: 0,
            solve_time: Duration::ZERO,
            trace: Vec::new(),
        }
    }
}

mod duration_micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_micros(u64::deserialize(d)?))
    }
}

/// A mode selection strategy.
pub trait ModeSelector: Send + Sync {
    fn name(&self) -> &str;

    fn description(&self) -> &str {
        ""
    }

    fn select(
        &self,
        instance: &Instance,
        requested: &[AppId],
        capacity: &ResourceVector,
    ) -> Result<Solution, SolveError>;
}

impl fmt::Debug for dyn ModeSelector + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModeSelector({})", self.name())
    }
}

/// Named collection of selectors.
pub struct SelectorRegistry {
    entries: Vec<Box<dyn ModeSelector>>,
}

impl SelectorRegistry {
    pub fn empty() -> Self {
        SelectorRegistry {
            entries: Vec::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = SelectorRegistry::empty();
        r.register(Box::new(GreedySolver::default()));
        r.register(Box::new(GreedySolver::new(
            "greedy-eligibility",
            CandidatePolicy::Eligibility,
            Box::new(RemainingSum),
        )));
        r.register(Box::new(GreedySolver::new(
            "greedy-max-component",
            CandidatePolicy::Closure,
            Box::new(MaxComponent),
        )));
        r.register(Box::new(GreedySolver::new(
            "greedy-rmax",
            CandidatePolicy::Closure,
            Box::new(MaxCapacitySum),
        )));
        r.register(Box::new(ExactSolver::default()));
        r
    }

    /// Adds a selector, replacing any existing one with the same name.
    pub fn register(&mut self, selector: Box<dyn ModeSelector>) {
        self.entries.retain(|s| s.name() != selector.name());
        self.entries.push(selector);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ModeSelector, SolveError> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| SolveError::UnknownSelector {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

impl Default for SelectorRegistry {
    fn default() -> Self {
        SelectorRegistry::with_builtins()
    }
}

pub fn solve_greedy(
    instance: &Instance,
    requested: &[AppId],
    capacity: &ResourceVector,
) -> Result<Solution, SolveError> {
    GreedySolver::default().select(instance, requested, capacity)
}

pub fn solve_exact(
    instance: &Instance,
    requested: &[AppId],
    capacity: &ResourceVector,
) -> Result<Solution, SolveError> {
    ExactSolver::default().select(instance, requested, capacity)
}

/// The upgrade log of a greedy solution.
pub fn explain(solution: &Solution, _instance: &Instance) -> Vec<UpgradeStep> {
    solution.trace.clone()
}

/// Checks the request and capacity, returning the request sorted and deduplicated.
pub(crate) fn check_request(
    instance: &Instance,
    requested: &[AppId],
    capacity: &ResourceVector,
) -> Result<Vec<AppId>, SolveError> {
    let expected = instance.layout().len();
    if capacity.len() != expected {
        return Err(ModelError::ResourceLength {
            expected,
            got: capacity.len(),
        }
        .into());
    }
    for (index, c) in capacity.iter().enumerate() {
        if !(*c >= 0.0) || !c.is_finite() {
            return Err(SolveError::InvalidCapacity { index });
        }
        if let Some(max) = instance.max_capacity.0.get(index) {
            if *c > max + CAPACITY_TOLERANCE {
                return Err(SolveError::CapacityAboveMax { index });
            }
        }
    }
    let mut req = requested.to_vec();
    req.sort();
    req.dedup();
    for a in &req {
        instance.app(*a)?;
    }
    Ok(req)
}
