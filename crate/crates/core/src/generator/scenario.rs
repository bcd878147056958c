use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::model::{AppId, Instance};

pub const MIN_STATE_SECS: u32 = 10;
pub const MAX_STATE_SECS: u32 = 60;
const INCLUSION_PROBABILITY: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioState {
    /// Requested applications, sorted and closed under dependencies.
    pub requested: Vec<AppId>,
    pub duration_s: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub states: Vec<ScenarioState>,
}

impl Scenario {
    pub fn total_duration_s(&self) -> u64 {
        self.states.iter().map(|s| s.duration_s as u64).sum()
    }
}

/// Scenario drawn from its own stream so it never perturbs instance draws.
pub fn gen_scenario(instance: &Instance, n_states: usize, seed: u64) -> Result<Scenario, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    gen_scenario_with(instance, n_states, seed, &mut rng)
}

pub fn gen_scenario_with<R: Rng + ?Sized>(
    instance: &Instance,
    n_states: usize,
    seed: u64,
    rng: &mut R,
) -> Result<Scenario, GenError> {
    if n_states == 0 {
        return Err(GenError::InvalidParams(
            "a scenario needs at least one state".into(),
        ));
    }
    let providers = provider_lists(instance);
    let states = (0..n_states)
        .map(|_| {
            let drawn: Vec<AppId> = instance
                .app_ids()
                .filter(|_| rng.gen_bool(INCLUSION_PROBABILITY))
                .collect();
            let requested = dependency_closure(&providers, drawn);
            let duration_s = rng.gen_range(MIN_STATE_SECS..=MAX_STATE_SECS);
            ScenarioState {
                requested,
                duration_s,
            }
        })
        .collect();
    Ok(Scenario { seed, states })
}

fn provider_lists(instance: &Instance) -> Vec<Vec<AppId>> {
    let mut providers = vec![Vec::new(); instance.n_apps()];
    for (a, b) in instance.app_edges() {
        providers[a.index()].push(b);
    }
    providers
}

/// Every application reachable from `seeds` over application-level dependencies.
pub fn app_closure(instance: &Instance, seeds: impl IntoIterator<Item = AppId>) -> Vec<AppId> {
    dependency_closure(&provider_lists(instance), seeds)
}

fn dependency_closure(
    providers: &[Vec<AppId>],
    seeds: impl IntoIterator<Item = AppId>,
) -> Vec<AppId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<AppId> = seeds.into_iter().collect();
    while let Some(a) = stack.pop() {
        if seen.insert(a) {
            stack.extend(providers[a.index()].iter().copied());
        }
    }
    seen.into_iter().collect()
}
