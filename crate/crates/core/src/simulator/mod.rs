//! Discrete-time replay of a request scenario.
//!
//! Each state change picks an assignment according to the [`Policy`], pays a
//! container transition (per-ECU stop and start delays), then runs the state's
//! ticks through the contention model. Applications that are being
//! (re)started are down until their ECU finishes its transition, so their
//! flows show up as missing samples.

mod contention;
mod export;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::Scenario;
use crate::io::content_hash;
use crate::model::{AppId, Assignment, EcuId, FlowId, Instance};
use crate::solver::{SelectorRegistry, SolveError};

pub use contention::{
    cpu_factor, live_flows, step_tick, step_tick_with, EcuUsage, FlowObservation, LinkSharing,
    Proportional, TickOutcome,
};
pub use export::{write_tick_table, TICK_TABLE_HEADER};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario state {state} requests {app}, which the instance does not contain")]
    ScenarioMismatch { state: usize, app: AppId },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    /// Every requested application at its nominal level, capacity ignored.
    Baseline,
    /// Levels chosen by a registered selector.
    Optimized { selector: String },
}

impl Policy {
    pub fn optimized() -> Self {
        Policy::Optimized {
            selector: "greedy".to_string(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Policy::Baseline => "baseline",
            Policy::Optimized { .. } => "optimized",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Baseline => f.write_str("baseline"),
            Policy::Optimized { selector } => write!(f, "optimized({selector})"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Policy::Baseline),
            "optimized" => Ok(Policy::optimized()),
            other => Err(format!(
                "unknown policy '{other}' (expected baseline or optimized)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tick_s: f64,
    pub container_start_s: f64,
    pub container_stop_s: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tick_s: 1.0,
            container_start_s: 2.0,
            container_stop_s: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("tick_s", self.tick_s),
            ("container_start_s", self.container_start_s),
            ("container_stop_s", self.container_stop_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn ticks_for(&self, seconds: f64) -> u64 {
        // Slack keeps e.g. 3.0 / 1.0 from rounding up to 4 ticks.
        ((seconds / self.tick_s) - 1e-9).ceil().max(0.0) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub policy: Policy,
    pub instance_hash: String,
    pub scenario_hash: String,
    pub scenario_seed: u64,
    pub config_hash: String,
    pub config: SimConfig,
    pub n_ecus: usize,
}

/// One flow at one tick. `observed`/`health` are `None` when the flow is
/// expected in the current state but one of its endpoints is still starting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub flow: FlowId,
    pub src_ecu: EcuId,
    pub dst_ecu: EcuId,
    pub target_mbps: f64,
    pub observed_mbps: Option<f64>,
    pub health_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub state: usize,
    pub flows: Vec<FlowSample>,
    pub ecus: Vec<EcuUsage>,
    pub link_load: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub index: usize,
    pub start_tick: u64,
    pub n_ticks: u64,
    pub duration_s: u32,
    pub requested: Vec<AppId>,
    pub assignment: Assignment,
    pub total_axil: f64,
    pub starts: usize,
    pub stops: usize,
    /// Slowest ECU's stop/start time.
    pub container_transition_s: f64,
    pub transition_ticks: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTiming {
    pub index: usize,
    pub solve_time_us: u64,
    /// Solve time plus container transition.
    pub transition_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub meta: RunMeta,
    pub states: Vec<StateRecord>,
    pub ticks: Vec<TickRecord>,
    pub timings: Vec<StateTiming>,
}

impl MetricsLog {
    pub fn flow_samples(&self) -> impl Iterator<Item = &FlowSample> {
        self.ticks.iter().flat_map(|t| t.flows.iter())
    }
}

fn health(observed: f64, target: f64) -> f64 {
    (100.0 * observed / target).clamp(0.0, 100.0)
}

pub fn run_scenario(
    instance: &Instance,
    scenario: &Scenario,
    policy: &Policy,
    cfg: &SimConfig,
) -> Result<MetricsLog, SimError> {
    run_scenario_with(
        instance,
        scenario,
        policy,
        cfg,
        &SelectorRegistry::with_builtins(),
        &Proportional,
    )
}

pub fn run_scenario_with(
    instance: &Instance,
    scenario: &Scenario,
    policy: &Policy,
    cfg: &SimConfig,
    registry: &SelectorRegistry,
    sharing: &dyn LinkSharing,
) -> Result<MetricsLog, SimError> {
    cfg.validate()?;
    for (state, s) in scenario.states.iter().enumerate() {
        if let Some(app) = s.requested.iter().find(|a| a.index() >= instance.n_apps()) {
            return Err(SimError::ScenarioMismatch { state, app: *app });
        }
    }
    let selector = match policy {
        Policy::Baseline => None,
        Policy::Optimized { selector } => Some(registry.get(selector)?),
    };

    let n_apps = instance.n_apps();
    let n_ecus = instance.topology.n_ecus();
    let instance_hash = content_hash(instance);
    let scenario_hash = content_hash(scenario);
    let meta = RunMeta {
        policy: policy.clone(),
        config_hash: content_hash(&(&instance_hash, &scenario_hash, policy, cfg, sharing.name())),
        instance_hash,
        scenario_hash,
        scenario_seed: scenario.seed,
        config: cfg.clone(),
        n_ecus,
    };

    let mut previous = Assignment::all_off(n_apps);
    let mut states = Vec::with_capacity(scenario.states.len());
    let mut timings = Vec::with_capacity(scenario.states.len());
    let mut ticks = Vec::new();
    let mut tick: u64 = 0;

    for (index, state) in scenario.states.iter().enumerate() {
        let (target, solve_time) = match selector {
            None => {
                let mut a = Assignment::all_off(n_apps);
                for app in &state.requested {
                    a.set(*app, Some(1));
                }
                (a, Duration::ZERO)
            }
            Some(sel) => {
                let sol = sel.select(instance, &state.requested, &instance.capacity)?;
                (sol.assignment, sol.solve_time)
            }
        };

        let mut starts = vec![0usize; n_ecus];
        let mut stops = vec![0usize; n_ecus];
        let mut changed = vec![false; n_apps];
        for app in &instance.apps {
            let (before, after) = (previous.level(app.id), target.level(app.id));
            if before == after {
                continue;
            }
            let e = app.host_ecu.index();
            if before.is_some() {
                stops[e] += 1;
            }
            if after.is_some() {
                starts[e] += 1;
                changed[app.id.index()] = true;
            }
        }
        let ecu_time: Vec<f64> = (0..n_ecus)
            .map(|e| {
                stops[e] as f64 * cfg.container_stop_s + starts[e] as f64 * cfg.container_start_s
            })
            .collect();
        let ecu_ticks: Vec<u64> = ecu_time.iter().map(|t| cfg.ticks_for(*t)).collect();
        let container_transition_s = ecu_time.iter().copied().fold(0.0, f64::max);

        let expected: Vec<FlowSample> = live_flows(instance, &target)
            .map(|(f, _)| FlowSample {
                flow: f.id,
                src_ecu: instance.apps[f.src.app.index()].host_ecu,
                dst_ecu: instance.apps[f.dst.app.index()].host_ecu,
                target_mbps: f.target_mbps,
                observed_mbps: None,
                health_pct: None,
            })
            .collect();

        let n_ticks = cfg.ticks_for(state.duration_s as f64);
        let start_tick = tick;
        for t in 0..n_ticks {
            let mut running = target.clone();
            for app in &instance.apps {
                if changed[app.id.index()] && t < ecu_ticks[app.host_ecu.index()] {
                    running.set(app.id, None);
                }
            }
            let outcome = step_tick_with(instance, &running, sharing);
            let mut flows = expected.clone();
            flows.sort_by_key(|f| f.flow);
            let mut observed = outcome.flows.iter().peekable();
            for sample in &mut flows {
                while observed.peek().is_some_and(|o| o.flow < sample.flow) {
                    observed.next();
                }
                if let Some(o) = observed.peek().filter(|o| o.flow == sample.flow) {
                    sample.observed_mbps = Some(o.observed_mbps);
                    sample.health_pct = Some(health(o.observed_mbps, o.target_mbps));
                }
            }
            ticks.push(TickRecord {
                tick,
                state: index,
                flows,
                ecus: outcome.ecus,
                link_load: outcome.link_load,
            });
            tick += 1;
        }

        timings.push(StateTiming {
            index,
            solve_time_us: solve_time.as_micros() as u64,
            transition_time_s: solve_time.as_secs_f64() + container_transition_s,
        });
        states.push(StateRecord {
            index,
            start_tick,
            n_ticks,
            duration_s: state.duration_s,
            requested: state.requested.clone(),
            total_axil: target.total_axil(instance),
            assignment: target.clone(),
            starts: starts.iter().sum(),
            stops: stops.iter().sum(),
            container_transition_s,
            transition_ticks: ecu_ticks.iter().copied().max().unwrap_or(0),
        });
        previous = target;
    }

    Ok(MetricsLog {
        meta,
        states,
        ticks,
        timings,
    })
}
