//! Aggregation of simulation logs.
//!
//! Quartiles use linear interpolation between closest ranks: for `n` sorted
//! samples the `p` quantile sits at position `p * (n - 1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::AppId;
use crate::simulator::{MetricsLog, Policy};

/// An ECU at or above this CPU usage counts as saturated.
pub const SATURATION_PCT: f64 = 99.5;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("runs come from different instances ({0} vs {1})")]
    InstanceMismatch(String, String),
    #[error("runs come from different scenarios ({0} vs {1})")]
    ScenarioMismatch(String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// `p` quantile of already sorted samples.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

pub fn quartiles(samples: &[f64]) -> Option<Quartiles> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: quantile_sorted(&sorted, 0.25)?,
        median: quantile_sorted(&sorted, 0.5)?,
        q3: quantile_sorted(&sorted, 0.75)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateHealth {
    pub state: usize,
    pub quartiles: Option<Quartiles>,
    pub n_samples: usize,
    pub n_missing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HealthSummary {
    /// `None` when the log holds no observed sample.
    pub quartiles: Option<Quartiles>,
    pub n_samples: usize,
    /// Expected samples lost to transition gaps.
    pub n_missing: usize,
    pub per_state: Vec<StateHealth>,
}

impl HealthSummary {
    pub fn median(&self) -> Option<f64> {
        self.quartiles.map(|q| q.median)
    }
}

pub fn summarize_health(log: &MetricsLog) -> HealthSummary {
    let n_states = log
        .states
        .len()
        .max(log.ticks.iter().map(|t| t.state + 1).max().unwrap_or(0));
    let mut per_state: Vec<(Vec<f64>, usize)> = vec![(Vec::new(), 0); n_states];
    for t in &log.ticks {
        for f in &t.flows {
            match f.health_pct {
                Some(h) => per_state[t.state].0.push(h),
                None => per_state[t.state].1 += 1,
            }
        }
    }
    let all: Vec<f64> = per_state
        .iter()
        .flat_map(|(s, _)| s.iter().copied())
        .collect();
    HealthSummary {
        quartiles: quartiles(&all),
        n_samples: all.len(),
        n_missing: per_state.iter().map(|(_, m)| m).sum(),
        per_state: per_state
            .iter()
            .enumerate()
            .map(|(state, (s, m))| StateHealth {
                state,
                quartiles: quartiles(s),
                n_samples: s.len(),
                n_missing: *m,
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsageStats {
    pub n_ticks: usize,
    /// Ticks with some ECU at or above [`SATURATION_PCT`] CPU.
    pub saturated_ticks: usize,
    /// Ticks with some ECU asked for more than its physical CPU.
    pub overloaded_ticks: usize,
    pub peak_cpu_demand_pct: f64,
    pub peak_cpu_used_pct: f64,
    pub mean_cpu_used_pct: f64,
    pub peak_mem_mb: f64,
    pub peak_link_mbps: f64,
}

pub fn usage_stats(log: &MetricsLog) -> UsageStats {
    let mut s = UsageStats {
        n_ticks: log.ticks.len(),
        saturated_ticks: 0,
        overloaded_ticks: 0,
        peak_cpu_demand_pct: 0.0,
        peak_cpu_used_pct: 0.0,
        mean_cpu_used_pct: 0.0,
        peak_mem_mb: 0.0,
        peak_link_mbps: 0.0,
    };
    let (mut sum, mut n) = (0.0, 0usize);
    for t in &log.ticks {
        if t.ecus.iter().any(|e| e.cpu_used_pct >= SATURATION_PCT) {
            s.saturated_ticks += 1;
        }
        // Physical capacity is 100% on every ECU.
        if t.ecus.iter().any(|e| e.cpu_demand_pct > 100.0) {
            s.overloaded_ticks += 1;
        }
        for e in &t.ecus {
            s.peak_cpu_demand_pct = s.peak_cpu_demand_pct.max(e.cpu_demand_pct);
            s.peak_cpu_used_pct = s.peak_cpu_used_pct.max(e.cpu_used_pct);
            s.peak_mem_mb = s.peak_mem_mb.max(e.mem_used_mb);
            sum += e.cpu_used_pct;
            n += 1;
        }
        for l in &t.link_load {
            s.peak_link_mbps = s.peak_link_mbps.max(*l);
        }
    }
    if n > 0 {
        s.mean_cpu_used_pct = sum / n as f64;
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub solve_time_us: u64,
    /// Solve time plus container transitions over all state changes.
    pub transition_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: Policy,
    pub health: HealthSummary,
    pub usage: UsageStats,
    pub total_axil: Vec<f64>,
    pub container_starts: usize,
    pub container_stops: usize,
    pub container_transition_s: f64,
    pub timing: RunTiming,
}

pub fn summarize_run(log: &MetricsLog) -> RunSummary {
    RunSummary {
        policy: log.meta.policy.clone(),
        health: summarize_health(log),
        usage: usage_stats(log),
        total_axil: log.states.iter().map(|s| s.total_axil).collect(),
        container_starts: log.states.iter().map(|s| s.starts).sum(),
        container_stops: log.states.iter().map(|s| s.stops).sum(),
        container_transition_s: log.states.iter().map(|s| s.container_transition_s).sum(),
        timing: RunTiming {
            solve_time_us: log.timings.iter().map(|t| t.solve_time_us).sum(),
            transition_time_s: log.timings.iter().map(|t| t.transition_time_s).sum(),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTiming {
    pub solve_time_us: i64,
    pub transition_time_s: f64,
}

/// Optimized minus baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub median_pct: Option<f64>,
    pub q1_pct: Option<f64>,
    pub q3_pct: Option<f64>,
    pub saturated_ticks: i64,
    pub overloaded_ticks: i64,
    pub peak_cpu_used_pct: f64,
    pub container_transition_s: f64,
    pub timing: DeltaTiming,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub instance_hash: String,
    pub scenario_hash: String,
    pub scenario_seed: u64,
    pub baseline: RunSummary,
    pub optimized: RunSummary,
    pub deltas: Deltas,
}

pub fn compare_runs(
    baseline: &MetricsLog,
    optimized: &MetricsLog,
) -> Result<RunComparison, MetricsError> {
    let (b, o) = (&baseline.meta, &optimized.meta);
    if b.instance_hash != o.instance_hash {
        return Err(MetricsError::InstanceMismatch(
            b.instance_hash.clone(),
            o.instance_hash.clone(),
        ));
    }
    if b.scenario_hash != o.scenario_hash {
        return Err(MetricsError::ScenarioMismatch(
            b.scenario_hash.clone(),
            o.scenario_hash.clone(),
        ));
    }
    let bs = summarize_run(baseline);
    let os = summarize_run(optimized);
    let q = |s: &RunSummary, f: fn(&Quartiles) -> f64| s.health.quartiles.as_ref().map(f);
    let diff = |f: fn(&Quartiles) -> f64| Some(q(&os, f)? - q(&bs, f)?);
    let deltas = Deltas {
        median_pct: diff(|q| q.median),
        q1_pct: diff(|q| q.q1),
        q3_pct: diff(|q| q.q3),
        saturated_ticks: os.usage.saturated_ticks as i64 - bs.usage.saturated_ticks as i64,
        overloaded_ticks: os.usage.overloaded_ticks as i64 - bs.usage.overloaded_ticks as i64,
        peak_cpu_used_pct: os.usage.peak_cpu_used_pct - bs.usage.peak_cpu_used_pct,
        container_transition_s: os.container_transition_s - bs.container_transition_s,
        timing: DeltaTiming {
            solve_time_us: os.timing.solve_time_us as i64 - bs.timing.solve_time_us as i64,
            transition_time_s: os.timing.transition_time_s - bs.timing.transition_time_s,
        },
    };
    Ok(RunComparison {
        instance_hash: b.instance_hash.clone(),
        scenario_hash: b.scenario_hash.clone(),
        scenario_seed: b.scenario_seed,
        baseline: bs,
        optimized: os,
        deltas,
    })
}

pub const HEALTH_SERIES_HEADER: &str = "run,tick,state,n_samples,n_missing,q1,median,q3";
pub const ECU_SERIES_HEADER: &str = "run,tick,ecu,cpu_demand,cpu_used,mem";
pub const MODE_SERIES_HEADER: &str = "run,state,start_tick,n_ticks,app,level";

/// Flat plot inputs: per-tick health band, per-ECU usage and the mode chosen
/// for every requested application in every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotSeries {
    pub health: String,
    pub ecu: String,
    pub modes: String,
}

impl PlotSeries {
    pub fn files(&self) -> [(&'static str, &str); 3] {
        [
            ("health.csv", &self.health),
            ("ecu.csv", &self.ecu),
            ("modes.csv", &self.modes),
        ]
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn emit_plot_series(logs: &[&MetricsLog]) -> PlotSeries {
    let mut health = format!("{HEALTH_SERIES_HEADER}\n");
    let mut ecu = format!("{ECU_SERIES_HEADER}\n");
    let mut modes = format!("{MODE_SERIES_HEADER}\n");
    for log in logs {
        let run = log.meta.policy.label();
        for t in &log.ticks {
            let samples: Vec<f64> = t.flows.iter().filter_map(|f| f.health_pct).collect();
            let q = quartiles(&samples);
            health += &format!(
                "{run},{},{},{},{},{},{},{}\n",
                t.tick,
                t.state,
                samples.len(),
                t.flows.len() - samples.len(),
                cell(q.map(|q| q.q1)),
                cell(q.map(|q| q.median)),
                cell(q.map(|q| q.q3)),
            );
            for e in &t.ecus {
                ecu += &format!(
                    "{run},{},{},{:.6},{:.6},{:.6}\n",
                    t.tick, e.ecu.0, e.cpu_demand_pct, e.cpu_used_pct, e.mem_used_mb
                );
            }
        }
        for s in &log.states {
            for app in &s.requested {
                modes += &format!(
                    "{run},{},{},{},{},{}\n",
                    s.index,
                    s.start_tick,
                    s.n_ticks,
                    app.0,
                    level_cell(s.assignment.level(*app))
                );
            }
        }
    }
    PlotSeries { health, ecu, modes }
}

fn level_cell(level: Option<u32>) -> String {
    level
        .map(|l| l.to_string())
        .unwrap_or_else(|| "off".to_string())
}

/// Levels chosen per state, for table output.
pub fn mode_choices(log: &MetricsLog) -> Vec<Vec<(AppId, Option<u32>)>> {
    log.states
        .iter()
        .map(|s| {
            s.requested
                .iter()
                .map(|a| (*a, s.assignment.level(*a)))
                .collect()
        })
        .collect()
}
