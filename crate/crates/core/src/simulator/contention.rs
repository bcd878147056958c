//! One tick of the contention model.
//!
//! Stage one throttles every sender by its ECU's CPU factor
//! `min(1, physical / demand)`. Stage two shares each directed link among the
//! flows crossing it. Memory is reported but never throttles.

use serde::{Deserialize, Serialize};

use crate::model::{AppId, Assignment, EcuId, FlowId, Instance, ModeRef};

/// How an oversubscribed link divides its capacity among offered rates.
pub trait LinkSharing: Send + Sync {
    fn name(&self) -> &str;

    /// Scaling factor applied to every flow on a link with `capacity` and
    /// total offered load `offered`.
    fn factor(&self, capacity: f64, offered: f64) -> f64;
}

/// Every flow on an oversubscribed link is scaled by `capacity / offered`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Proportional;

impl LinkSharing for Proportional {
    fn name(&self) -> &str {
        "proportional"
    }

    fn factor(&self, capacity: f64, offered: f64) -> f64 {
        if offered > capacity {
            capacity / offered
        } else {
            1.0
        }
    }
}

/// `min(1, physical / demand)`.
pub fn cpu_factor(physical_pct: f64, demand_pct: f64) -> f64 {
    if demand_pct > physical_pct {
        physical_pct / demand_pct
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowObservation {
    pub flow: FlowId,
    pub src_ecu: EcuId,
    pub dst_ecu: EcuId,
    pub target_mbps: f64,
    pub offered_mbps: f64,
    pub observed_mbps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcuUsage {
    pub ecu: EcuId,
    /// Background plus best-effort demand; may exceed the physical capacity.
    pub cpu_demand_pct: f64,
    /// Demand capped at the physical capacity.
    pub cpu_used_pct: f64,
    pub mem_used_mb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickOutcome {
    pub flows: Vec<FlowObservation>,
    pub ecus: Vec<EcuUsage>,
    /// Observed load per directed link, indexed by link id.
    pub link_load: Vec<f64>,
}

/// Flows emitted by `running`, restricted to those whose receiver is up.
pub fn live_flows<'a>(
    instance: &'a Instance,
    running: &'a Assignment,
) -> impl Iterator<Item = (&'a crate::model::Flow, ModeRef)> + 'a {
    running.active().flat_map(move |m| {
        instance.apps[m.app.index()]
            .flows_at(m.level)
            .filter(move |f| running.is_active(f.dst.app))
            .map(move |f| (f, m))
    })
}

pub fn step_tick(instance: &Instance, running: &Assignment) -> TickOutcome {
    step_tick_with(instance, running, &Proportional)
}

pub fn step_tick_with(
    instance: &Instance,
    running: &Assignment,
    sharing: &dyn LinkSharing,
) -> TickOutcome {
    let layout = instance.layout();
    let topo = &instance.topology;
    let host = |a: AppId| instance.apps[a.index()].host_ecu;

    let mut cpu_demand: Vec<f64> = topo
        .ecu_ids
        .iter()
        .map(|e| instance.max_capacity[layout.cpu(*e)] - instance.capacity[layout.cpu(*e)])
        .collect();
    let mut mem_used: Vec<f64> = topo
        .ecu_ids
        .iter()
        .map(|e| instance.max_capacity[layout.mem(*e)] - instance.capacity[layout.mem(*e)])
        .collect();
    for m in running.active() {
        let spec = &instance.apps[m.app.index()].modes[m.level as usize - 1];
        let e = host(m.app).index();
        cpu_demand[e] += spec.cpu_pct;
        mem_used[e] += spec.mem_mb;
    }
    let physical: Vec<f64> = topo
        .ecu_ids
        .iter()
        .map(|e| instance.max_capacity[layout.cpu(*e)])
        .collect();
    let factors: Vec<f64> = physical
        .iter()
        .zip(&cpu_demand)
        .map(|(p, d)| cpu_factor(*p, *d))
        .collect();

    let mut flows: Vec<FlowObservation> = live_flows(instance, running)
        .map(|(f, _)| {
            let src_ecu = host(f.src.app);
            FlowObservation {
                flow: f.id,
                src_ecu,
                dst_ecu: host(f.dst.app),
                target_mbps: f.target_mbps,
                offered_mbps: f.target_mbps * factors[src_ecu.index()],
                observed_mbps: 0.0,
            }
        })
        .collect();
    flows.sort_by_key(|f| f.flow);

    let n_links = topo.links.len();
    let mut offered = vec![0.0; n_links];
    for f in flows.iter().filter(|f| f.src_ecu != f.dst_ecu) {
        offered[topo.uplink(f.src_ecu).index()] += f.offered_mbps;
        offered[topo.downlink(f.dst_ecu).index()] += f.offered_mbps;
    }
    let link_factor: Vec<f64> = topo
        .links
        .iter()
        .map(|l| sharing.factor(instance.capacity[layout.bw(l.id)], offered[l.id.index()]))
        .collect();

    let mut link_load = vec![0.0; n_links];
    for f in &mut flows {
        if f.src_ecu == f.dst_ecu {
            f.observed_mbps = f.offered_mbps;
            continue;
        }
        let up = topo.uplink(f.src_ecu).index();
        let down = topo.downlink(f.dst_ecu).index();
        f.observed_mbps = f.offered_mbps * link_factor[up].min(link_factor[down]);
        link_load[up] += f.observed_mbps;
        link_load[down] += f.observed_mbps;
    }

    let ecus = topo
        .ecu_ids
        .iter()
        .map(|e| {
            let i = e.index();
            EcuUsage {
                ecu: *e,
                cpu_demand_pct: cpu_demand[i],
                cpu_used_pct: cpu_demand[i].min(physical[i]),
                mem_used_mb: mem_used[i],
            }
        })
        .collect();

    TickOutcome {
        flows,
        ecus,
        link_load,
    }
}
