//! Seeded random instances and scenarios.
//!
//! All randomness comes from a [`ChaCha8Rng`] seeded from [`GenParams::seed`],
//! so the same parameters always produce the same instance on every platform.

mod graph;
mod scenario;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AppId, Application, EcuId, Flow, FlowId, Instance, ModeRef, ModeSpec, ResourceVector, Topology,
};

pub use graph::{gen_app_graph, gen_flows, gen_mode_edges, target_edge_count};
pub use scenario::{app_closure, gen_scenario, gen_scenario_with, Scenario, ScenarioState};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generation parameter: {0}")]
    InvalidParams(String),
    #[error("could not reach {target} acyclic edges after {attempts} attempts (got {reached})")]
    DensityUnreachable {
        target: usize,
        reached: usize,
        attempts: usize,
    },
    #[error("unknown size preset '{0}' (expected XS, S, M, L or XL)")]
    UnknownPreset(String),
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_apps: usize,
    pub m_max: u32,
    /// Fraction of unordered application pairs joined by a dependency.
    pub density: f64,
    pub cpu_pct: Range,
    pub mem_mb: Range,
    pub flows_per_dep_edge: (u32, u32),
    pub flow_mbps: Range,
    pub n_ecus: usize,
    pub link_mbps: f64,
    pub ecu_cpu_pct: f64,
    pub ecu_mem_mb: f64,
    /// CPU held back on every ECU for safety-critical work; removed from the
    /// best-effort capacity but still present on the hardware.
    pub sc_cpu_reserved_pct: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n_apps: usize, m_max: u32, density: f64, seed: u64) -> Self {
        GenParams {
            n_apps,
            m_max,
            density,
            cpu_pct: Range::new(0.0, 10.0),
            mem_mb: Range::new(0.0, 200.0),
            flows_per_dep_edge: (1, 5),
            flow_mbps: Range::new(0.1, 2.0),
            n_ecus: 4,
            link_mbps: 10.0,
            ecu_cpu_pct: 100.0,
            ecu_mem_mb: 8000.0,
            sc_cpu_reserved_pct: 0.0,
            seed,
        }
    }

    pub fn from_preset(preset: SizePreset, seed: u64) -> Self {
        let (apps, modes, density) = preset.shape();
        GenParams::new(apps, modes, density, seed)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidParams(msg));
        if self.n_apps == 0 {
            return bad("at least one application is required".into());
        }
        if self.m_max == 0 {
            return bad("m_max must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad(format!("density {} outside [0, 1]", self.density));
        }
        for (name, r) in [("cpu_pct", self.cpu_pct), ("mem_mb", self.mem_mb)] {
            if !(r.lo >= 0.0 && r.lo <= r.hi && r.hi.is_finite()) {
                return bad(format!("{name} range [{}, {}] is invalid", r.lo, r.hi));
            }
        }
        let r = self.flow_mbps;
        if !(r.lo > 0.0 && r.lo <= r.hi && r.hi.is_finite()) {
            return bad(format!("flow_mbps range [{}, {}] is invalid", r.lo, r.hi));
        }
        let (lo, hi) = self.flows_per_dep_edge;
        if lo == 0 || lo > hi {
            return bad(format!("flows_per_dep_edge range [{lo}, {hi}] is invalid"));
        }
        if self.n_ecus == 0 {
            return bad("at least one ECU is required".into());
        }
        if !(self.link_mbps > 0.0 && self.link_mbps.is_finite()) {
            return bad(format!("link_mbps {} must be positive", self.link_mbps));
        }
        if !(self.ecu_cpu_pct > 0.0) || !(self.ecu_mem_mb > 0.0) {
            return bad("ECU capacities must be positive".into());
        }
        if !(0.0..self.ecu_cpu_pct).contains(&self.sc_cpu_reserved_pct) {
            return bad(format!(
                "sc_cpu_reserved_pct {} outside [0, {})",
                self.sc_cpu_reserved_pct, self.ecu_cpu_pct
            ));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Problem sizes used for the solve-time scaling runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SizePreset {
    XS,
    S,
    M,
    L,
    XL,
}

impl SizePreset {
    pub const ALL: [SizePreset; 5] = [Self::XS, Self::S, Self::M, Self::L, Self::XL];

    /// `(applications, max modes, dependency density)`.
    pub fn shape(self) -> (usize, u32, f64) {
        match self {
            SizePreset::XS => (10, 1, 0.05),
            SizePreset::S => (20, 3, 0.05),
            SizePreset::M => (30, 4, 0.10),
            SizePreset::L => (50, 5, 0.15),
            SizePreset::XL => (100, 5, 0.20),
        }
    }
}

impl fmt::Display for SizePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SizePreset::XS => "XS",
            SizePreset::S => "S",
            SizePreset::M => "M",
            SizePreset::L => "L",
            SizePreset::XL => "XL",
        };
        f.write_str(s)
    }
}

impl FromStr for SizePreset {
    type Err = GenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "XS" => Ok(SizePreset::XS),
            "S" => Ok(SizePreset::S),
            "M" => Ok(SizePreset::M),
            "L" => Ok(SizePreset::L),
            "XL" => Ok(SizePreset::XL),
            _ => Err(GenError::UnknownPreset(s.to_string())),
        }
    }
}

/// Builds a random instance. Draw order: mode counts, application graph,
/// mode edges, flows, CPU/memory, AXIL scores, host ECUs.
pub fn gen_instance(p: &GenParams) -> Result<Instance, GenError> {
    p.validate()?;
    let mut rng = p.rng();
    let n = p.n_apps;

    let mode_counts: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=p.m_max)).collect();
    let app_edges = gen_app_graph(n, p.density, &mut rng)?;
    let mode_edges = gen_mode_edges(&app_edges, &mode_counts, &mut rng);
    let flows = gen_flows(&mode_edges, p.flows_per_dep_edge, p.flow_mbps, &mut rng);

    let requirements: Vec<Vec<(f64, f64)>> = mode_counts
        .iter()
        .map(|&m| {
            let mut draws: Vec<(f64, f64)> = (0..m)
                .map(|_| (p.cpu_pct.sample(&mut rng), p.mem_mb.sample(&mut rng)))
                .collect();
            // Cumulative max from the most degraded level up to nominal.
            for j in (0..draws.len().saturating_sub(1)).rev() {
                draws[j].0 = draws[j].0.max(draws[j + 1].0);
                draws[j].1 = draws[j].1.max(draws[j + 1].1);
            }
            draws
        })
        .collect();

    let axils: Vec<Vec<f64>> = mode_counts
        .iter()
        .map(|&m| decreasing_axil(m as usize, &mut rng))
        .collect();

    let hosts: Vec<EcuId> = (0..n)
        .map(|_| EcuId(rng.gen_range(0..p.n_ecus as u32)))
        .collect();

    let mut apps: Vec<Application> = (0..n)
        .map(|i| Application {
            id: AppId(i as u32),
            host_ecu: hosts[i],
            modes: (0..mode_counts[i] as usize)
                .map(|j| ModeSpec {
                    app: AppId(i as u32),
                    level: j as u32 + 1,
                    axil: axils[i][j],
                    cpu_pct: requirements[i][j].0,
                    mem_mb: requirements[i][j].1,
                    deps: Vec::new(),
                    flows: Vec::new(),
                })
                .collect(),
        })
        .collect();

    for (from, to) in &mode_edges {
        apps[from.app.index()].modes[from.level as usize - 1]
            .deps
            .push(*to);
    }
    for flow in flows {
        apps[flow.src.app.index()].modes[flow.src.level as usize - 1]
            .flows
            .push(flow);
    }

    let topology = Topology::star(p.n_ecus, p.link_mbps);
    let layout = topology.layout();
    let mut capacity = ResourceVector::zeros(layout.len());
    let mut max_capacity = ResourceVector::zeros(layout.len());
    for e in &topology.ecu_ids {
        max_capacity[layout.cpu(*e)] = p.ecu_cpu_pct;
        capacity[layout.cpu(*e)] = p.ecu_cpu_pct - p.sc_cpu_reserved_pct;
        max_capacity[layout.mem(*e)] = p.ecu_mem_mb;
        capacity[layout.mem(*e)] = p.ecu_mem_mb;
    }
    for l in &topology.links {
        max_capacity[layout.bw(l.id)] = l.be_capacity;
        capacity[layout.bw(l.id)] = l.be_capacity;
    }

    Ok(Instance {
        topology,
        apps,
        capacity,
        max_capacity,
    })
}

/// `m` scores in (0, 1], strictly decreasing. Ties are re-drawn.
fn decreasing_axil<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        // 1 - [0, 1) lies in (0, 1].
        let mut draws: Vec<f64> = (0..m).map(|_| 1.0 - rng.gen::<f64>()).collect();
        draws.sort_by(|a, b| b.total_cmp(a));
        if draws.windows(2).all(|w| w[0] > w[1]) {
            return draws;
        }
    }
}

pub(crate) fn next_flow_id(counter: &mut u32) -> FlowId {
    let id = FlowId(*counter);
    *counter += 1;
    id
}

pub(crate) fn flow(id: FlowId, src: ModeRef, dst: ModeRef, target_mbps: f64) -> Flow {
    Flow {
        id,
        src,
        dst,
        target_mbps,
    }
}
