//! Structural validation of an [`Instance`]. Violations are collected, not
//! raised, so a single pass reports everything that is wrong.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::algo::is_cyclic_directed;
use petgraph::graphmap::DiGraphMap;

use super::{accounting::mode_requirements, AppId, Direction, EcuId, Instance, ModeRef};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    LinkCount {
        ecus: usize,
        links: usize,
    },
    BadLink {
        index: usize,
    },
    NonPositiveLinkCapacity {
        index: usize,
    },
    CapacityLength {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    NegativeCapacity {
        index: usize,
    },
    CapacityAboveMax {
        index: usize,
    },
    AppIdMismatch {
        position: usize,
        id: AppId,
    },
    UnknownHostEcu {
        app: AppId,
        ecu: EcuId,
    },
    NoModes {
        app: AppId,
    },
    BadModeNumbering {
        app: AppId,
        position: usize,
    },
    NonPositiveAxil {
        mode: ModeRef,
    },
    AxilNotDecreasing {
        app: AppId,
        level: u32,
    },
    NegativeRequirement {
        mode: ModeRef,
    },
    RequirementsNotMonotone {
        app: AppId,
        level: u32,
    },
    UnknownDependency {
        mode: ModeRef,
        dep: ModeRef,
    },
    SelfDependency {
        mode: ModeRef,
    },
    BadFlow {
        mode: ModeRef,
        flow: u32,
    },
    DuplicateFlowId {
        flow: u32,
    },
    ModeGraphCycle,
    AppGraphCycle,
    CrossingModeEdges {
        depender: AppId,
        provider: AppId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            LinkCount { ecus, links } => {
                write!(
                    f,
                    "star topology with {ecus} ECUs needs {} links, found {links}",
                    2 * ecus
                )
            }
            BadLink { index } => write!(f, "link {index} does not match the star layout"),
            NonPositiveLinkCapacity { index } => {
                write!(f, "link {index} has non-positive capacity")
            }
            CapacityLength {
                field,
                got,
                expected,
            } => {
                write!(f, "{field} has {got} components, expected {expected}")
            }
            NegativeCapacity { index } => write!(f, "capacity component {index} is negative"),
            CapacityAboveMax { index } => {
                write!(f, "capacity component {index} exceeds its maximum")
            }
            AppIdMismatch { position, id } => {
                write!(f, "application at position {position} has id {id}")
            }
            UnknownHostEcu { app, ecu } => write!(f, "{app} is hosted on unknown {ecu}"),
            NoModes { app } => write!(f, "{app} declares no modes"),
            BadModeNumbering { app, position } => {
                write!(f, "{app} mode at position {position} is mislabelled")
            }
            NonPositiveAxil { mode } => write!(f, "{mode} has a non-positive AXIL score"),
            AxilNotDecreasing { app, level } => {
                write!(f, "{app} AXIL does not strictly decrease at level {level}")
            }
            NegativeRequirement { mode } => write!(f, "{mode} has a negative requirement"),
            RequirementsNotMonotone { app, level } => {
                write!(
                    f,
                    "{app} level {level} requires more than the level above it"
                )
            }
            UnknownDependency { mode, dep } => write!(f, "{mode} depends on unknown mode {dep}"),
            SelfDependency { mode } => write!(f, "{mode} depends on its own application"),
            BadFlow { mode, flow } => write!(f, "flow {flow} attached to {mode} is malformed"),
            DuplicateFlowId { flow } => write!(f, "flow id {flow} is used more than once"),
            ModeGraphCycle => write!(f, "mode dependency graph has a cycle"),
            AppGraphCycle => write!(f, "application dependency graph has a cycle"),
            CrossingModeEdges { depender, provider } => {
                write!(f, "crossing mode edges from {depender} to {provider}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    check_topology(instance, &mut out);
    check_capacity(instance, &mut out);
    let references_ok = check_apps(instance, &mut out);
    if references_ok {
        check_monotone_requirements(instance, &mut out);
        check_graphs(instance, &mut out);
    }
    ValidationReport { violations: out }
}

fn check_topology(instance: &Instance, out: &mut Vec<Violation>) {
    let topo = &instance.topology;
    let n = topo.ecu_ids.len();
    if topo.links.len() != 2 * n {
        out.push(Violation::LinkCount {
            ecus: n,
            links: topo.links.len(),
        });
    }
    for (i, link) in topo.links.iter().enumerate() {
        let expected_dir = if i % 2 == 0 {
            Direction::Uplink
        } else {
            Direction::Downlink
        };
        if link.id.index() != i
            || link.endpoint_ecu.index() != i / 2
            || link.direction != expected_dir
        {
            out.push(Violation::BadLink { index: i });
        }
        if !(link.be_capacity > 0.0) {
            out.push(Violation::NonPositiveLinkCapacity { index: i });
        }
    }
    for (i, e) in topo.ecu_ids.iter().enumerate() {
        if e.index() != i {
            out.push(Violation::BadLink { index: i });
        }
    }
}

fn check_capacity(instance: &Instance, out: &mut Vec<Violation>) {
    let expected = instance.layout().len();
    for (field, v) in [
        ("capacity", &instance.capacity),
        ("max_capacity", &instance.max_capacity),
    ] {
        if v.len() != expected {
            out.push(Violation::CapacityLength {
                field,
                got: v.len(),
                expected,
            });
        }
    }
    if instance.capacity.len() != expected || instance.max_capacity.len() != expected {
        return;
    }
    for i in 0..expected {
        if !(instance.capacity[i] >= 0.0) || !(instance.max_capacity[i] >= 0.0) {
            out.push(Violation::NegativeCapacity { index: i });
        } else if instance.capacity[i] > instance.max_capacity[i] {
            out.push(Violation::CapacityAboveMax { index: i });
        }
    }
}

/// Returns false when references are broken badly enough that graph checks
/// would be meaningless.
fn check_apps(instance: &Instance, out: &mut Vec<Violation>) -> bool {
    let before = out.len();
    let n_ecus = instance.topology.n_ecus();
    let mut flow_ids = BTreeMap::new();
    for (pos, app) in instance.apps.iter().enumerate() {
        if app.id.index() != pos {
            out.push(Violation::AppIdMismatch {
                position: pos,
                id: app.id,
            });
        }
        if app.host_ecu.index() >= n_ecus {
            out.push(Violation::UnknownHostEcu {
                app: app.id,
                ecu: app.host_ecu,
            });
        }
        if app.modes.is_empty() {
            out.push(Violation::NoModes { app: app.id });
        }
        for (i, m) in app.modes.iter().enumerate() {
            let here = ModeRef::new(app.id, i as u32 + 1);
            if m.app != app.id || m.level != i as u32 + 1 {
                out.push(Violation::BadModeNumbering {
                    app: app.id,
                    position: i,
                });
            }
            if !(m.axil > 0.0) || !m.axil.is_finite() {
                out.push(Violation::NonPositiveAxil { mode: here });
            }
            if !(m.cpu_pct >= 0.0) || !(m.mem_mb >= 0.0) {
                out.push(Violation::NegativeRequirement { mode: here });
            }
            if i > 0 && !(app.modes[i - 1].axil > m.axil) {
                out.push(Violation::AxilNotDecreasing {
                    app: app.id,
                    level: here.level,
                });
            }
            for dep in &m.deps {
                if dep.app == app.id {
                    out.push(Violation::SelfDependency { mode: here });
                } else if instance.mode(*dep).is_err() {
                    out.push(Violation::UnknownDependency {
                        mode: here,
                        dep: *dep,
                    });
                }
            }
            for flow in &m.flows {
                if flow_ids.insert(flow.id, ()).is_some() {
                    out.push(Violation::DuplicateFlowId { flow: flow.id.0 });
                }
                let ok = flow.src == here
                    && flow.src.app != flow.dst.app
                    && instance.mode(flow.dst).is_ok()
                    && flow.target_mbps > 0.0
                    && flow.target_mbps.is_finite();
                if !ok {
                    out.push(Violation::BadFlow {
                        mode: here,
                        flow: flow.id.0,
                    });
                }
            }
        }
    }
    !out[before..].iter().any(|v| {
        matches!(
            v,
            Violation::AppIdMismatch { .. }
                | Violation::UnknownHostEcu { .. }
                | Violation::NoModes { .. }
                | Violation::BadModeNumbering { .. }
                | Violation::UnknownDependency { .. }
                | Violation::BadFlow { .. }
        )
    })
}

fn check_monotone_requirements(instance: &Instance, out: &mut Vec<Violation>) {
    for app in &instance.apps {
        let reqs: Vec<_> = (1..=app.n_modes())
            .filter_map(|l| mode_requirements(instance, app.id, l).ok())
            .collect();
        for (i, pair) in reqs.windows(2).enumerate() {
            if !pair[1].fits_within(&pair[0], 0.0) {
                out.push(Violation::RequirementsNotMonotone {
                    app: app.id,
                    level: i as u32 + 2,
                });
            }
        }
    }
}

fn check_graphs(instance: &Instance, out: &mut Vec<Violation>) {
    let mut modes: DiGraphMap<(u32, u32), ()> = DiGraphMap::new();
    let mut apps: DiGraphMap<u32, ()> = DiGraphMap::new();
    let mut pair_edges: BTreeMap<(AppId, AppId), Vec<(u32, u32)>> = BTreeMap::new();

    for app in &instance.apps {
        apps.add_node(app.id.0);
        for m in &app.modes {
            modes.add_node((app.id.0, m.level));
            for dep in &m.deps {
                modes.add_edge((app.id.0, m.level), (dep.app.0, dep.level), ());
                apps.add_edge(app.id.0, dep.app.0, ());
                pair_edges
                    .entry((app.id, dep.app))
                    .or_default()
                    .push((m.level, dep.level));
            }
        }
    }

    if is_cyclic_directed(&modes) {
        out.push(Violation::ModeGraphCycle);
    }
    if is_cyclic_directed(&apps) {
        out.push(Violation::AppGraphCycle);
    }
    for ((depender, provider), mut edges) in pair_edges {
        edges.sort();
        // Sorted by depender level; provider levels must then never decrease.
        if edges.windows(2).any(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1) {
            out.push(Violation::CrossingModeEdges { depender, provider });
        }
    }
}
