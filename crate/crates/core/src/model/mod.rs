//! Problem-domain types shared by the generator, solvers and simulator.
//!
//! An [`Instance`] is a star topology of ECUs, a set of best-effort
//! applications with ordered runtime modes, the mode-level dependency edges
//! and the flows those dependencies generate. Everything is immutable once
//! built; the accounting functions in [`accounting`] are pure.

pub mod accounting;
pub mod validate;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accounting::{
    assignment_usage, dependencies_satisfied, mode_requirements, DependencyReport,
    DependencyViolation, RequirementTable,
};
pub use validate::{validate_instance, ValidationReport, Violation};

/// Absolute slack used when comparing usage against capacity.
pub const CAPACITY_TOLERANCE: f64 = 1e-9;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(
    /// Application identifier; equal to the application's position in [`Instance::apps`].
    AppId,
    "app"
);
id_newtype!(
    /// ECU identifier; equal to the ECU's position in [`Topology::ecu_ids`].
    EcuId,
    "ecu"
);
id_newtype!(FlowId, "flow");
id_newtype!(LinkId, "link");

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown application {0}")]
    UnknownApp(AppId),
    #[error("{app} has no mode at level {level}")]
    UnknownLevel { app: AppId, level: u32 },
    #[error("assignment covers {got} applications, instance has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("resource vector has length {got}, expected {expected}")]
    ResourceLength { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// ECU to switch.
    Uplink,
    /// Switch to ECU.
    Downlink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectedLink {
    pub id: LinkId,
    pub endpoint_ecu: EcuId,
    pub direction: Direction,
    /// Best-effort bandwidth in Mbps.
    pub be_capacity: f64,
}

/// ECUs attached to a single switch. Link `2e` is the uplink of ECU `e`
/// and link `2e + 1` its downlink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub ecu_ids: Vec<EcuId>,
    pub links: Vec<DirectedLink>,
}

impl Topology {
    pub fn star(n_ecus: usize, link_mbps: f64) -> Self {
        let ecu_ids: Vec<EcuId> = (0..n_ecus as u32).map(EcuId).collect();
        let links = ecu_ids
            .iter()
            .flat_map(|&ecu| {
                [Direction::Uplink, Direction::Downlink]
                    .into_iter()
                    .enumerate()
                    .map(move |(k, direction)| DirectedLink {
                        id: LinkId(ecu.0 * 2 + k as u32),
                        endpoint_ecu: ecu,
                        direction,
                        be_capacity: link_mbps,
                    })
            })
            .collect();
        Topology { ecu_ids, links }
    }

    pub fn n_ecus(&self) -> usize {
        self.ecu_ids.len()
    }

    pub fn uplink(&self, ecu: EcuId) -> LinkId {
        LinkId(ecu.0 * 2)
    }

    pub fn downlink(&self, ecu: EcuId) -> LinkId {
        LinkId(ecu.0 * 2 + 1)
    }

    pub fn layout(&self) -> ResourceLayout {
        ResourceLayout {
            n_ecus: self.ecu_ids.len(),
            n_links: self.links.len(),
        }
    }
}

/// Index space of a [`ResourceVector`]: CPU of every ECU, then memory of
/// every ECU, then bandwidth of every directed link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourceLayout {
    pub n_ecus: usize,
    pub n_links: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceKind {
    Cpu(EcuId),
    Mem(EcuId),
    Bandwidth(LinkId),
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceKind::Cpu(e) => write!(f, "cpu({e})"),
            ResourceKind::Mem(e) => write!(f, "mem({e})"),
            ResourceKind::Bandwidth(l) => write!(f, "bw({l})"),
        }
    }
}

impl ResourceLayout {
    pub fn len(&self) -> usize {
        2 * self.n_ecus + self.n_links
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cpu(&self, ecu: EcuId) -> usize {
        ecu.index()
    }

    pub fn mem(&self, ecu: EcuId) -> usize {
        self.n_ecus + ecu.index()
    }

    pub fn bw(&self, link: LinkId) -> usize {
        2 * self.n_ecus + link.index()
    }

    pub fn kind(&self, index: usize) -> ResourceKind {
        if index < self.n_ecus {
            ResourceKind::Cpu(EcuId(index as u32))
        } else if index < 2 * self.n_ecus {
            ResourceKind::Mem(EcuId((index - self.n_ecus) as u32))
        } else {
            ResourceKind::Bandwidth(LinkId((index - 2 * self.n_ecus) as u32))
        }
    }
}

/// Dense vector over the resource index space of one instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(pub Vec<f64>);

impl ResourceVector {
    pub fn zeros(len: usize) -> Self {
        ResourceVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `self <= other + tol` component-wise.
    pub fn fits_within(&self, other: &ResourceVector, tol: f64) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a <= b + tol)
    }

    /// Components where `self` exceeds `other` by more than `tol`.
    pub fn excess_over(&self, other: &ResourceVector, tol: f64) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| **a > **b + tol)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> ResourceVector {
        ResourceVector(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

impl Index<usize> for ResourceVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ResourceVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl AddAssign<&ResourceVector> for ResourceVector {
    fn add_assign(&mut self, rhs: &ResourceVector) {
        debug_assert_eq!(self.len(), rhs.len());
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add<&ResourceVector> for &ResourceVector {
    type Output = ResourceVector;
    fn add(self, rhs: &ResourceVector) -> ResourceVector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&ResourceVector> for &ResourceVector {
    type Output = ResourceVector;
    fn sub(self, rhs: &ResourceVector) -> ResourceVector {
        debug_assert_eq!(self.len(), rhs.len());
        ResourceVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// A specific runtime mode of a specific application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeRef {
    pub app: AppId,
    pub level: u32,
}

impl ModeRef {
    pub fn new(app: AppId, level: u32) -> Self {
        ModeRef { app, level }
    }
}

impl fmt::Display for ModeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.app, self.level)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: FlowId,
    pub src: ModeRef,
    pub dst: ModeRef,
    pub target_mbps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub app: AppId,
    /// 1 is nominal, `m_i` the most degraded.
    pub level: u32,
    pub axil: f64,
    pub cpu_pct: f64,
    pub mem_mb: f64,
    #[serde(default)]
    pub deps: Vec<ModeRef>,
    /// Flows attached to this level. A mode at level `j` emits the flows of
    /// levels `j..=m_i`.
    #[serde(default)]
    pub flows: Vec<Flow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub id: AppId,
    pub host_ecu: EcuId,
    pub modes: Vec<ModeSpec>,
}

impl Application {
    pub fn n_modes(&self) -> u32 {
        self.modes.len() as u32
    }

    pub fn mode(&self, level: u32) -> Option<&ModeSpec> {
        level
            .checked_sub(1)
            .and_then(|i| self.modes.get(i as usize))
    }

    /// Flows emitted while running at `level`.
    pub fn flows_at(&self, level: u32) -> impl Iterator<Item = &Flow> {
        let start = level.saturating_sub(1) as usize;
        self.modes[start.min(self.modes.len())..]
            .iter()
            .flat_map(|m| m.flows.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub topology: Topology,
    pub apps: Vec<Application>,
    /// Capacity currently available to best-effort applications.
    pub capacity: ResourceVector,
    pub max_capacity: ResourceVector,
}

impl Instance {
    pub fn layout(&self) -> ResourceLayout {
        self.topology.layout()
    }

    pub fn n_apps(&self) -> usize {
        self.apps.len()
    }

    pub fn app(&self, id: AppId) -> Result<&Application, ModelError> {
        self.apps.get(id.index()).ok_or(ModelError::UnknownApp(id))
    }

    pub fn mode(&self, r: ModeRef) -> Result<&ModeSpec, ModelError> {
        self.app(r.app)?
            .mode(r.level)
            .ok_or(ModelError::UnknownLevel {
                app: r.app,
                level: r.level,
            })
    }

    pub fn app_ids(&self) -> impl Iterator<Item = AppId> + '_ {
        self.apps.iter().map(|a| a.id)
    }

    /// Application-level dependency edges `(depender, provider)`, sorted and deduplicated.
    pub fn app_edges(&self) -> Vec<(AppId, AppId)> {
        let mut edges: Vec<(AppId, AppId)> = self
            .apps
            .iter()
            .flat_map(|a| {
                a.modes
                    .iter()
                    .flat_map(move |m| m.deps.iter().map(move |d| (a.id, d.app)))
            })
            .collect();
        edges.sort();
        edges.dedup();
        edges
    }

    /// Every flow in the instance, ordered by id.
    pub fn flows(&self) -> Vec<&Flow> {
        let mut flows: Vec<&Flow> = self
            .apps
            .iter()
            .flat_map(|a| a.modes.iter().flat_map(|m| m.flows.iter()))
            .collect();
        flows.sort_by_key(|f| f.id);
        flows
    }

    /// Copy of this instance with a different best-effort capacity.
    pub fn with_capacity(&self, capacity: ResourceVector) -> Result<Instance, ModelError> {
        if capacity.len() != self.layout().len() {
            return Err(ModelError::ResourceLength {
                expected: self.layout().len(),
                got: capacity.len(),
            });
        }
        Ok(Instance {
            capacity,
            ..self.clone()
        })
    }
}

/// Per-application activation: `None` is Off, `Some(j)` runs level `j`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<Option<u32>>);

impl Assignment {
    pub fn all_off(n_apps: usize) -> Self {
        Assignment(vec![None; n_apps])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn level(&self, app: AppId) -> Option<u32> {
        self.0.get(app.index()).copied().flatten()
    }

    pub fn set(&mut self, app: AppId, level: Option<u32>) {
        self.0[app.index()] = level;
    }

    pub fn is_active(&self, app: AppId) -> bool {
        self.level(app).is_some()
    }

    pub fn active(&self) -> impl Iterator<Item = ModeRef> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|level| ModeRef::new(AppId(i as u32), level)))
    }

    pub fn n_active(&self) -> usize {
        self.0.iter().filter(|l| l.is_some()).count()
    }

    pub fn check_against(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.0.len() != instance.n_apps() {
            return Err(ModelError::AssignmentLength {
                expected: instance.n_apps(),
                got: self.0.len(),
            });
        }
        for m in self.active() {
            instance.mode(m)?;
        }
        Ok(())
    }

    /// Sum of the AXIL scores of the active modes, accumulated in app order.
    pub fn total_axil(&self, instance: &Instance) -> f64 {
        self.active()
            .filter_map(|m| instance.mode(m).ok())
            .map(|m| m.axil)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_has_two_links_per_ecu() {
        for n in 1..8 {
            let t = Topology::star(n, 10.0);
            assert_eq!(t.links.len(), 2 * n);
            for e in &t.ecu_ids {
                let up = &t.links[t.uplink(*e).index()];
                let down = &t.links[t.downlink(*e).index()];
                assert_eq!(up.endpoint_ecu, *e);
                assert_eq!(up.direction, Direction::Uplink);
                assert_eq!(down.endpoint_ecu, *e);
                assert_eq!(down.direction, Direction::Downlink);
            }
        }
    }

    #[test]
    fn layout_indices_are_disjoint() {
        let layout = Topology::star(4, 10.0).layout();
        assert_eq!(layout.len(), 16);
        let mut seen = std::collections::HashSet::new();
        for e in 0..4 {
            assert!(seen.insert(layout.cpu(EcuId(e))));
            assert!(seen.insert(layout.mem(EcuId(e))));
        }
        for l in 0..8 {
            assert!(seen.insert(layout.bw(LinkId(l))));
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(
            layout.kind(layout.mem(EcuId(2))),
            ResourceKind::Mem(EcuId(2))
        );
        assert_eq!(
            layout.kind(layout.bw(LinkId(5))),
            ResourceKind::Bandwidth(LinkId(5))
        );
    }

    #[test]
    fn fits_within_respects_tolerance() {
        let a = ResourceVector(vec![1.0, 2.0 + 5e-10]);
        let b = ResourceVector(vec![1.0, 2.0]);
        assert!(a.fits_within(&b, CAPACITY_TOLERANCE));
        assert!(!a.fits_within(&b, 0.0));
        assert_eq!(a.excess_over(&b, 0.0), vec![1]);
    }
}
