//! Resource accounting and dependency checks over an [`Instance`].

use super::{AppId, Assignment, Instance, ModeRef, ModelError, ResourceVector};

/// Full requirement vector of `app` running at `level`.
///
/// CPU and memory are charged to the host ECU. Every cross-ECU flow emitted
/// at this level costs its rate on the source uplink and the destination
/// downlink; flows between co-located applications never reach the switch.
pub fn mode_requirements(
    instance: &Instance,
    app: AppId,
    level: u32,
) -> Result<ResourceVector, ModelError> {
    let spec = instance.mode(ModeRef::new(app, level))?;
    let application = instance.app(app)?;
    let layout = instance.layout();
    let topo = &instance.topology;

    let mut req = ResourceVector::zeros(layout.len());
    req[layout.cpu(application.host_ecu)] = spec.cpu_pct;
    req[layout.mem(application.host_ecu)] = spec.mem_mb;
    for flow in application.flows_at(level) {
        let src = instance.app(flow.src.app)?.host_ecu;
        let dst = instance.app(flow.dst.app)?.host_ecu;
        if src != dst {
            req[layout.bw(topo.uplink(src))] += flow.target_mbps;
            req[layout.bw(topo.downlink(dst))] += flow.target_mbps;
        }
    }
    Ok(req)
}

/// Component-wise sum of the requirement vectors of the active modes.
pub fn assignment_usage(instance: &Instance, a: &Assignment) -> Result<ResourceVector, ModelError> {
    a.check_against(instance)?;
    let mut usage = ResourceVector::zeros(instance.layout().len());
    for m in a.active() {
        usage += &mode_requirements(instance, m.app, m.level)?;
    }
    Ok(usage)
}

/// Precomputed requirement vectors for every mode of an instance.
#[derive(Clone, Debug)]
pub struct RequirementTable {
    per_app: Vec<Vec<ResourceVector>>,
    len: usize,
}

impl RequirementTable {
    pub fn build(instance: &Instance) -> Result<Self, ModelError> {
        let per_app = instance
            .apps
            .iter()
            .map(|app| {
                (1..=app.n_modes())
                    .map(|level| mode_requirements(instance, app.id, level))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RequirementTable {
            per_app,
            len: instance.layout().len(),
        })
    }

    pub fn get(&self, app: AppId, level: u32) -> &ResourceVector {
        &self.per_app[app.index()][level as usize - 1]
    }

    pub fn resource_len(&self) -> usize {
        self.len
    }

    pub fn usage(&self, a: &Assignment) -> ResourceVector {
        let mut usage = ResourceVector::zeros(self.len);
        for m in a.active() {
            usage += self.get(m.app, m.level);
        }
        usage
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyViolation {
    /// The active mode whose dependency is unmet.
    pub mode: ModeRef,
    pub required: ModeRef,
    /// Level the provider actually runs at, `None` if it is off.
    pub actual: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyReport {
    pub violations: Vec<DependencyViolation>,
}

impl DependencyReport {
    pub fn is_satisfied(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A dependency on `(k, l)` is met when `k` runs at level `l` or better.
/// Only the dependency list of each app's active mode is binding.
pub fn dependencies_satisfied(instance: &Instance, a: &Assignment) -> DependencyReport {
    let mut violations = Vec::new();
    for m in a.active() {
        let Ok(spec) = instance.mode(m) else {
            continue;
        };
        for dep in &spec.deps {
            let actual = a.level(dep.app);
            if !actual.is_some_and(|l| l <= dep.level) {
                violations.push(DependencyViolation {
                    mode: m,
                    required: *dep,
                    actual,
                });
            }
        }
    }
    DependencyReport { violations }
}
