//! Greedy AXIL-efficiency ladder.
//!
//! Starts with every application off. Each round, every requested (or
//! already pulled-in) application proposes its next rung
//! `Off -> m_i -> m_i - 1 -> ... -> 1`, expanded to the upgrades its
//! dependencies need. The feasible proposal with the best
//! `delta_axil / cost` is applied; the loop ends when nothing fits.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cost::{CostModel, RemainingSum};
use super::{check_request, ModeSelector, Solution, SolveError};
use crate::model::{
    AppId, Assignment, Instance, ModeRef, RequirementTable, ResourceVector, CAPACITY_TOLERANCE,
};

/// How a candidate treats unmet dependencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidatePolicy {
    /// Pull the missing providers in and cost the whole bundle.
    Closure,
    /// Only propose rungs whose dependencies are already met.
    Eligibility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelChange {
    pub app: AppId,
    pub from: Option<u32>,
    pub to: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub app: AppId,
    pub target_level: u32,
    /// Every level change the candidate implies, including its own, by app id.
    pub closure: Vec<LevelChange>,
    pub delta_axil: f64,
    pub delta_usage: ResourceVector,
    pub cost: f64,
    /// `delta_axil / cost`; infinite when the cost is zero.
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpgradeStep {
    pub iteration: usize,
    pub app: AppId,
    pub from: Option<u32>,
    pub to: u32,
    pub closure: Vec<LevelChange>,
    pub delta_axil: f64,
    pub cost: f64,
    /// `None` when the upgrade was free.
    pub efficiency: Option<f64>,
    pub total_axil: f64,
}

pub struct GreedySolver {
    name: String,
    policy: CandidatePolicy,
    cost: Box<dyn CostModel>,
}

impl Default for GreedySolver {
    fn default() -> Self {
        GreedySolver::new("greedy", CandidatePolicy::Closure, Box::new(RemainingSum))
    }
}

impl GreedySolver {
    pub fn new(name: &str, policy: CandidatePolicy, cost: Box<dyn CostModel>) -> Self {
        GreedySolver {
            name: name.to_string(),
            policy,
            cost,
        }
    }

    pub fn policy(&self) -> CandidatePolicy {
        self.policy
    }

    /// Level changes needed to run `app` at `level`, or `None` when the
    /// eligibility policy forbids it.
    fn expand(
        &self,
        instance: &Instance,
        levels: &Assignment,
        app: AppId,
        level: u32,
    ) -> Option<BTreeMap<AppId, u32>> {
        let mut changes = BTreeMap::from([(app, level)]);
        let mut work = vec![ModeRef::new(app, level)];
        while let Some(m) = work.pop() {
            let spec = instance.mode(m).ok()?;
            for dep in &spec.deps {
                let current = changes.get(&dep.app).copied().or(levels.level(dep.app));
                if current.is_some_and(|l| l <= dep.level) {
                    continue;
                }
                if self.policy == CandidatePolicy::Eligibility {
                    return None;
                }
                changes.insert(dep.app, dep.level);
                work.push(*dep);
            }
        }
        Some(changes)
    }

    #[allow(clippy::too_many_arguments)]
    fn candidate(
        &self,
        instance: &Instance,
        table: &RequirementTable,
        levels: &Assignment,
        usage: &ResourceVector,
        capacity: &ResourceVector,
        app: AppId,
        target: u32,
    ) -> Option<Candidate> {
        let changes = self.expand(instance, levels, app, target)?;
        let mut delta_axil = 0.0;
        let mut delta_usage = ResourceVector::zeros(table.resource_len());
        let mut closure = Vec::with_capacity(changes.len());
        for (&a, &to) in &changes {
            let from = levels.level(a);
            delta_axil += instance.mode(ModeRef::new(a, to)).ok()?.axil;
            delta_usage += table.get(a, to);
            if let Some(f) = from {
                delta_axil -= instance.mode(ModeRef::new(a, f)).ok()?.axil;
                delta_usage = &delta_usage - table.get(a, f);
            }
            closure.push(LevelChange { app: a, from, to });
        }
        if !(usage + &delta_usage).fits_within(capacity, CAPACITY_TOLERANCE) {
            return None;
        }
        let remaining = capacity - usage;
        let cost = self
            .cost
            .cost(&delta_usage, &remaining, &instance.max_capacity);
        let efficiency = if cost == 0.0 {
            f64::INFINITY
        } else {
            delta_axil / cost
        };
        Some(Candidate {
            app,
            target_level: target,
            closure,
            delta_axil,
            delta_usage,
            cost,
            efficiency,
        })
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
}

/// Higher efficiency, then higher AXIL gain, then lower app id, then lower level.
fn beats(a: &Candidate, b: &Candidate) -> bool {
    if !close(a.efficiency, b.efficiency) {
        return a.efficiency > b.efficiency;
    }
    if !close(a.delta_axil, b.delta_axil) {
        return a.delta_axil > b.delta_axil;
    }
    (a.app, a.target_level) < (b.app, b.target_level)
}

impl ModeSelector for GreedySolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> &str {
        match self.policy {
            CandidatePolicy::Closure => "greedy AXIL/cost ladder with dependency closure",
            CandidatePolicy::Eligibility => {
                "greedy AXIL/cost ladder, dependencies must already hold"
            }
        }
    }

    fn select(
        &self,
        instance: &Instance,
        requested: &[AppId],
        capacity: &ResourceVector,
    ) -> Result<Solution, SolveError> {
        let started = Instant::now();
        let requested = check_request(instance, requested, capacity)?;
        let table = RequirementTable::build(instance)?;
        let n = instance.n_apps();

        let mut levels = Assignment::all_off(n);
        let mut usage = ResourceVector::zeros(table.resource_len());
        let mut pool = vec![false; n];
        for a in &requested {
            pool[a.index()] = true;
        }
        let mut trace: Vec<UpgradeStep> = Vec::new();
        let mut total_axil = 0.0;

        loop {
            let mut best: Option<Candidate> = None;
            for (i, app) in instance.apps.iter().enumerate() {
                if !pool[i] {
                    continue;
                }
                let target = match levels.level(app.id) {
                    None => app.n_modes(),
                    Some(1) => continue,
                    Some(j) => j - 1,
                };
                let Some(c) =
                    self.candidate(instance, &table, &levels, &usage, capacity, app.id, target)
                else {
                    continue;
                };
                if best.as_ref().is_none_or(|b| beats(&c, b)) {
                    best = Some(c);
                }
            }
            let Some(chosen) = best else {
                break;
            };
            for change in &chosen.closure {
                levels.set(change.app, Some(change.to));
                pool[change.app.index()] = true;
            }
            usage += &chosen.delta_usage;
            total_axil += chosen.delta_axil;
            trace.push(UpgradeStep {
                iteration: trace.len() + 1,
                app: chosen.app,
                from: chosen
                    .closure
                    .iter()
                    .find(|c| c.app == chosen.app)
                    .and_then(|c| c.from),
                to: chosen.target_level,
                closure: chosen.closure,
                delta_axil: chosen.delta_axil,
                cost: chosen.cost,
                efficiency: chosen.efficiency.is_finite().then_some(chosen.efficiency),
                total_axil,
            });
        }

        Ok(Solution {
            selector: self.name.clone(),
            requested,
            total_axil: levels.total_axil(instance),
            usage: table.usage(&levels),
            iterations: trace.len(),
            assignment: levels,
            solve_time: started.elapsed(),
            trace,
        })
    }
}

/// Rebuilds the final assignment from an upgrade log.
pub fn replay(steps: &[UpgradeStep], n_apps: usize) -> Assignment {
    let mut a = Assignment::all_off(n_apps);
    for step in steps {
        for c in &step.closure {
            a.set(c.app, Some(c.to));
        }
    }
    a
}
