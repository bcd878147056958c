//! Exhaustive oracle for small instances.

use std::time::Instant;

use super::{check_request, ModeSelector, Solution, SolveError};
use crate::generator::app_closure;
use crate::model::{
    dependencies_satisfied, AppId, Assignment, Instance, RequirementTable, ResourceVector,
    CAPACITY_TOLERANCE,
};

/// Largest number of assignments the oracle will enumerate.
pub const SEARCH_SPACE_LIMIT: u128 = 10_000_000;

/// Enumerates every level (and Off) for the requested applications and
/// everything they can depend on. Among equal optima the first one in
/// enumeration order wins: applications in id order, each trying its
/// most capable level first and Off last.
#[derive(Clone, Debug)]
pub struct ExactSolver {
    limit: u128,
}

impl Default for ExactSolver {
    fn default() -> Self {
        ExactSolver {
            limit: SEARCH_SPACE_LIMIT,
        }
    }
}

impl ExactSolver {
    pub fn with_limit(limit: u128) -> Self {
        ExactSolver { limit }
    }
}

struct Search<'a> {
    instance: &'a Instance,
    table: &'a RequirementTable,
    capacity: &'a ResourceVector,
    apps: &'a [AppId],
    current: Assignment,
    usage: ResourceVector,
    best: Option<(f64, Assignment)>,
}

impl Search<'_> {
    fn visit(&mut self, depth: usize, axil: f64) {
        if depth == self.apps.len() {
            if !dependencies_satisfied(self.instance, &self.current).is_satisfied() {
                return;
            }
            let better = match &self.best {
                None => true,
                Some((b, _)) => axil > b + 1e-9 * b.abs().max(1.0),
            };
            if better {
                self.best = Some((axil, self.current.clone()));
            }
            return;
        }
        let app = self.apps[depth];
        let n_modes = self.instance.apps[app.index()].n_modes();
        for level in 1..=n_modes {
            let req = self.table.get(app, level);
            let next = &self.usage + req;
            // Requirements are non-negative, so an overflow here cannot recover.
            if !next.fits_within(self.capacity, CAPACITY_TOLERANCE) {
                continue;
            }
            let saved = std::mem::replace(&mut self.usage, next);
            self.current.set(app, Some(level));
            let gain = self.instance.apps[app.index()].modes[level as usize - 1].axil;
            self.visit(depth + 1, axil + gain);
            self.current.set(app, None);
            self.usage = saved;
        }
        self.visit(depth + 1, axil);
    }
}

impl ModeSelector for ExactSolver {
    fn name(&self) -> &str {
        "exact"
    }

    fn description(&self) -> &str {
        "exhaustive enumeration (small instances only)"
    }

    fn select(
        &self,
        instance: &Instance,
        requested: &[AppId],
        capacity: &ResourceVector,
    ) -> Result<Solution, SolveError> {
        let started = Instant::now();
        let requested = check_request(instance, requested, capacity)?;
        let apps = app_closure(instance, requested.iter().copied());

        let mut size: u128 = 1;
        for a in &apps {
            size = size.saturating_mul(instance.apps[a.index()].n_modes() as u128 + 1);
            if size > self.limit {
                return Err(SolveError::SearchSpaceTooLarge {
                    size,
                    limit: self.limit,
                });
            }
        }

        let table = RequirementTable::build(instance)?;
        let mut search = Search {
            instance,
            table: &table,
            capacity,
            apps: &apps,
            current: Assignment::all_off(instance.n_apps()),
            usage: ResourceVector::zeros(table.resource_len()),
            best: None,
        };
        search.visit(0, 0.0);
        let assignment = search
            .best
            .map(|(_, a)| a)
            .unwrap_or_else(|| Assignment::all_off(instance.n_apps()));

        Ok(Solution {
            selector: "exact".to_string(),
            requested,
            total_axil: assignment.total_axil(instance),
            usage: table.usage(&assignment),
            iterations: 0,
            assignment,
            solve_time: started.elapsed(),
            trace: Vec::new(),
        })
    }
}
