#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdv_orchestra::generator::{gen_instance, GenParams, SizePreset};
use sdv_orchestra::model::{
    assignment_usage, dependencies_satisfied, AppId, Assignment, Instance, ModeRef, ResourceVector,
    CAPACITY_TOLERANCE,
};
use sdv_orchestra::solver::Solution;

pub fn preset_instance(preset: SizePreset, seed: u64) -> Instance {
    gen_instance(&GenParams::from_preset(preset, seed)).expect("preset generation")
}

/// At most 8 apps, 3 modes and 20% density.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(1..=3);
    let density = [0.0, 0.1, 0.2][rng.gen_range(0..3)];
    gen_instance(&GenParams::new(n, m, density, seed)).expect("small generation")
}

/// Every application independently with probability one half.
pub fn random_request(inst: &Instance, seed: u64) -> Vec<AppId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inst.app_ids().filter(|_| rng.gen_bool(0.5)).collect()
}

/// Capacity at `fraction` of the hardware maximum.
pub fn scaled_capacity(inst: &Instance, fraction: f64) -> ResourceVector {
    inst.max_capacity.scaled(fraction)
}

/// Recomputes usage from scratch and checks it and every dependency.
pub fn assert_feasible(inst: &Instance, sol: &Solution, capacity: &ResourceVector) {
    let usage = assignment_usage(inst, &sol.assignment).unwrap();
    assert!(
        usage.fits_within(capacity, CAPACITY_TOLERANCE),
        "over capacity at {:?}",
        usage.excess_over(capacity, CAPACITY_TOLERANCE)
    );
    let deps = dependencies_satisfied(inst, &sol.assignment);
    assert!(deps.is_satisfied(), "{:?}", deps.violations);
    let total: f64 = sol
        .assignment
        .active()
        .map(|m| inst.mode(m).unwrap().axil)
        .sum();
    assert!((total - sol.total_axil).abs() <= 1e-9 * total.max(1.0));
}

/// Cheapest assignment that runs `app` at its most degraded level: every
/// required provider at the least capable level any requirement allows,
/// iterated to a fixed point.
pub fn degraded_closure(inst: &Instance, app: AppId) -> Assignment {
    let mut levels: BTreeMap<AppId, u32> = BTreeMap::new();
    levels.insert(app, inst.apps[app.index()].n_modes());
    loop {
        let before = levels.clone();
        for (a, l) in before.iter() {
            for dep in &inst.mode(ModeRef::new(*a, *l)).unwrap().deps {
                let e = levels.entry(dep.app).or_insert(dep.level);
                *e = (*e).min(dep.level);
            }
        }
        if levels == before {
            break;
        }
    }
    let mut out = Assignment::all_off(inst.n_apps());
    for (a, l) in levels {
        out.set(a, Some(l));
    }
    out
}
