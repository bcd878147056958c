mod common;

use common::*;
use proptest::prelude::*;
use sdv_orchestra::generator::{app_closure, SizePreset};
use sdv_orchestra::model::{assignment_usage, AppId, Instance, CAPACITY_TOLERANCE};
use sdv_orchestra::solver::{replay, solve_exact, solve_greedy, SelectorRegistry};

const FEASIBILITY_PRESETS: [SizePreset; 3] = [SizePreset::XS, SizePreset::S, SizePreset::M];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn greedy_is_feasible(preset in 0usize..3, seed in any::<u64>(), req in any::<u64>(), frac in 0.3f64..=1.0) {
        let inst = preset_instance(FEASIBILITY_PRESETS[preset], seed);
        let request = random_request(&inst, req);
        let cap = scaled_capacity(&inst, frac);
        let sol = solve_greedy(&inst, &request, &cap).unwrap();
        assert_feasible(&inst, &sol, &cap);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn greedy_bounded_by_exact(seed in any::<u64>(), req in any::<u64>(), frac in 0.05f64..=1.0) {
        let inst = small_instance(seed);
        let request = random_request(&inst, req);
        let cap = scaled_capacity(&inst, frac);
        let g = solve_greedy(&inst, &request, &cap).unwrap();
        let e = solve_exact(&inst, &request, &cap).unwrap();
        assert_feasible(&inst, &g, &cap);
        assert_feasible(&inst, &e, &cap);
        prop_assert!(g.total_axil <= e.total_axil + 1e-9, "greedy {} > exact {}", g.total_axil, e.total_axil);
    }

    #[test]
    fn greedy_is_not_trivially_empty(seed in any::<u64>(), req in any::<u64>(), frac in 0.01f64..=0.5) {
        let inst = small_instance(seed);
        let request = random_request(&inst, req);
        let cap = scaled_capacity(&inst, frac);
        let some_fit = request.iter().any(|a| {
            let closure = degraded_closure(&inst, *a);
            assignment_usage(&inst, &closure).unwrap().fits_within(&cap, CAPACITY_TOLERANCE)
        });
        let g = solve_greedy(&inst, &request, &cap).unwrap();
        prop_assert_eq!(some_fit, g.assignment.n_active() > 0);
    }

    #[test]
    fn every_selector_is_feasible(seed in any::<u64>(), req in any::<u64>(), frac in 0.05f64..=1.0) {
        let inst = small_instance(seed);
        let request = random_request(&inst, req);
        let cap = scaled_capacity(&inst, frac);
        let registry = SelectorRegistry::with_builtins();
        for name in registry.names() {
            let sol = registry.get(name).unwrap().select(&inst, &request, &cap).unwrap();
            assert_feasible(&inst, &sol, &cap);
        }
    }
}

fn scale_instance(inst: &Instance, k: f64) -> Instance {
    let mut out = inst.clone();
    for app in &mut out.apps {
        for m in &mut app.modes {
            m.cpu_pct *= k;
            m.mem_mb *= k;
            for f in &mut m.flows {
                f.target_mbps *= k;
            }
        }
    }
    for l in &mut out.topology.links {
        l.be_capacity *= k;
    }
    out.capacity = out.capacity.scaled(k);
    out.max_capacity = out.max_capacity.scaled(k);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn power_of_two_scaling_keeps_the_choice(preset in 0usize..3, seed in any::<u64>(), req in any::<u64>(), exp in -6i32..=6) {
        let inst = preset_instance(FEASIBILITY_PRESETS[preset], seed);
        let request = random_request(&inst, req);
        let scaled = scale_instance(&inst, 2f64.powi(exp));
        let a = solve_greedy(&inst, &request, &inst.capacity).unwrap();
        let b = solve_greedy(&scaled, &request, &scaled.capacity).unwrap();
        prop_assert_eq!(a.assignment, b.assignment);
        prop_assert_eq!(a.total_axil, b.total_axil);
    }

    #[test]
    fn upgrades_only_improve(preset in 0usize..3, seed in any::<u64>(), req in any::<u64>(), frac in 0.3f64..=1.0) {
        let inst = preset_instance(FEASIBILITY_PRESETS[preset], seed);
        let request = random_request(&inst, req);
        let cap = scaled_capacity(&inst, frac);
        let sol = solve_greedy(&inst, &request, &cap).unwrap();
        let mut last = 0.0;
        for step in &sol.trace {
            prop_assert!(step.delta_axil > 0.0);
            prop_assert!(step.total_axil > last);
            last = step.total_axil;
        }
        prop_assert!((last - sol.total_axil).abs() <= 1e-9 * last.max(1.0));
        prop_assert_eq!(replay(&sol.trace, inst.n_apps()), sol.assignment.clone());
        prop_assert_eq!(sol.iterations, sol.trace.len());
        let closure = app_closure(&inst, request.iter().copied());
        for m in sol.assignment.active() {
            prop_assert!(closure.contains(&m.app));
        }
    }

    #[test]
    fn greedy_is_deterministic(preset in 0usize..3, seed in any::<u64>(), req in any::<u64>()) {
        let inst = preset_instance(FEASIBILITY_PRESETS[preset], seed);
        let request = random_request(&inst, req);
        let mut a = solve_greedy(&inst, &request, &inst.capacity).unwrap();
        let mut b = solve_greedy(&inst, &request, &inst.capacity).unwrap();
        a.solve_time = Default::default();
        b.solve_time = Default::default();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn empty_request_selects_nothing() {
    let inst = preset_instance(SizePreset::M, 1);
    for solve in [solve_greedy, solve_exact] {
        let sol = solve(&inst, &[], &inst.capacity).unwrap();
        assert_eq!(sol.total_axil, 0.0);
        assert_eq!(sol.assignment.n_active(), 0);
    }
}

#[test]
fn full_capacity_grants_nominal_modes_on_a_loose_instance() {
    let inst = preset_instance(SizePreset::XS, 4);
    let all: Vec<AppId> = inst.app_ids().collect();
    let sol = solve_greedy(&inst, &all, &inst.capacity).unwrap();
    let nominal = assignment_usage(
        &inst,
        &sdv_orchestra::model::Assignment(vec![Some(1); inst.n_apps()]),
    )
    .unwrap();
    if nominal.fits_within(&inst.capacity, CAPACITY_TOLERANCE) {
        assert!(sol.assignment.0.iter().all(|l| *l == Some(1)));
    }
}
