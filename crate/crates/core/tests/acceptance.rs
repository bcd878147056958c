//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use common::*;
use sdv_orchestra::axil::{
    derive_axil, AxilFactors, EaseOfSubstitution, Exposition, QualityOfExperience,
};
use sdv_orchestra::cli;
use sdv_orchestra::generator::{gen_instance, gen_scenario, GenParams, SizePreset};
use sdv_orchestra::io::strip_timing;
use sdv_orchestra::metrics::{compare_runs, quartiles, RunComparison};
use sdv_orchestra::model::{
    assignment_usage, AppId, Application, Assignment, EcuId, Flow, FlowId, Instance, ModeRef,
    ModeSpec, ResourceVector, Topology, CAPACITY_TOLERANCE,
};
use sdv_orchestra::simulator::{
    cpu_factor, run_scenario, step_tick, LinkSharing, Policy, Proportional, SimConfig,
};
use sdv_orchestra::solver::{solve_exact, solve_greedy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// Rows: ease of substitution x exposition; columns: quality of experience
// from minimal to high.
const AXIL_GRID: &str = "
Easy      Rare    - - - -
Easy      Low     - - - -
Easy      Medium  - - - A
Easy      High    - - A B
Medium    Rare    - - - -
Medium    Low     - - - A
Medium    Medium  - - A B
Medium    High    - A B C
Difficult Rare    - - - A
Difficult Low     - - A B
Difficult Medium  - A B C
Difficult High    A B C D
";

fn axil_table() -> Outcome {
    let mut checked = 0;
    let mut wrong = Vec::new();
    for (row, line) in AXIL_GRID
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
    {
        let cells: Vec<&str> = line.split_whitespace().skip(2).collect();
        let e1 = EaseOfSubstitution::ALL[row / 4];
        let e2 = Exposition::ALL[row % 4];
        for (col, want) in cells.iter().enumerate() {
            let got =
                derive_axil(AxilFactors::new(e1, e2, QualityOfExperience::ALL[col])).to_string();
            checked += 1;
            if got != *want {
                wrong.push(format!("{line:?} col {col}: {got}"));
            }
        }
    }
    let all = AxilFactors::all().count();
    outcome(
        checked == 48 && all == 48 && wrong.is_empty(),
        format!(
            "{}/{checked} cells match{}",
            checked - wrong.len(),
            if wrong.is_empty() {
                String::new()
            } else {
                format!(" ({wrong:?})")
            }
        ),
    )
}

fn feasibility() -> Outcome {
    let presets = [SizePreset::XS, SizePreset::S, SizePreset::M];
    let mut cases = 0;
    let mut failures = Vec::new();
    for seed in 0..1200u64 {
        let inst = preset_instance(presets[(seed % 3) as usize], seed);
        let request = random_request(&inst, seed.wrapping_mul(31) + 7);
        let frac = 0.3 + 0.7 * ((seed * 37) % 101) as f64 / 100.0;
        let cap = scaled_capacity(&inst, frac);
        let sol = solve_greedy(&inst, &request, &cap).unwrap();
        let usage = assignment_usage(&inst, &sol.assignment).unwrap();
        let deps = sdv_orchestra::model::dependencies_satisfied(&inst, &sol.assignment);
        if !usage.fits_within(&cap, CAPACITY_TOLERANCE) || !deps.is_satisfied() {
            failures.push(seed);
        }
        cases += 1;
    }
    outcome(
        failures.is_empty(),
        format!(
            "{cases} instances (XS-M, capacity 30-100%), {} infeasible {failures:?}",
            failures.len()
        ),
    )
}

fn oracle_bound() -> Outcome {
    let (mut cases, mut ratio_sum, mut ratio_n) = (0, 0.0, 0);
    let mut problems = Vec::new();
    for seed in 0..300u64 {
        let inst = small_instance(seed);
        let request = random_request(&inst, seed ^ 0xabc);
        let frac = 0.05 + 0.95 * ((seed * 53) % 97) as f64 / 96.0;
        let cap = scaled_capacity(&inst, frac);
        let g = solve_greedy(&inst, &request, &cap).unwrap();
        let e = solve_exact(&inst, &request, &cap).unwrap();
        let feasible = assignment_usage(&inst, &g.assignment)
            .unwrap()
            .fits_within(&cap, CAPACITY_TOLERANCE)
            && sdv_orchestra::model::dependencies_satisfied(&inst, &g.assignment).is_satisfied();
        let some_fit = request.iter().any(|a| {
            assignment_usage(&inst, &degraded_closure(&inst, *a))
                .unwrap()
                .fits_within(&cap, CAPACITY_TOLERANCE)
        });
        if g.total_axil > e.total_axil + 1e-9
            || !feasible
            || (some_fit && g.assignment.n_active() == 0)
        {
            problems.push(seed);
        }
        if e.total_axil > 0.0 {
            ratio_sum += g.total_axil / e.total_axil;
            ratio_n += 1;
        }
        cases += 1;
    }
    outcome(
        problems.is_empty() && cases >= 200,
        format!(
            "{cases} small instances, mean greedy/exact {:.4} over {ratio_n} non-empty optima, violations {problems:?}",
            ratio_sum / ratio_n.max(1) as f64
        ),
    )
}

fn scaling() -> Outcome {
    // Warm caches and allocator before timing.
    let _ = cli::bench(&[SizePreset::M], 2, 999);
    let rows = match cli::bench(&SizePreset::ALL, 10, 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let medians: Vec<f64> = rows.iter().map(|r| r.timing_median_ms).collect();
    let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
    let xl_max = rows.last().map_or(f64::INFINITY, |r| r.timing_max_ms);
    let shape_ok = rows.iter().map(|r| (r.n_apps, r.m_max, r.density)).eq([
        (10, 1, 0.05),
        (20, 3, 0.05),
        (30, 4, 0.10),
        (50, 5, 0.15),
        (100, 5, 0.20),
    ]);
    outcome(
        monotone && xl_max < 5000.0 && shape_ok,
        format!(
            "median ms {} ; XL max {:.3} ms",
            rows.iter()
                .map(|r| format!("{}={:.3}", r.preset, r.timing_median_ms))
                .collect::<Vec<_>>()
                .join(" "),
            xl_max
        ),
    )
}

/// Share of each ECU's CPU held back for safety-critical work in the
/// comparison runs.
const SC_RESERVED_PCT: f64 = 50.0;
const GOLDEN_SEED: u64 = 2;

fn comparison(preset: SizePreset, seed: u64) -> RunComparison {
    let mut p = GenParams::from_preset(preset, seed);
    p.sc_cpu_reserved_pct = SC_RESERVED_PCT;
    let inst = gen_instance(&p).unwrap();
    let sc = gen_scenario(&inst, 6, seed).unwrap();
    let cfg = SimConfig {
        seed,
        ..SimConfig::default()
    };
    let b = run_scenario(&inst, &sc, &Policy::Baseline, &cfg).unwrap();
    let o = run_scenario(&inst, &sc, &Policy::optimized(), &cfg).unwrap();
    compare_runs(&b, &o).unwrap()
}

fn qualitative_check(c: &RunComparison) -> (bool, bool, bool) {
    let om = c.optimized.health.median().unwrap_or(f64::NAN);
    let bm = c.baseline.health.median().unwrap_or(f64::NAN);
    let health = (om - 100.0).abs() <= 0.5 && c.optimized.usage.overloaded_ticks == 0 && bm < om;
    let saturation = c.baseline.usage.saturated_ticks >= 1;
    let transition = c.optimized.timing.transition_time_s < c.baseline.timing.transition_time_s;
    (health, saturation, transition)
}

fn reproduction() -> Outcome {
    let started = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [SizePreset::M, SizePreset::L] {
        let c = comparison(preset, GOLDEN_SEED);
        let (h, s, t) = qualitative_check(&c);
        pass &= h && s && t;
        parts.push(format!(
            "{preset}({} apps): median opt {:.2}% base {:.2}%, saturated ticks base {} opt {}, transition opt {:.3}s base {:.3}s",
            preset.shape().0,
            c.optimized.health.median().unwrap_or(f64::NAN),
            c.baseline.health.median().unwrap_or(f64::NAN),
            c.baseline.usage.saturated_ticks,
            c.optimized.usage.saturated_ticks,
            c.optimized.timing.transition_time_s,
            c.baseline.timing.transition_time_s,
        ));
        // Informational: how often each part holds beyond the golden seed.
        let mut counts = [0; 3];
        for seed in 1..=20 {
            let (h, s, t) = qualitative_check(&comparison(preset, seed));
            counts[0] += h as usize;
            counts[1] += s as usize;
            counts[2] += t as usize;
        }
        parts.push(format!(
            "{preset} seeds 1-20: health {}/20 saturation {}/20 transition {}/20",
            counts[0], counts[1], counts[2]
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        pass && secs < 30.0,
        format!("seed {GOLDEN_SEED}: {} ; {secs:.1} s", parts.join(" ; ")),
    )
}

fn pipeline(dir: &Path) -> Result<(), cli::CliError> {
    let d = |p: &str| dir.join(p).display().to_string();
    let run = |args: Vec<String>| {
        cli::run(std::iter::once("sdv-orchestra".to_string()).chain(args)).map(drop)
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    run([
        s(&[
            "generate", "--preset", "M", "--seed", "11", "--sc-cpu", "50", "--out",
        ]),
        vec![d("gen")],
    ]
    .concat())?;
    run([
        s(&["solve", "--instance"]),
        vec![d("gen/instance.json")],
        s(&["--scenario"]),
        vec![d("gen/scenario.json")],
        s(&["--state", "0", "--out"]),
        vec![d("solution.json")],
    ]
    .concat())?;
    for policy in ["baseline", "optimized"] {
        run([
            s(&["simulate", "--instance"]),
            vec![d("gen/instance.json")],
            s(&["--scenario"]),
            vec![d("gen/scenario.json")],
            s(&["--policy", policy, "--out"]),
            vec![d("runs")],
        ]
        .concat())?;
    }
    run([
        s(&["report", "--baseline"]),
        vec![d("runs/run_baseline.json")],
        s(&["--optimized"]),
        vec![d("runs/run_optimized.json")],
        s(&["--out"]),
        vec![d("report")],
    ]
    .concat())
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let mut bytes = fs::read(&p).unwrap();
            if p.extension().is_some_and(|x| x == "json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                strip_timing(&mut v);
                bytes = serde_json::to_vec_pretty(&v).unwrap();
            }
            out.push((p.strip_prefix(dir).unwrap().display().to_string(), bytes));
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = pipeline(&a).and_then(|_| pipeline(&b)) {
        return outcome(false, format!("pipeline failed: {e}"));
    }
    let (fa, fb) = (files(&a), files(&b));
    let differing: Vec<&String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| &x.0)
        .collect();
    let pass = fa.len() == fb.len() && differing.is_empty() && fa.len() > 30;
    outcome(
        pass,
        format!(
            "{} files compared, {} differ {differing:?} ; {:.1} s",
            fa.len(),
            differing.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn one_mode_app(id: u32, ecu: u32, cpu: f64, flows: &[(u32, u32, f64)]) -> Application {
    Application {
        id: AppId(id),
        host_ecu: EcuId(ecu),
        modes: vec![ModeSpec {
            app: AppId(id),
            level: 1,
            axil: 1.0,
            cpu_pct: cpu,
            mem_mb: 0.0,
            deps: vec![],
            flows: flows
                .iter()
                .map(|(fid, dst, rate)| Flow {
                    id: FlowId(*fid),
                    src: ModeRef::new(AppId(id), 1),
                    dst: ModeRef::new(AppId(*dst), 1),
                    target_mbps: *rate,
                })
                .collect(),
        }],
    }
}

fn star_instance(apps: Vec<Application>) -> Instance {
    let topology = Topology::star(4, 10.0);
    let layout = topology.layout();
    let mut cap = ResourceVector::zeros(layout.len());
    for e in 0..4 {
        cap[layout.cpu(EcuId(e))] = 100.0;
        cap[layout.mem(EcuId(e))] = 8000.0;
    }
    for l in &topology.links {
        cap[layout.bw(l.id)] = 10.0;
    }
    Instance {
        topology,
        apps,
        capacity: cap.clone(),
        max_capacity: cap,
    }
}

fn micro_oracles() -> Outcome {
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let shared = star_instance(vec![
        one_mode_app(0, 0, 1.0, &[(0, 1, 8.0), (1, 2, 4.0)]),
        one_mode_app(1, 1, 1.0, &[]),
        one_mode_app(2, 2, 1.0, &[]),
    ]);
    let out = step_tick(&shared, &Assignment(vec![Some(1); 3]));
    let (a, b) = (out.flows[0].observed_mbps, out.flows[1].observed_mbps);
    checks.push((
        "8+4 on 10 -> 6.67/3.33",
        (a - 20.0 / 3.0).abs() < 1e-12
            && (b - 10.0 / 3.0).abs() < 1e-12
            && format!("{a:.2}/{b:.2}") == "6.67/3.33"
            && Proportional.factor(10.0, 12.0) == 10.0 / 12.0,
    ));

    let hot = star_instance(vec![
        one_mode_app(0, 0, 150.0, &[(0, 1, 3.0)]),
        one_mode_app(1, 1, 1.0, &[]),
    ]);
    let out = step_tick(&hot, &Assignment(vec![Some(1); 2]));
    checks.push((
        "cpu demand 150 -> factor 2/3",
        cpu_factor(100.0, 150.0) == 2.0 / 3.0 && (out.flows[0].offered_mbps - 2.0).abs() < 1e-12,
    ));

    let q = quartiles(&[100.0, 80.0, 60.0]).unwrap();
    let q2 = quartiles(&[0.0, 50.0, 100.0]).unwrap();
    let q3 = quartiles(&[100.0, 100.0, 100.0]).unwrap();
    checks.push((
        "quartiles of 3 samples",
        (q.q1, q.median, q.q3) == (70.0, 80.0, 90.0)
            && (q2.q1, q2.median, q2.q3) == (25.0, 50.0, 100.0 - 25.0)
            && (q3.q1, q3.median, q3.q3) == (100.0, 100.0, 100.0),
    ));

    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    outcome(
        failed.is_empty(),
        format!(
            "{}/{} cases exact, failing {failed:?}",
            checks.len() - failed.len(),
            checks.len()
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("1 AXIL table fidelity", axil_table),
        ("2 solver feasibility", feasibility),
        ("3 oracle bound", oracle_bound),
        ("4 scaling shape", scaling),
        ("5 baseline vs optimized", reproduction),
        ("6 determinism", determinism),
        ("7 model micro-oracles", micro_oracles),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
