//! Exit criteria. Each test prints one `criterion N: PASS|FAIL` line with the
//! measured quantities; `criterion_11_determinism` reruns 1-10 and compares
//! their serialized outputs byte for byte.

use std::io::Write;
use std::time::{Duration, Instant};

use mcpgev::choice::ChoiceModelSpec;
use mcpgev::cli::{bench_cases, run_bench, write_rows, BenchSettings, ModelKind};
use mcpgev::instances::{
    assign_nests, generate_euclidean, mmnl_expand, mmnl_samples, GeneratorParams, MmnlParams,
    ALPHA_GRID, BETA_GRID, DEFAULT_MU,
};
use mcpgev::objective::{objective, Instance, Zone};
use mcpgev::oracle::{self, brute_force_opt, PropertyReport};
use mcpgev::rng;
use mcpgev::solver::{self, CoefMode, SolverConfig};

struct Outcome {
    passed: bool,
    detail: String,
    /// Serialized results; must be identical across reruns.
    artifact: String,
}

fn report_line(n: u32, name: &str, elapsed: Duration, limit: Duration, o: &Outcome) -> bool {
    let ok = o.passed && elapsed <= limit;
    // Written to the process stdout directly so the line survives output capture.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {n:>2} {name}: {} | {} | {:.2}s (limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn run(n: u32, name: &str, limit_s: u64, f: fn() -> Outcome) {
    let t = Instant::now();
    let o = f();
    let ok = report_line(n, name, t.elapsed(), Duration::from_secs(limit_s), &o);
    assert!(ok, "criterion {n} failed: {}", o.detail);
}

fn json(r: &impl serde::Serialize) -> String {
    serde_json::to_string(r).unwrap()
}

/// Ten MNL and ten nested instances (mu drawn from [1, 1.5]) for the property
/// suites.
fn property_instances() -> Vec<(String, Instance)> {
    let mut out = Vec::new();
    for seed in 0..10u64 {
        let mut r = rng::stream(1000 + seed, 7);
        let params = GeneratorParams {
            zones: 20 + rng::below(&mut r, 21),
            locations: 8 + rng::below(&mut r, 9),
            competitors: 5,
            alpha: ALPHA_GRID[rng::below(&mut r, 3)],
            beta: rng::uniform(&mut r, 0.2, 1.5),
            plane_side: 10.0,
            seed,
        };
        out.push((format!("mnl-{seed}"), generate_euclidean(&params, ChoiceModelSpec::Mnl).unwrap()));
        let nests = 1 + rng::below(&mut r, 4);
        let mu: Vec<f64> = (0..nests).map(|_| rng::uniform(&mut r, 1.0, 1.5)).collect();
        let spec = assign_nests(params.locations, &mu).unwrap();
        out.push((format!("nested-{seed}"), generate_euclidean(&params, spec).unwrap()));
    }
    out
}

fn property_suite(check: fn(&Instance, usize, u64) -> mcpgev::Result<PropertyReport>) -> Outcome {
    let mut violations = 0;
    let mut trials = 0;
    let mut artifact = String::new();
    for (k, (label, inst)) in property_instances().iter().enumerate() {
        let r = check(inst, 1000, 40 + k as u64).unwrap();
        violations += r.violations;
        trials += r.trials;
        artifact += &format!("{label}:{}\n", json(&r));
    }
    Outcome {
        passed: violations == 0,
        detail: format!("{violations} violations in {trials} trials over 20 instances"),
        artifact,
    }
}

fn c1() -> Outcome {
    property_suite(oracle::check_submodularity)
}

fn c2() -> Outcome {
    property_suite(oracle::check_monotonicity)
}

/// 100 brute-forceable instances: m in 8..=15, |I| in 10..=30, C in {2,3,4},
/// alpha and beta from the experimental grids; even indices MNL, odd nested.
fn small_instances() -> Vec<(Instance, usize)> {
    (0..100u64)
        .map(|k| {
            let mut r = rng::stream(2000 + k, 3);
            let m = 8 + rng::below(&mut r, 8);
            let params = GeneratorParams {
                zones: 10 + rng::below(&mut r, 21),
                locations: m,
                competitors: 5,
                alpha: ALPHA_GRID[rng::below(&mut r, 3)],
                beta: BETA_GRID[rng::below(&mut r, 3)],
                plane_side: 30.0,
                seed: k,
            };
            let spec = if k % 2 == 0 {
                ChoiceModelSpec::Mnl
            } else {
                assign_nests(m, &DEFAULT_MU[..3]).unwrap()
            };
            (generate_euclidean(&params, spec).unwrap(), 2 + (k as usize % 3))
        })
        .collect()
}

fn c3() -> Outcome {
    let bound = 1.0 - (-1.0f64).exp();
    let mut ok = 0;
    let mut worst_ratio = f64::INFINITY;
    let mut artifact = String::new();
    for (inst, c) in small_instances() {
        let g = solver::greedy(&inst, c).unwrap();
        let opt = brute_force_opt(&inst, c).unwrap();
        let (fg, fo) = (g.objective.unwrap(), opt.objective.unwrap());
        if fg >= bound * fo {
            ok += 1;
        }
        if fo > 0.0 {
            worst_ratio = worst_ratio.min(fg / fo);
        }
        artifact += &format!("{:?} {fg:e} {:?} {fo:e}\n", g.selected, opt.selected);
    }
    Outcome {
        passed: ok == 100,
        detail: format!("greedy >= (1-1/e) OPT on {ok}/100; worst greedy/OPT = {worst_ratio:.6}"),
        artifact,
    }
}

fn c4() -> Outcome {
    let r = oracle::check_subproblem(1000, 12, 4).unwrap();
    Outcome {
        passed: r.violations == 0 && r.trials == 1000,
        detail: format!("{}/{} oracle matches", r.trials - r.violations, r.trials),
        artifact: json(&r),
    }
}

fn c5() -> Outcome {
    let (mut dominates, mut optimal, mut monotone) = (0, 0, 0);
    let mut greedy_optimal = 0;
    let mut artifact = String::new();
    for (inst, c) in small_instances() {
        let gh = solver::greedy(&inst, c).unwrap().objective.unwrap();
        let (sol, rep) = solver::ggx(&inst, &SolverConfig::new(c)).unwrap();
        let f = sol.objective.unwrap();
        let opt = brute_force_opt(&inst, c).unwrap().objective.unwrap();
        let tol = 1e-9 * opt.abs().max(f64::MIN_POSITIVE);
        dominates += usize::from(f >= gh);
        optimal += usize::from((opt - f).abs() <= tol);
        greedy_optimal += usize::from((opt - gh).abs() <= tol);
        let p = rep.phase_objectives;
        monotone += usize::from(p[0] <= p[1] && p[1] <= p[2]);
        artifact += &format!("{:?} {:?}\n", sol.selected, p);
    }
    Outcome {
        passed: dominates == 100 && optimal >= 90 && monotone == 100,
        detail: format!(
            "ggx >= gh on {dominates}/100, ggx = OPT on {optimal}/100 (gh alone {greedy_optimal}/100), f1<=f2<=f3 on {monotone}/100"
        ),
        artifact,
    }
}

fn c6() -> Outcome {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    let mut artifact = String::new();
    let params = GeneratorParams {
        zones: 30,
        locations: 12,
        competitors: 5,
        alpha: 0.1,
        beta: 0.5,
        plane_side: 10.0,
        seed: 6,
    };
    let specs = [
        ChoiceModelSpec::Mnl,
        assign_nests(12, &[1.1, 1.3, 1.5]).unwrap(),
    ];
    for spec in specs {
        let inst = generate_euclidean(&params, spec).unwrap();
        let r = oracle::check_gradient(&inst, 100, 1e-5, 6).unwrap();
        violations += r.violations;
        for t in 0..100u64 {
            let mut s = rng::stream(6, t);
            let x: Vec<f64> = (0..12).map(|_| rng::uniform(&mut s, 0.1, 0.9)).collect();
            worst = worst.max(oracle::finite_difference_error(&inst, &x, 1e-5).unwrap());
        }
        artifact += &json(&r);
    }
    Outcome {
        passed: violations == 0,
        detail: format!("{violations} violations in 200 points; worst relative error {worst:.2e} (tol 1e-5)"),
        artifact,
    }
}

fn c7() -> Outcome {
    let cases = [
        (ChoiceModelSpec::Mnl, 12),
        (assign_nests(12, &[1.1, 1.3, 1.5]).unwrap(), 12),
        (assign_nests(25, &DEFAULT_MU).unwrap(), 25),
        (assign_nests(12, &[1.0, 1.0, 1.0]).unwrap(), 12),
    ];
    let mut violations = 0;
    let mut artifact = String::new();
    for (k, (spec, m)) in cases.iter().enumerate() {
        let r = oracle::check_cpgf(spec, *m, 1000, 70 + k as u64).unwrap();
        violations += r.violations;
        artifact += &json(&r);
    }
    Outcome {
        passed: violations == 0,
        detail: format!("{violations} contract violations over 4 x 1000 vectors"),
        artifact,
    }
}

fn c8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut artifact = String::new();
    for k in 0..20u64 {
        let mut r = rng::stream(8000 + k, 0);
        let m = 6 + rng::below(&mut r, 7);
        let params = GeneratorParams {
            zones: 5 + rng::below(&mut r, 11),
            locations: m,
            competitors: 1 + rng::below(&mut r, 5),
            alpha: ALPHA_GRID[rng::below(&mut r, 3)],
            beta: 1.0,
            plane_side: 10.0,
            seed: k,
        };
        let mp = MmnlParams::new(rng::uniform(&mut r, 0.2, 2.0), 1 + rng::below(&mut r, 20), k);
        let size = 1 + rng::below(&mut r, m);
        let s = rng::subset(&mut r, m, size);
        let expanded = mmnl_expand(&params, &mp).unwrap();
        let samples = mmnl_samples(&params, &mp).unwrap();
        let per_sample: Vec<f64> = (0..mp.samples)
            .map(|k| {
                let zones = samples
                    .iter()
                    .map(|z| Zone::new(1.0, z[k].clone()).unwrap())
                    .collect();
                objective(&Instance::new(m, zones, ChoiceModelSpec::Mnl).unwrap(), &s).unwrap()
            })
            .collect();
        let mean = per_sample.iter().sum::<f64>() / mp.samples as f64;
        let f = objective(&expanded, &s).unwrap();
        worst = worst.max((f - mean).abs());
        artifact += &format!("{f:e} {mean:e}\n");
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max |f_expanded - mean_k f_k| = {worst:.2e} over 20 configurations"),
        artifact,
    }
}

fn c9() -> Outcome {
    let params = GeneratorParams {
        zones: 800,
        locations: 100,
        competitors: 5,
        alpha: 0.1,
        beta: 1.0,
        plane_side: 30.0,
        seed: 9,
    };
    let inst = generate_euclidean(&params, ChoiceModelSpec::Mnl).unwrap();
    let t = Instant::now();
    let gh = solver::greedy(&inst, 10).unwrap();
    let gh_s = t.elapsed().as_secs_f64();
    let mut cfg = SolverConfig::new(10);
    cfg.delta = 4;
    cfg.coef_mode = CoefMode::Gradient;
    let t = Instant::now();
    let (sol, rep) = solver::ggx(&inst, &cfg).unwrap();
    let ggx_s = t.elapsed().as_secs_f64();
    Outcome {
        passed: ggx_s <= 30.0 && gh_s <= 2.0 && !rep.budget_exhausted,
        detail: format!(
            "ggx {ggx_s:.3}s (<= 30s), gh {gh_s:.3}s (<= 2s); f_gh = {:.6}, f_ggx = {:.6}",
            gh.objective.unwrap(),
            sol.objective.unwrap()
        ),
        artifact: format!("{:?} {:?} {:?}", gh.selected, sol.selected, rep.phase_objectives),
    }
}

fn c10() -> Outcome {
    let cases = bench_cases(&[(50, 25)], &[ModelKind::Nested], &ALPHA_GRID, &BETA_GRID, 0, 1);
    let settings = BenchSettings {
        cardinalities: (2..=10).collect(),
        delta: 4,
        coef_mode: CoefMode::Gradient,
        time_budget: Some(Duration::from_secs(600)),
        bf_max: None,
        mu: DEFAULT_MU.to_vec(),
        mmnl_samples: 100,
        competitors: 5,
        plane_side: 30.0,
        stamp: false,
    };
    let rows = run_bench(&cases, &settings, 1).unwrap();
    let gh: Vec<f64> = rows.iter().filter(|r| r.algo == "gh").map(|r| r.objective).collect();
    let ggx: Vec<f64> = rows.iter().filter(|r| r.algo == "ggx").map(|r| r.objective).collect();
    let gaps: Vec<f64> = gh
        .iter()
        .zip(&ggx)
        .map(|(g, x)| if *x > 0.0 { (x - g) / x } else { 0.0 })
        .collect();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let max_gap = gaps.iter().fold(0.0f64, |a, &b| a.max(b));
    let improved = gaps.iter().filter(|&&g| g > 0.0).count();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    write_rows(&path, &rows).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    Outcome {
        passed: ggx.len() == 81 && mean_gap <= 0.05,
        detail: format!(
            "{} instances, mean gap {:.4}% (<= 5%), max {:.4}%, ggx improved {improved}",
            ggx.len(),
            100.0 * mean_gap,
            100.0 * max_gap
        ),
        artifact: csv,
    }
}

/// Number, name, runtime limit in seconds, check.
type Criterion = (u32, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "submodularity", 30, c1),
    (2, "monotonicity", 10, c2),
    (3, "greedy guarantee", 60, c3),
    (4, "subproblem exactness", 10, c4),
    (5, "ggx dominance and quality", 120, c5),
    (6, "gradient correctness", 10, c6),
    (7, "cpgf contracts", 10, c7),
    (8, "mmnl expansion identity", 10, c8),
    (9, "desk-scale performance", 30, c9),
    (10, "gh quality gap", 300, c10),
];

macro_rules! criterion_test {
    ($name:ident, $idx:expr) => {
        #[test]
        fn $name() {
            let (n, name, limit, f) = CRITERIA[$idx];
            run(n, name, limit, f);
        }
    };
}

criterion_test!(criterion_01_submodularity, 0);
criterion_test!(criterion_02_monotonicity, 1);
criterion_test!(criterion_03_greedy_guarantee, 2);
criterion_test!(criterion_04_subproblem_exactness, 3);
criterion_test!(criterion_05_ggx_quality, 4);
criterion_test!(criterion_06_gradient, 5);
criterion_test!(criterion_07_cpgf_contracts, 6);
criterion_test!(criterion_08_mmnl_identity, 7);
criterion_test!(criterion_09_performance, 8);
criterion_test!(criterion_10_gap, 9);

#[test]
fn criterion_11_determinism() {
    let t = Instant::now();
    let mut differing = Vec::new();
    for (n, _, _, f) in CRITERIA {
        let (a, b) = (f(), f());
        if a.artifact != b.artifact {
            differing.push(n);
        }
    }
    let o = Outcome {
        passed: differing.is_empty(),
        detail: format!("criteria with differing output on rerun: {differing:?}"),
        artifact: String::new(),
    };
    let ok = report_line(11, "determinism", t.elapsed(), Duration::from_secs(1200), &o);
    assert!(ok, "{}", o.detail);
}
