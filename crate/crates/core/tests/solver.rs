use mcpgev::instances::{assign_nests, generate_euclidean, GeneratorParams};
use mcpgev::objective::objective;
use mcpgev::oracle::{brute_force_opt, brute_force_subproblem};
use mcpgev::rng;
use mcpgev::solver::{self, solve_subproblem, CoefMode, SolverConfig};
use mcpgev::ChoiceModelSpec;

fn params(zones: usize, locations: usize, seed: u64) -> GeneratorParams {
    GeneratorParams {
        zones,
        locations,
        beta: 0.5,
        plane_side: 10.0,
        seed,
        ..Default::default()
    }
}

#[test]
fn subproblem_exhaustive_over_every_region() {
    // Every m <= 12, every feasible (C, delta), distinct coefficients so the
    // optimal set is unique.
    let mut checked = 0;
    for m in 2..=12 {
        let mut r = rng::stream(m as u64, 0);
        for c in 1..m {
            for half in 1..=c.min(m - c) {
                let d: Vec<f64> = (0..m).map(|_| rng::uniform(&mut r, 0.0, 1.0)).collect();
                let s_bar = rng::subset(&mut r, m, c);
                let fast = solve_subproblem(&d, &s_bar, c, 2 * half).unwrap();
                let slow = brute_force_subproblem(&d, &s_bar, c, 2 * half).unwrap();
                assert_eq!(fast, slow, "m={m} C={c} delta={}", 2 * half);
                checked += 1;
            }
        }
    }
    assert!(checked > 150);
}

#[test]
fn subproblem_large_region() {
    let m = 200_000;
    let mut r = rng::stream(11, 0);
    let d: Vec<f64> = (0..m).map(|_| rng::uniform01(&mut r)).collect();
    let s_bar: Vec<usize> = (0..m / 2).collect();
    let s = solve_subproblem(&d, &s_bar, m / 2, m).unwrap();
    // Unrestricted region: the C largest coefficients.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    let mut top = order[..m / 2].to_vec();
    top.sort_unstable();
    assert_eq!(s, top);
}

#[test]
fn ggx_reaches_brute_force_optimum_on_small_instances() {
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..30 {
        for nested in [false, true] {
            let spec = if nested {
                assign_nests(10, &[1.2, 1.5]).unwrap()
            } else {
                ChoiceModelSpec::Mnl
            };
            let inst = generate_euclidean(&params(20, 10, seed), spec).unwrap();
            for c in [2, 3, 5] {
                let opt = brute_force_opt(&inst, c).unwrap().objective.unwrap();
                let (sol, _) = solver::ggx(&inst, &SolverConfig::new(c)).unwrap();
                let f = sol.objective.unwrap();
                assert!(f <= opt * (1.0 + 1e-12));
                hits += usize::from(f >= opt * (1.0 - 1e-9));
                total += 1;
            }
        }
    }
    assert!(hits * 10 >= total * 9, "{hits}/{total}");
}

#[test]
fn nested_with_unit_mu_solves_like_mnl() {
    for seed in 0..5 {
        let mnl = generate_euclidean(&params(40, 15, seed), ChoiceModelSpec::Mnl).unwrap();
        let nested = mnl.with_spec(assign_nests(15, &[1.0, 1.0, 1.0]).unwrap()).unwrap();
        for c in [3, 6] {
            let (a, ra) = solver::ggx(&mnl, &SolverConfig::new(c)).unwrap();
            let (b, rb) = solver::ggx(&nested, &SolverConfig::new(c)).unwrap();
            assert_eq!(a.selected, b.selected);
            assert!((a.objective.unwrap() - b.objective.unwrap()).abs() <= 1e-12);
            assert_eq!(ra.subproblem_accepted, rb.subproblem_accepted);
        }
    }
}

#[test]
fn marginal_coefficients_also_improve() {
    let inst = generate_euclidean(&params(60, 20, 4), assign_nests(20, &[1.1, 1.4]).unwrap()).unwrap();
    let mut cfg = SolverConfig::new(6);
    cfg.coef_mode = CoefMode::Marginal;
    let (sol, rep) = solver::ggx(&inst, &cfg).unwrap();
    assert!(rep.phase_objectives[0] <= sol.objective.unwrap());
    assert_eq!(objective(&inst, &sol.selected).unwrap(), sol.objective.unwrap());
}

#[test]
fn phases_compose() {
    let inst = generate_euclidean(&params(50, 18, 7), ChoiceModelSpec::Mnl).unwrap();
    let cfg = SolverConfig::new(4);
    let g = solver::greedy(&inst, 4).unwrap();
    let l = solver::gradient_local_search(&inst, &g, &cfg).unwrap();
    let x = solver::exchange_search(&inst, &l, &cfg).unwrap();
    let (sol, rep) = solver::ggx(&inst, &cfg).unwrap();
    assert_eq!(sol.selected, x.selected);
    assert_eq!(
        rep.phase_objectives,
        [g.objective.unwrap(), l.objective.unwrap(), x.objective.unwrap()]
    );
}

#[test]
fn ggx_is_deterministic() {
    let inst = generate_euclidean(&params(80, 30, 9), assign_nests(30, &[1.1, 1.3, 1.5]).unwrap()).unwrap();
    let a = solver::ggx(&inst, &SolverConfig::new(7)).unwrap();
    let b = solver::ggx(&inst, &SolverConfig::new(7)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.phase_objectives, b.1.phase_objectives);
}
