//! Exhaustive and sampling oracles.
//!
//! Nothing here touches the solver's incremental state: every objective value
//! is recomputed from the attraction data through [`crate::objective`].

use serde::{Deserialize, Serialize};

use crate::choice::{AttractionVector, ChoiceModelSpec};
use crate::error::{invalid, Error, Result};
use crate::objective::{
    check_indices, marginal_gain, objective, objective_gradient, objective_relaxed, Instance,
    Solution,
};
use crate::rng;
use crate::solver::check_subproblem as validate_subproblem;

/// Largest number of subsets an exhaustive search will enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Absolute slack before a property check counts a violation.
pub const VIOLATION_SLACK: f64 = 1e-10;

/// Relative tolerance of the finite-difference gradient check.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

/// Gradient magnitudes below this are compared in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_violation: f64,
    pub seed: u64,
}

impl PropertyReport {
    fn new(property: &str, trials: usize, seed: u64) -> Self {
        Self {
            property: property.to_string(),
            trials,
            violations: 0,
            worst_violation: 0.0,
            seed,
        }
    }

    fn record(&mut self, magnitude: f64) {
        self.violations += 1;
        if magnitude > self.worst_violation || magnitude.is_nan() {
            self.worst_violation = magnitude;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn guard(count: u128) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Calls `visit` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return;
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Exact maximizer of `f` over all `C`-subsets; the lexicographically
/// smallest subset wins ties.
pub fn brute_force_opt(inst: &Instance, cardinality: usize) -> Result<Solution> {
    let m = inst.locations();
    if cardinality == 0 || cardinality > m {
        return Err(invalid(format!("cardinality must be in 1..={m}, got {cardinality}")));
    }
    guard(binomial(m, cardinality))?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut failure = None;
    for_each_subset(m, cardinality, |s| match objective(inst, s) {
        Ok(f) => {
            if best.as_ref().is_none_or(|(_, b)| f > *b) {
                best = Some((s.to_vec(), f));
            }
        }
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (selected, f) = best.expect("at least one subset");
    Ok(Solution {
        selected,
        objective: Some(f),
    })
}

/// Exhaustive maximizer of `sum_{j in S} d_j` over `|S| = C`,
/// `2 <= |S sym-diff S_bar| <= delta`.
///
/// Ties (values equal to 1e-12 relative) go to the fewest swaps, then to the
/// lexicographically smallest set.
pub fn brute_force_subproblem(
    d: &[f64],
    s_bar: &[usize],
    cardinality: usize,
    delta: usize,
) -> Result<Vec<usize>> {
    let member = validate_subproblem(d, s_bar, cardinality, delta)?;
    let m = d.len();
    guard(binomial(m, cardinality))?;
    let mut best: Option<(Vec<usize>, f64, usize)> = None;
    for_each_subset(m, cardinality, |s| {
        let kept = s.iter().filter(|&&j| member[j]).count();
        let diff = 2 * (cardinality - kept);
        if diff < 2 || diff > delta {
            return;
        }
        let value: f64 = s.iter().map(|&j| d[j]).sum();
        let better = match &best {
            None => true,
            Some((_, b, bd)) => {
                let tol = 1e-12 * b.abs().max(value.abs()).max(1.0);
                value > b + tol || ((value - b).abs() <= tol && diff < *bd)
            }
        };
        if better {
            best = Some((s.to_vec(), value, diff));
        }
    });
    best.map(|(s, _, _)| s)
        .ok_or_else(|| Error::Infeasible("no set within the region differs from the incumbent".into()))
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    Ok(())
}

/// Samples `(A, B, j)` with `A` a subset of `B` and `j` outside `B`: `|B|`
/// uniform in `1..m`, `B` uniform of that size, `A` a uniform subset of `B`,
/// `j` uniform in the complement. Counts `gain_A(j) < gain_B(j) - slack`.
pub fn check_submodularity(inst: &Instance, trials: usize, seed: u64) -> Result<PropertyReport> {
    require_trials(trials)?;
    let m = inst.locations();
    if m < 2 {
        return Err(invalid("submodularity needs at least two locations"));
    }
    let mut report = PropertyReport::new("submodularity", trials, seed);
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64);
        let size_b = 1 + rng::below(&mut r, m - 1);
        let b = rng::subset(&mut r, m, size_b);
        let a: Vec<usize> = b.iter().copied().filter(|_| rng::uniform01(&mut r) < 0.5).collect();
        let outside: Vec<usize> = complement(m, &b);
        let j = outside[rng::below(&mut r, outside.len())];
        let gain_a = marginal_gain(inst, &a, j)?;
        let gain_b = marginal_gain(inst, &b, j)?;
        if gain_a < gain_b - VIOLATION_SLACK || gain_a.is_nan() || gain_b.is_nan() {
            report.record(gain_b - gain_a);
        }
    }
    Ok(report)
}

/// Samples `(S, j)` with `|S|` uniform in `0..m`, `S` uniform of that size and
/// `j` uniform outside `S`. A negative gain beyond the slack is a violation,
/// and so is a zero gain for a location that is attractive in some zone.
pub fn check_monotonicity(inst: &Instance, trials: usize, seed: u64) -> Result<PropertyReport> {
    require_trials(trials)?;
    let m = inst.locations();
    let mut report = PropertyReport::new("monotonicity", trials, seed);
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64);
        let size = rng::below(&mut r, m);
        let s = rng::subset(&mut r, m, size);
        let outside = complement(m, &s);
        let j = outside[rng::below(&mut r, outside.len())];
        let gain = marginal_gain(inst, &s, j)?;
        if gain < -VIOLATION_SLACK || gain.is_nan() || (gain <= 0.0 && inst.is_attractive(j)) {
            report.record(-gain);
        }
    }
    Ok(report)
}

/// Compares the analytic gradient with central differences of the relaxed
/// objective at points drawn uniformly from `[0.1, 0.9]^m`. The error of a
/// trial is `max_j |fd_j - g_j| / max(|g|_inf, GRADIENT_FLOOR)`.
pub fn check_gradient(inst: &Instance, trials: usize, step: f64, seed: u64) -> Result<PropertyReport> {
    require_trials(trials)?;
    if !(step > 0.0 && step <= 0.1) {
        return Err(invalid(format!("step must be in (0, 0.1], got {step}")));
    }
    let m = inst.locations();
    let mut report = PropertyReport::new("gradient", trials, seed);
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64);
        let x: Vec<f64> = (0..m).map(|_| rng::uniform(&mut r, 0.1, 0.9)).collect();
        let err = finite_difference_error(inst, &x, step)?;
        if err.is_nan() || err > GRADIENT_TOLERANCE {
            report.record(err);
        }
    }
    Ok(report)
}

/// Relative error between the analytic gradient and central differences at `x`.
pub fn finite_difference_error(inst: &Instance, x: &[f64], step: f64) -> Result<f64> {
    let g = objective_gradient(inst, x)?;
    let mut xp = x.to_vec();
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        xp[j] = x[j] + step;
        let up = objective_relaxed(inst, &xp)?;
        xp[j] = x[j] - step;
        let down = objective_relaxed(inst, &xp)?;
        xp[j] = x[j];
        let fd = (up - down) / (2.0 * step);
        worst = worst.max((fd - g[j]).abs());
    }
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(GRADIENT_FLOOR);
    Ok(worst / scale)
}

fn complement(m: usize, set: &[usize]) -> Vec<usize> {
    let member = check_indices(m, set).expect("sampled sets are valid");
    (0..m).filter(|&j| !member[j]).collect()
}

/// Random subproblems (`m` in `2..=max_m`, every feasible `(C, delta)` drawn
/// uniformly, `d` uniform on `[0, 1)`), each solved by the linear-time routine
/// and by enumeration. A differing set is a violation whose magnitude is the
/// objective shortfall.
pub fn check_subproblem(trials: usize, max_m: usize, seed: u64) -> Result<PropertyReport> {
    require_trials(trials)?;
    if max_m < 2 {
        return Err(invalid("subproblem check needs max_m >= 2"));
    }
    let mut report = PropertyReport::new("subproblem", trials, seed);
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64);
        let (d, s_bar, c, delta) = random_subproblem(&mut r, max_m);
        let fast = crate::solver::solve_subproblem(&d, &s_bar, c, delta)?;
        let slow = brute_force_subproblem(&d, &s_bar, c, delta)?;
        if fast != slow {
            let value = |s: &[usize]| s.iter().map(|&j| d[j]).sum::<f64>();
            report.record((value(&slow) - value(&fast)).max(0.0));
        }
    }
    Ok(report)
}

pub(crate) fn random_subproblem(r: &mut rng::Stream, max_m: usize) -> (Vec<f64>, Vec<usize>, usize, usize) {
    let m = 2 + rng::below(r, max_m - 1);
    let c = 1 + rng::below(r, m - 1);
    let half = 1 + rng::below(r, c.min(m - c));
    let d: Vec<f64> = (0..m).map(|_| rng::uniform01(r)).collect();
    let s_bar = rng::subset(r, m, c);
    (d, s_bar, c, 2 * half)
}

/// Generating-function contracts on random attraction vectors with entries in
/// `[0, 5)` (one in four entries zeroed): degree-one homogeneity, the Euler
/// identity `G = sum Y_j dG_j`, probabilities summing to one, and, for nested
/// logit with every `mu = 1`, agreement with MNL.
pub fn check_cpgf(spec: &ChoiceModelSpec, m: usize, trials: usize, seed: u64) -> Result<PropertyReport> {
    require_trials(trials)?;
    spec.check_dimension(m)?;
    let mut report = PropertyReport::new(&format!("cpgf-{}", spec.name()), trials, seed);
    let as_mnl = matches!(spec, ChoiceModelSpec::Nested(nl) if nl.mu().iter().all(|&mu| mu == 1.0));
    for trial in 0..trials {
        let mut r = rng::stream(seed, trial as u64);
        let y = AttractionVector::new(
            (0..m)
                .map(|_| {
                    let v = rng::uniform(&mut r, 0.0, 5.0);
                    if rng::below(&mut r, 4) == 0 { 0.0 } else { v }
                })
                .collect(),
        )?;
        let lambda = rng::uniform(&mut r, 0.01, 100.0);
        let g = spec.cpgf_value(&y)?;
        let grad = spec.cpgf_grad(&y)?;
        let scaled = AttractionVector::new(y.iter().map(|v| v * lambda).collect())?;
        let g_scaled = spec.cpgf_value(&scaled)?;
        let euler: f64 = y.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let probs = spec.choice_probabilities(&y)?;
        let total: f64 = probs.iter().sum();

        let mut worst: f64 = 0.0;
        worst = worst.max((g_scaled - lambda * g).abs() / (1e-9 * (lambda * g).max(1.0)));
        worst = worst.max((g - euler).abs() / (1e-9 * g.max(1.0)));
        worst = worst.max((total - 1.0).abs() / 1e-12);
        if g < 0.0 || grad.iter().any(|&v| v < 0.0) || probs.iter().any(|&p| p < 0.0) {
            worst = worst.max(f64::INFINITY);
        }
        if as_mnl {
            let mnl = ChoiceModelSpec::Mnl;
            worst = worst.max((mnl.cpgf_value(&y)? - g).abs() / 1e-12);
            for (a, b) in mnl.cpgf_grad(&y)?.iter().zip(&grad) {
                worst = worst.max((a - b).abs() / 1e-12);
            }
            for (a, b) in mnl.choice_probabilities(&y)?.iter().zip(&probs) {
                worst = worst.max((a - b).abs() / 1e-12);
            }
        }
        // worst is in units of the tolerance of each contract
        if worst.is_nan() || worst > 1.0 {
            report.record(worst);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Zone;

    fn single(y: &[f64]) -> Instance {
        let z = Zone::new(1.0, AttractionVector::new(y.to_vec()).unwrap()).unwrap();
        Instance::new(y.len(), vec![z], ChoiceModelSpec::Mnl).unwrap()
    }

    #[test]
    fn subsets_enumerate_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        let mut count = 0;
        for_each_subset(3, 0, |s| {
            assert!(s.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        assert_eq!(binomial(59, 10), 62_828_356_305);
        assert_eq!(binomial(5, 7), 0);
    }

    #[test]
    fn brute_force_examples() {
        let inst = single(&[3.0, 2.0, 1.0]);
        let s = brute_force_opt(&inst, 1).unwrap();
        assert_eq!(s.selected, vec![0]);
        assert!((s.objective.unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(brute_force_opt(&inst, 3).unwrap().selected, vec![0, 1, 2]);
        assert_eq!(brute_force_opt(&single(&[1.0; 5]), 2).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn brute_force_refuses_huge_enumerations() {
        let inst = single(&vec![1.0; 60]);
        match brute_force_opt(&inst, 10) {
            Err(Error::GuardExceeded { count, .. }) => assert_eq!(count, binomial(60, 10)),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_subproblem_examples() {
        let d = [5.0, 1.0, 4.0, 2.0];
        assert_eq!(brute_force_subproblem(&d, &[0, 1], 2, 2).unwrap(), vec![0, 2]);
        assert_eq!(brute_force_subproblem(&[1.0, 1.0, 1.0], &[0], 1, 2).unwrap(), vec![1]);
        assert!(brute_force_subproblem(&[1.0, 2.0], &[0, 1], 2, 2).is_err());
    }

    #[test]
    fn corrupted_nested_model_still_reports() {
        let nl = crate::choice::NestedLogit::with_any_mu(vec![0, 0, 0, 1, 1], vec![0.5, 0.5]).unwrap();
        let zones = (0..4)
            .map(|i| {
                let y = (0..5).map(|j| 0.5 + ((i * 5 + j) % 7) as f64 * 0.3).collect();
                Zone::new(1.0, AttractionVector::new(y).unwrap()).unwrap()
            })
            .collect();
        let inst = Instance::new(5, zones, ChoiceModelSpec::Nested(nl)).unwrap();
        let rep = check_submodularity(&inst, 200, 1).unwrap();
        assert_eq!(rep.trials, 200);
        assert!(rep.violations <= rep.trials);
    }

    #[test]
    fn reports_are_deterministic() {
        let inst = single(&[0.3, 1.2, 0.8, 2.0, 0.1]);
        let a = check_submodularity(&inst, 100, 9).unwrap();
        let b = check_submodularity(&inst, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
        assert!(check_monotonicity(&inst, 0, 9).is_err());
        assert!(check_gradient(&inst, 10, 0.5, 9).is_err());
    }

    #[test]
    fn zero_column_has_zero_gradient_and_no_violation() {
        let inst = single(&[0.0, 1.0, 2.0]);
        let rep = check_monotonicity(&inst, 300, 4).unwrap();
        assert!(rep.passed());
        let g = objective_gradient(&inst, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(g[0], 0.0);
        assert!(check_gradient(&inst, 20, 1e-5, 4).unwrap().passed());
    }
}
