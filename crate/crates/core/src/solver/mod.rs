//! GGX: greedy warm start, gradient-driven local search over a region of
//! `delta` flips around the incumbent, then best-improvement single swaps.

mod state;
mod subproblem;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{objective, Instance, Solution};

use state::CaptureState;
pub(crate) use subproblem::check_subproblem;
pub use subproblem::solve_subproblem;

/// A candidate only replaces the incumbent when it beats it by more than this.
pub const IMPROVEMENT_SLACK: f64 = 1e-12;

pub const DEFAULT_DELTA: usize = 4;
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(600);

/// How the local-search phase scores locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefMode {
    /// Partial derivatives of the relaxed objective at the incumbent's
    /// indicator vector.
    #[default]
    Gradient,
    /// Exact add gains for closed locations and drop losses for open ones.
    Marginal,
}

impl fmt::Display for CoefMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gradient => "gradient",
            Self::Marginal => "marginal",
        })
    }
}

impl FromStr for CoefMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Self::Gradient),
            "marginal" => Ok(Self::Marginal),
            other => Err(invalid(format!("unknown coefficient mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cardinality: usize,
    /// Region size for the local-search subproblem; even, at least 2.
    pub delta: usize,
    pub coef_mode: CoefMode,
    /// Wall-clock budget for a whole run; checked between iterations.
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(cardinality: usize) -> Self {
        Self {
            cardinality,
            delta: DEFAULT_DELTA,
            coef_mode: CoefMode::Gradient,
            time_budget: Some(DEFAULT_TIME_BUDGET),
            seed: 0,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        check_cardinality(self.cardinality, m)?;
        if self.delta < 2 || !self.delta.is_multiple_of(2) {
            return Err(invalid(format!(
                "delta must be an even integer >= 2, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// `min(delta, 2 min(C, m - C))`; zero when no swap exists.
    pub fn effective_delta(&self, m: usize) -> usize {
        self.delta
            .min(2 * self.cardinality.min(m.saturating_sub(self.cardinality)))
    }
}

fn check_cardinality(c: usize, m: usize) -> Result<()> {
    if c == 0 || c > m {
        return Err(invalid(format!("cardinality must be in 1..={m}, got {c}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub coef_mode: CoefMode,
    pub effective_delta: usize,
    /// Objective after greedy, local search and exchange.
    pub phase_objectives: [f64; 3],
    /// Subproblems solved, including the final rejected one.
    pub subproblem_iterations: usize,
    pub subproblem_accepted: usize,
    /// Full swap scans, including the final unproductive one.
    pub exchange_iterations: usize,
    pub exchange_accepted: usize,
    pub wall_ms: [f64; 3],
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Deadline(Option<Instant>);

impl Deadline {
    fn after(budget: Option<Duration>) -> Self {
        Self(budget.and_then(|b| Instant::now().checked_add(b)))
    }

    fn passed(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn check_start(inst: &Instance, s0: &Solution, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate(inst.locations())?;
    if s0.len() != cfg.cardinality {
        return Err(invalid(format!(
            "starting solution has {} locations, expected {}",
            s0.len(),
            cfg.cardinality
        )));
    }
    objective(inst, &s0.selected)
}

/// Adds, `C` times, the location with the largest marginal gain (lowest index
/// on ties).
pub fn greedy(inst: &Instance, cardinality: usize) -> Result<Solution> {
    check_cardinality(cardinality, inst.locations())?;
    let mut st = CaptureState::new(inst, &[]);
    let mut selected = Vec::with_capacity(cardinality);
    for _ in 0..cardinality {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..inst.locations()).filter(|&j| !st.contains(j)) {
            let gain = st.add_gain(j);
            if best.is_none_or(|(_, b)| gain > b) {
                best = Some((j, gain));
            }
        }
        let (j, _) = best.expect("cardinality <= m leaves a candidate");
        st.insert(j);
        selected.push(j);
    }
    Solution::evaluated(inst, selected)
}

struct PhaseOutcome {
    solution: Solution,
    iterations: usize,
    accepted: usize,
    exhausted: bool,
}

fn local_search(
    inst: &Instance,
    s0: &Solution,
    cfg: &SolverConfig,
    deadline: Deadline,
) -> Result<PhaseOutcome> {
    let mut f = check_start(inst, s0, cfg)?;
    let delta = cfg.effective_delta(inst.locations());
    let mut current = s0.selected.clone();
    let mut out = PhaseOutcome {
        solution: s0.clone(),
        iterations: 0,
        accepted: 0,
        exhausted: false,
    };
    if delta >= 2 {
        let mut st = CaptureState::new(inst, &current);
        loop {
            if deadline.passed() {
                out.exhausted = true;
                break;
            }
            let d = match cfg.coef_mode {
                CoefMode::Gradient => st.gradient(),
                CoefMode::Marginal => st.marginal_coefficients(),
            };
            let candidate = solve_subproblem(&d, &current, cfg.cardinality, delta)?;
            out.iterations += 1;
            let fc = objective(inst, &candidate)?;
            if fc > f + IMPROVEMENT_SLACK {
                current = candidate;
                f = fc;
                st.reset(&current);
                out.accepted += 1;
            } else {
                break;
            }
        }
    }
    out.solution = Solution {
        selected: current,
        objective: Some(f),
    };
    Ok(out)
}

fn exchange(
    inst: &Instance,
    s0: &Solution,
    cfg: &SolverConfig,
    deadline: Deadline,
) -> Result<PhaseOutcome> {
    let mut f = check_start(inst, s0, cfg)?;
    let m = inst.locations();
    let mut current = s0.selected.clone();
    let mut out = PhaseOutcome {
        solution: s0.clone(),
        iterations: 0,
        accepted: 0,
        exhausted: false,
    };
    if cfg.cardinality < m {
        let mut st = CaptureState::new(inst, &current);
        loop {
            if deadline.passed() {
                out.exhausted = true;
                break;
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for &j in &current {
                for t in (0..m).filter(|&t| !st.contains(t)) {
                    let v = st.swap_value(j, t);
                    if best.is_none_or(|(_, _, b)| v > b) {
                        best = Some((j, t, v));
                    }
                }
            }
            out.iterations += 1;
            let (j, t, _) = best.expect("a swap exists when C < m");
            let mut candidate: Vec<usize> = current.iter().copied().filter(|&k| k != j).collect();
            candidate.push(t);
            candidate.sort_unstable();
            let fc = objective(inst, &candidate)?;
            if fc > f + IMPROVEMENT_SLACK {
                current = candidate;
                f = fc;
                st.reset(&current);
                out.accepted += 1;
            } else {
                break;
            }
        }
    }
    out.solution = Solution {
        selected: current,
        objective: Some(f),
    };
    Ok(out)
}

/// Repeatedly solves the local-region subproblem around the incumbent and
/// moves to its solution while that strictly improves the objective.
pub fn gradient_local_search(inst: &Instance, s0: &Solution, cfg: &SolverConfig) -> Result<Solution> {
    local_search(inst, s0, cfg, Deadline::after(cfg.time_budget)).map(|o| o.solution)
}

/// Best-improvement single swaps until none improves (ties go to the
/// lexicographically smallest `(removed, added)` pair).
pub fn exchange_search(inst: &Instance, s0: &Solution, cfg: &SolverConfig) -> Result<Solution> {
    exchange(inst, s0, cfg, Deadline::after(cfg.time_budget)).map(|o| o.solution)
}

/// Runs greedy, local search and exchange in sequence under one shared time
/// budget.
pub fn ggx(inst: &Instance, cfg: &SolverConfig) -> Result<(Solution, RunReport)> {
    cfg.validate(inst.locations())?;
    let deadline = Deadline::after(cfg.time_budget);

    let t0 = Instant::now();
    let warm = greedy(inst, cfg.cardinality)?;
    let ms_greedy = elapsed_ms(t0);

    let t1 = Instant::now();
    let ls = local_search(inst, &warm, cfg, deadline)?;
    let ms_ls = elapsed_ms(t1);

    let t2 = Instant::now();
    let ex = exchange(inst, &ls.solution, cfg, deadline)?;
    let ms_ex = elapsed_ms(t2);

    let f = |s: &Solution| s.objective.expect("phases fill the objective");
    let report = RunReport {
        algorithm: "ggx".into(),
        coef_mode: cfg.coef_mode,
        effective_delta: cfg.effective_delta(inst.locations()),
        phase_objectives: [f(&warm), f(&ls.solution), f(&ex.solution)],
        subproblem_iterations: ls.iterations,
        subproblem_accepted: ls.accepted,
        exchange_iterations: ex.iterations,
        exchange_accepted: ex.accepted,
        wall_ms: [ms_greedy, ms_ls, ms_ex],
        budget_exhausted: ls.exhausted || ex.exhausted,
    };
    Ok((ex.solution, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{AttractionVector, ChoiceModelSpec};
    use crate::objective::Zone;

    fn single(y: &[f64]) -> Instance {
        let z = Zone::new(1.0, AttractionVector::new(y.to_vec()).unwrap()).unwrap();
        Instance::new(y.len(), vec![z], ChoiceModelSpec::Mnl).unwrap()
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy(&single(&[3.0, 2.0, 1.0]), 2).unwrap().selected, vec![0, 1]);
        assert_eq!(greedy(&single(&[3.0, 2.0, 1.0]), 3).unwrap().selected, vec![0, 1, 2]);
        assert_eq!(greedy(&single(&[1.0; 4]), 2).unwrap().selected, vec![0, 1]);
        assert!(greedy(&single(&[1.0; 4]), 0).is_err());
        assert!(greedy(&single(&[1.0; 4]), 5).is_err());
    }

    #[test]
    fn exchange_fixes_a_bad_start() {
        let inst = single(&[3.0, 2.0, 1.0]);
        let s0 = Solution::new(vec![1, 2], 3).unwrap();
        let cfg = SolverConfig::new(2);
        assert_eq!(exchange_search(&inst, &s0, &cfg).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn optimal_start_is_a_fixed_point() {
        let inst = single(&[3.0, 2.0, 1.0]);
        let s0 = Solution::new(vec![0, 1], 3).unwrap();
        let cfg = SolverConfig::new(2);
        assert_eq!(gradient_local_search(&inst, &s0, &cfg).unwrap().selected, vec![0, 1]);
        assert_eq!(exchange_search(&inst, &s0, &cfg).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn full_cardinality_skips_search() {
        let inst = single(&[3.0, 2.0, 1.0]);
        let (s, r) = ggx(&inst, &SolverConfig::new(3)).unwrap();
        assert_eq!(s.selected, vec![0, 1, 2]);
        assert_eq!(r.effective_delta, 0);
        assert_eq!(r.subproblem_iterations, 0);
        assert_eq!(r.exchange_iterations, 0);
    }

    #[test]
    fn config_validation() {
        let inst = single(&[1.0, 2.0]);
        let mut cfg = SolverConfig::new(1);
        cfg.delta = 3;
        assert!(ggx(&inst, &cfg).is_err());
        cfg.delta = 0;
        assert!(ggx(&inst, &cfg).is_err());
        cfg.delta = 8;
        assert_eq!(cfg.effective_delta(2), 2);
        let wrong = Solution::new(vec![0, 1], 2).unwrap();
        assert!(exchange_search(&inst, &wrong, &cfg).is_err());
        assert_eq!("marginal".parse::<CoefMode>().unwrap(), CoefMode::Marginal);
        assert!("hessian".parse::<CoefMode>().is_err());
    }

    #[test]
    fn zero_budget_still_returns_greedy() {
        let inst = single(&[3.0, 2.0, 1.0, 0.5]);
        let mut cfg = SolverConfig::new(2);
        cfg.time_budget = Some(Duration::ZERO);
        let (s, r) = ggx(&inst, &cfg).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert!(r.budget_exhausted);
    }
}
