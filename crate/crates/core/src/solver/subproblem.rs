//! Exact solver for the linear local-region subproblem
//!
//! ```text
//! max  sum_{j in S} d_j   s.t.  |S| = C,  |S sym-diff S_bar| <= delta
//! ```
//!
//! Any feasible `S` trades `t <= delta/2` members of `S_bar` for `t`
//! non-members, so the best trade of size `t` pairs the `t` cheapest members
//! with the `t` dearest non-members. Only the `delta/2` extremes on each side
//! are ever needed, which a partial selection finds in linear time.

use std::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::objective::check_indices;

/// Validates a subproblem and returns the membership mask of `s_bar`.
pub(crate) fn check_subproblem(
    d: &[f64],
    s_bar: &[usize],
    cardinality: usize,
    delta: usize,
) -> Result<Vec<bool>> {
    let m = d.len();
    if let Some((j, v)) = d.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(invalid(format!("coefficient d[{j}] = {v} is not finite")));
    }
    let member = check_indices(m, s_bar)?;
    if s_bar.len() != cardinality {
        return Err(invalid(format!(
            "incumbent has {} locations but the cardinality is {cardinality}",
            s_bar.len()
        )));
    }
    if delta < 2 || !delta.is_multiple_of(2) {
        return Err(invalid(format!("region size must be an even integer >= 2, got {delta}")));
    }
    let room = cardinality.min(m - cardinality);
    if delta / 2 > room {
        return Err(invalid(format!(
            "region size {delta} allows {} swaps but only {room} are possible with C = {cardinality}, m = {m}",
            delta / 2
        )));
    }
    Ok(member)
}

/// The `k` entries of `pool` that come first under `order`, in that order.
fn extremes(pool: &mut [usize], k: usize, order: impl Fn(&usize, &usize) -> Ordering) -> &[usize] {
    if k < pool.len() {
        pool.select_nth_unstable_by(k, &order);
    }
    let head = &mut pool[..k];
    head.sort_unstable_by(&order);
    head
}

/// Returns the optimal set (ascending). Ties: within each side the lower
/// location index is preferred, and among trade sizes the smallest wins.
pub fn solve_subproblem(
    d: &[f64],
    s_bar: &[usize],
    cardinality: usize,
    delta: usize,
) -> Result<Vec<usize>> {
    let member = check_subproblem(d, s_bar, cardinality, delta)?;
    let half = delta / 2;

    let (mut inside, mut outside): (Vec<usize>, Vec<usize>) =
        (0..d.len()).partition(|&j| member[j]);
    let cheapest = extremes(&mut inside, half, |&a, &b| {
        d[a].total_cmp(&d[b]).then(a.cmp(&b))
    });
    let dearest = extremes(&mut outside, half, |&a, &b| {
        d[b].total_cmp(&d[a]).then(a.cmp(&b))
    });

    let mut best_t = 1;
    let mut best_gain = f64::NEG_INFINITY;
    let mut gain = 0.0;
    for t in 1..=half {
        gain += d[dearest[t - 1]] - d[cheapest[t - 1]];
        if gain > best_gain {
            best_gain = gain;
            best_t = t;
        }
    }

    let mut next = member;
    for h in 0..best_t {
        next[cheapest[h]] = false;
        next[dearest[h]] = true;
    }
    Ok((0..d.len()).filter(|&j| next[j]).collect())
}
