//! The maximum-capture objective.
//!
//! With the competitors' mass normalized to 1 in every zone, opening the set
//! `S` captures
//!
//! ```text
//! f(S) = sum_i q_i G_i(Y_i | S) / (1 + G_i(Y_i | S))
//!      = sum_i q_i - sum_i q_i / (1 + G_i(Y_i | S))
//! ```
//!
//! where `Y_i | S` zeroes every unopened location. The first form is the one
//! evaluated (no cancellation, and `f(empty) = 0` exactly). Zones are always
//! reduced in ascending index order.

use serde::{Deserialize, Serialize};

use crate::choice::{nest_growth, AttractionVector, ChoiceModelSpec, Cpgf};
use crate::error::{invalid, Result};

/// A demand zone: `q` customers with competitor-normalized attractions `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub q: f64,
    pub y: AttractionVector,
}

impl Zone {
    pub fn new(q: f64, y: AttractionVector) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(invalid(format!("zone weight must be positive, got {q}")));
        }
        Ok(Self { q, y })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    m: usize,
    zones: Vec<Zone>,
    spec: ChoiceModelSpec,
}

impl Instance {
    pub fn new(m: usize, zones: Vec<Zone>, spec: ChoiceModelSpec) -> Result<Self> {
        if m == 0 {
            return Err(invalid("an instance needs at least one location"));
        }
        if zones.is_empty() {
            return Err(invalid("an instance needs at least one zone"));
        }
        spec.check_dimension(m)?;
        for (i, z) in zones.iter().enumerate() {
            if z.y.len() != m {
                return Err(invalid(format!(
                    "zone {i} has {} attractions, expected {m}",
                    z.y.len()
                )));
            }
            if !(z.q.is_finite() && z.q > 0.0) {
                return Err(invalid(format!("zone {i} has non-positive weight {}", z.q)));
            }
        }
        Ok(Self { m, zones, spec })
    }

    pub fn locations(&self) -> usize {
        self.m
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn spec(&self) -> &ChoiceModelSpec {
        &self.spec
    }

    /// Same zones, different choice model.
    pub fn with_spec(&self, spec: ChoiceModelSpec) -> Result<Self> {
        Self::new(self.m, self.zones.clone(), spec)
    }

    pub fn total_demand(&self) -> f64 {
        self.zones.iter().map(|z| z.q).sum()
    }

    /// True when location `j` has positive attraction in at least one zone.
    pub fn is_attractive(&self, j: usize) -> bool {
        self.zones.iter().any(|z| z.y[j] > 0.0)
    }
}

/// A set of opened locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Strictly increasing, 0-based.
    pub selected: Vec<usize>,
    pub objective: Option<f64>,
}

impl Solution {
    /// Sorts and validates `selected` against `m` locations.
    pub fn new(mut selected: Vec<usize>, m: usize) -> Result<Self> {
        selected.sort_unstable();
        check_indices(m, &selected)?;
        Ok(Self {
            selected,
            objective: None,
        })
    }

    pub fn evaluated(inst: &Instance, selected: Vec<usize>) -> Result<Self> {
        let mut s = Self::new(selected, inst.locations())?;
        s.objective = Some(objective(inst, &s.selected)?);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Validates an index set and returns its membership mask.
pub fn check_indices(m: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut member = vec![false; m];
    for &j in set {
        if j >= m {
            return Err(invalid(format!("location index {j} out of range 0..{m}")));
        }
        if member[j] {
            return Err(invalid(format!("location index {j} repeated")));
        }
        member[j] = true;
    }
    Ok(member)
}

/// Keeps the attractions of `selected` and zeroes the rest.
pub fn mask(y: &AttractionVector, selected: &[usize]) -> Result<AttractionVector> {
    let member = check_indices(y.len(), selected)?;
    Ok(masked(y, &member))
}

fn masked(y: &[f64], member: &[bool]) -> AttractionVector {
    AttractionVector::new(
        y.iter()
            .zip(member)
            .map(|(&v, &keep)| if keep { v } else { 0.0 })
            .collect(),
    )
    .expect("masking preserves validity")
}

fn capture(q: f64, g: f64) -> f64 {
    q * g / (1.0 + g)
}

/// `f(S)`.
pub fn objective(inst: &Instance, selected: &[usize]) -> Result<f64> {
    let member = check_indices(inst.m, selected)?;
    let model = inst.spec.model();
    Ok(inst
        .zones
        .iter()
        .map(|z| capture(z.q, model.eval(&masked(&z.y, &member))))
        .sum())
}

fn check_relaxed(inst: &Instance, x: &[f64]) -> Result<()> {
    if x.len() != inst.m {
        return Err(invalid(format!(
            "relaxed point has {} entries, expected {}",
            x.len(),
            inst.m
        )));
    }
    if let Some((j, v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(invalid(format!("x[{j}] = {v} is outside [0, 1]")));
    }
    Ok(())
}

fn scaled(y: &[f64], x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(a, b)| a * b).collect()
}

/// `f(x)` on the box `[0,1]^m`, with `x` scaling each location's attraction.
pub fn objective_relaxed(inst: &Instance, x: &[f64]) -> Result<f64> {
    check_relaxed(inst, x)?;
    let model = inst.spec.model();
    Ok(inst
        .zones
        .iter()
        .map(|z| capture(z.q, model.eval(&scaled(&z.y, x))))
        .sum())
}

/// `df/dx_j = sum_i q_i Y_ij dG_j(x o Y_i) / (1 + G(x o Y_i))^2`.
pub fn objective_gradient(inst: &Instance, x: &[f64]) -> Result<Vec<f64>> {
    check_relaxed(inst, x)?;
    let model = inst.spec.model();
    let mut out = vec![0.0; inst.m];
    let mut partial = vec![0.0; inst.m];
    for z in &inst.zones {
        let xy = scaled(&z.y, x);
        let g = model.eval(&xy);
        model.eval_gradient(&xy, &mut partial);
        let w = z.q / ((1.0 + g) * (1.0 + g));
        for ((o, yj), dj) in out.iter_mut().zip(z.y.iter()).zip(&partial) {
            *o += w * yj * dj;
        }
    }
    Ok(out)
}

/// `f(S + j) - f(S)`, computed from the growth of each zone's `G` so that a
/// tiny but positive attraction still yields a positive gain.
pub fn marginal_gain(inst: &Instance, selected: &[usize], j: usize) -> Result<f64> {
    let member = check_indices(inst.m, selected)?;
    if j >= inst.m {
        return Err(invalid(format!("location index {j} out of range 0..{}", inst.m)));
    }
    if member[j] {
        return Err(invalid(format!("location {j} is already selected")));
    }
    let mut gain = 0.0;
    for z in &inst.zones {
        let yj = z.y[j];
        if yj == 0.0 {
            continue;
        }
        let ym = masked(&z.y, &member);
        let (g, dg) = match &inst.spec {
            ChoiceModelSpec::Mnl => (ym.iter().sum::<f64>(), yj),
            ChoiceModelSpec::Nested(nl) => {
                let l = nl.nest_of()[j];
                let term = nl.nest_term(l, &ym);
                (nl.eval(&ym), nest_growth(term, yj, nl.mu()[l]))
            }
        };
        gain += z.q * dg / ((1.0 + g) * (1.0 + g + dg));
    }
    Ok(gain)
}
