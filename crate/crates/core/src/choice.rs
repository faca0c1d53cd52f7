//! GEV choice-probability generating functions.
//!
//! A GEV model is fully described by its generating function `G(Y)` over the
//! attraction vector `Y` (entries `Y_j = exp(v_j)`). This module ships the
//! multinomial logit (`G = sum Y_j`) and the nested logit
//! (`G = sum_l (sum_{j in nest l} Y_j^mu_l)^(1/mu_l)`), both behind the [`Cpgf`]
//! trait so that solvers never depend on a concrete model.
//!
//! Choice probabilities are taken against an outside option of unit mass:
//! `P(j) = Y_j dG_j(Y) / (1 + G(Y))` and the outside share is `1 / (1 + G(Y))`.
//!
//! Conventions at the boundary of the domain:
//!
//! * `0^mu = 0` for `mu >= 1` and `0^(1/mu) = 0`, so a nest whose members are all
//!   masked contributes nothing to `G`.
//! * For a nest with `mu > 1` whose members are all zero, the partial derivative
//!   with respect to any member is taken as the one-sided limit along that
//!   member's axis, which is 1. This keeps `Y_j dG_j` equal to the rate at which
//!   `G` grows when location `j` is opened.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Non-negative attractions `Y_j`, one per location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttractionVector(Vec<f64>);

impl AttractionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid(format!(
                "attraction at location {j} is {v}; entries must be finite and >= 0"
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for AttractionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Generating-function contract shared by every GEV model.
///
/// The `eval*` methods assume the input has the right length and non-negative
/// entries; the checked entry points are on [`ChoiceModelSpec`].
pub trait Cpgf {
    /// Number of alternatives the model is defined over, if it is fixed.
    fn dimension(&self) -> Option<usize>;

    fn eval(&self, y: &[f64]) -> f64;

    /// Writes `dG/dY_j` into `out`.
    fn eval_gradient(&self, y: &[f64], out: &mut [f64]);

    /// Choice probabilities against an outside option of mass `outside`; the
    /// last entry is the outside share.
    fn eval_probabilities(&self, y: &[f64], outside: f64) -> Vec<f64> {
        let mut grad = vec![0.0; y.len()];
        self.eval_gradient(y, &mut grad);
        let g = self.eval(y);
        let denom = outside + g;
        let mut p: Vec<f64> = y
            .iter()
            .zip(&grad)
            .map(|(yj, dj)| yj * dj / denom)
            .collect();
        p.push(outside / denom);
        p
    }
}

/// Multinomial logit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mnl;

impl Cpgf for Mnl {
    fn dimension(&self) -> Option<usize> {
        None
    }

    fn eval(&self, y: &[f64]) -> f64 {
        y.iter().sum()
    }

    fn eval_gradient(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(1.0);
    }
}

/// Nested logit over a disjoint partition of the locations.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedLogit {
    nest_of: Vec<usize>,
    mu: Vec<f64>,
    members: Vec<Vec<usize>>,
}

impl NestedLogit {
    /// `nest_of[j]` is the (0-based) nest of location `j`; `mu[l]` the
    /// dissimilarity parameter of nest `l`, which must be at least 1.
    pub fn new(nest_of: Vec<usize>, mu: Vec<f64>) -> Result<Self> {
        if let Some((l, v)) = mu.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 1.0)) {
            return Err(invalid(format!("mu[{l}] = {v}; nest parameters must be >= 1")));
        }
        Self::with_any_mu(nest_of, mu)
    }

    /// Like [`NestedLogit::new`] but accepts any positive finite `mu`. A nest
    /// with `mu < 1` does not define a GEV model; this exists for probing what
    /// breaks when the parameter constraint is violated.
    pub fn with_any_mu(nest_of: Vec<usize>, mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(invalid("nested logit needs at least one nest"));
        }
        if let Some((l, v)) = mu.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("mu[{l}] = {v}; nest parameters must be positive")));
        }
        let mut members = vec![Vec::new(); mu.len()];
        for (j, &l) in nest_of.iter().enumerate() {
            if l >= mu.len() {
                return Err(invalid(format!(
                    "location {j} assigned to nest {l} but only {} nests exist",
                    mu.len()
                )));
            }
            members[l].push(j);
        }
        if let Some(l) = members.iter().position(Vec::is_empty) {
            return Err(invalid(format!("nest {l} has no locations")));
        }
        Ok(Self {
            nest_of,
            mu,
            members,
        })
    }

    pub fn nest_of(&self) -> &[usize] {
        &self.nest_of
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn members(&self, nest: usize) -> &[usize] {
        &self.members[nest]
    }

    pub fn nest_count(&self) -> usize {
        self.mu.len()
    }

    /// `(sum_{j in nest} y_j^mu)^(1/mu)`, evaluated with the largest member
    /// factored out to stay clear of overflow.
    pub(crate) fn nest_term(&self, nest: usize, y: &[f64]) -> f64 {
        let mu = self.mu[nest];
        let idx = &self.members[nest];
        if mu == 1.0 {
            return idx.iter().map(|&j| y[j]).sum();
        }
        let peak = idx.iter().map(|&j| y[j]).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let s: f64 = idx.iter().map(|&j| (y[j] / peak).powf(mu)).sum();
        peak * s.powf(1.0 / mu)
    }
}

/// Derivative of a nest term with respect to one member, given the member's
/// attraction and the current nest term.
#[inline]
pub(crate) fn nest_partial(yj: f64, term: f64, mu: f64) -> f64 {
    if mu == 1.0 || term == 0.0 {
        1.0
    } else {
        (yj / term).powf(mu - 1.0)
    }
}

/// Increase of a nest term `term = s^(1/mu)` when `s` grows by `added`
/// (`added = y^mu` of a newly opened member), computed without cancellation.
#[inline]
pub(crate) fn nest_growth(term: f64, yj: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        return yj;
    }
    if term == 0.0 {
        return yj;
    }
    let ratio = (yj / term).powf(mu);
    term * (ratio.ln_1p() / mu).exp_m1()
}

/// Decrease of a nest term when member `yj` (currently included) is removed.
#[inline]
pub(crate) fn nest_shrink(term: f64, yj: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        return yj;
    }
    if term == 0.0 {
        return 0.0;
    }
    let ratio = (yj / term).powf(mu);
    if ratio >= 1.0 {
        return term;
    }
    -term * ((-ratio).ln_1p() / mu).exp_m1()
}

impl Cpgf for NestedLogit {
    fn dimension(&self) -> Option<usize> {
        Some(self.nest_of.len())
    }

    fn eval(&self, y: &[f64]) -> f64 {
        (0..self.mu.len()).map(|l| self.nest_term(l, y)).sum()
    }

    fn eval_gradient(&self, y: &[f64], out: &mut [f64]) {
        for (l, idx) in self.members.iter().enumerate() {
            let term = self.nest_term(l, y);
            for &j in idx {
                out[j] = nest_partial(y[j], term, self.mu[l]);
            }
        }
    }
}

/// The choice model shared by all demand zones of an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum ChoiceModelSpec {
    Mnl,
    Nested(NestedLogit),
}

impl ChoiceModelSpec {
    pub fn nested(nest_of: Vec<usize>, mu: Vec<f64>) -> Result<Self> {
        NestedLogit::new(nest_of, mu).map(Self::Nested)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mnl => "mnl",
            Self::Nested(_) => "nested",
        }
    }

    pub(crate) fn model(&self) -> &dyn Cpgf {
        match self {
            Self::Mnl => &Mnl,
            Self::Nested(n) => n,
        }
    }

    pub fn check_dimension(&self, m: usize) -> Result<()> {
        match self.model().dimension() {
            Some(d) if d != m => Err(invalid(format!(
                "choice model covers {d} locations but the vector has {m}"
            ))),
            _ => Ok(()),
        }
    }

    /// `G(y)`.
    pub fn cpgf_value(&self, y: &AttractionVector) -> Result<f64> {
        self.check_dimension(y.len())?;
        Ok(self.model().eval(y))
    }

    /// `{dG/dY_j}`.
    pub fn cpgf_grad(&self, y: &AttractionVector) -> Result<Vec<f64>> {
        self.check_dimension(y.len())?;
        let mut out = vec![0.0; y.len()];
        self.model().eval_gradient(y, &mut out);
        Ok(out)
    }

    /// Shares of the `m` locations followed by the outside option's share,
    /// with the outside option normalized to unit mass.
    pub fn choice_probabilities(&self, y: &AttractionVector) -> Result<Vec<f64>> {
        self.choice_probabilities_with_outside(y, 1.0)
    }

    /// Same as [`ChoiceModelSpec::choice_probabilities`] for raw attractions
    /// competing against an outside option of mass `outside`.
    pub fn choice_probabilities_with_outside(
        &self,
        y: &AttractionVector,
        outside: f64,
    ) -> Result<Vec<f64>> {
        self.check_dimension(y.len())?;
        if !(outside.is_finite() && outside > 0.0) {
            return Err(invalid(format!("outside mass must be positive, got {outside}")));
        }
        Ok(self.model().eval_probabilities(y, outside))
    }
}
