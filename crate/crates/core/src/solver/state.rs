//! Per-zone bookkeeping for the current open set.
//!
//! Keeps `G_i(Y_i | S)` for every zone and, under nested logit, every nest
//! term `(sum_{j in nest, j in S} Y_ij^mu)^(1/mu)`, so that add, drop and swap
//! moves are priced in O(|I|) without re-summing the open set.

use crate::choice::{nest_growth, nest_partial, nest_shrink, ChoiceModelSpec, NestedLogit};
use crate::objective::Instance;

pub(crate) struct CaptureState<'a> {
    inst: &'a Instance,
    nested: Option<&'a NestedLogit>,
    member: Vec<bool>,
    /// G per zone.
    g: Vec<f64>,
    /// Nest terms, zone-major (`zone * L + nest`). Empty under MNL.
    terms: Vec<f64>,
    nests: usize,
}

#[inline]
fn capture(q: f64, g: f64) -> f64 {
    q * g / (1.0 + g)
}

/// Capture lost or gained when `G` moves from `g` to `g + dg` (any sign).
#[inline]
fn capture_delta(q: f64, g: f64, dg: f64) -> f64 {
    q * dg / ((1.0 + g) * (1.0 + g + dg))
}

impl<'a> CaptureState<'a> {
    pub fn new(inst: &'a Instance, selected: &[usize]) -> Self {
        let nested = match inst.spec() {
            ChoiceModelSpec::Mnl => None,
            ChoiceModelSpec::Nested(nl) => Some(nl),
        };
        let nests = nested.map_or(0, NestedLogit::nest_count);
        let mut state = Self {
            inst,
            nested,
            member: vec![false; inst.locations()],
            g: vec![0.0; inst.zones().len()],
            terms: vec![0.0; inst.zones().len() * nests],
            nests,
        };
        state.reset(selected);
        state
    }

    /// Recomputes everything from scratch for `selected`.
    pub fn reset(&mut self, selected: &[usize]) {
        self.member.fill(false);
        for &j in selected {
            self.member[j] = true;
        }
        let mut masked = vec![0.0; self.inst.locations()];
        for (i, z) in self.inst.zones().iter().enumerate() {
            match self.nested {
                None => {
                    self.g[i] = selected.iter().map(|&j| z.y[j]).sum();
                }
                Some(nl) => {
                    for ((v, &y), &open) in masked.iter_mut().zip(z.y.iter()).zip(&self.member) {
                        *v = if open { y } else { 0.0 };
                    }
                    let row = &mut self.terms[i * self.nests..(i + 1) * self.nests];
                    for (l, t) in row.iter_mut().enumerate() {
                        *t = nl.nest_term(l, &masked);
                    }
                    self.g[i] = row.iter().sum();
                }
            }
        }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.member[j]
    }

    #[cfg(test)]
    pub fn value(&self) -> f64 {
        self.inst
            .zones()
            .iter()
            .zip(&self.g)
            .map(|(z, &g)| capture(z.q, g))
            .sum()
    }

    #[inline]
    fn add_delta_g(&self, i: usize, j: usize, yj: f64) -> f64 {
        match self.nested {
            None => yj,
            Some(nl) => {
                let l = nl.nest_of()[j];
                nest_growth(self.terms[i * self.nests + l], yj, nl.mu()[l])
            }
        }
    }

    #[inline]
    fn drop_delta_g(&self, i: usize, j: usize, yj: f64) -> f64 {
        match self.nested {
            None => yj,
            Some(nl) => {
                let l = nl.nest_of()[j];
                nest_shrink(self.terms[i * self.nests + l], yj, nl.mu()[l])
            }
        }
    }

    /// `f(S + j) - f(S)` for `j` not in `S`.
    pub fn add_gain(&self, j: usize) -> f64 {
        debug_assert!(!self.member[j]);
        let mut gain = 0.0;
        for (i, z) in self.inst.zones().iter().enumerate() {
            let yj = z.y[j];
            if yj == 0.0 {
                continue;
            }
            gain += capture_delta(z.q, self.g[i], self.add_delta_g(i, j, yj));
        }
        gain
    }

    /// `f(S) - f(S - j)` for `j` in `S`.
    pub fn drop_loss(&self, j: usize) -> f64 {
        debug_assert!(self.member[j]);
        let mut loss = 0.0;
        for (i, z) in self.inst.zones().iter().enumerate() {
            let yj = z.y[j];
            if yj == 0.0 {
                continue;
            }
            let dg = self.drop_delta_g(i, j, yj);
            let g_after = (self.g[i] - dg).max(0.0);
            loss += capture_delta(z.q, g_after, self.g[i] - g_after);
        }
        loss
    }

    /// `f(S - out + inc)` for `out` in `S`, `inc` not in `S`.
    pub fn swap_value(&self, out: usize, inc: usize) -> f64 {
        debug_assert!(self.member[out] && !self.member[inc]);
        let mut total = 0.0;
        for (i, z) in self.inst.zones().iter().enumerate() {
            let (y_out, y_in) = (z.y[out], z.y[inc]);
            let g = match self.nested {
                None => self.g[i] - y_out + y_in,
                Some(nl) => {
                    let (l_out, l_in) = (nl.nest_of()[out], nl.nest_of()[inc]);
                    let base = i * self.nests;
                    let t_out = self.terms[base + l_out];
                    let shrunk = (t_out - nest_shrink(t_out, y_out, nl.mu()[l_out])).max(0.0);
                    if l_out == l_in {
                        let grown = shrunk + nest_growth(shrunk, y_in, nl.mu()[l_in]);
                        self.g[i] - t_out + grown
                    } else {
                        let t_in = self.terms[base + l_in];
                        let grown = t_in + nest_growth(t_in, y_in, nl.mu()[l_in]);
                        self.g[i] - t_out + shrunk - t_in + grown
                    }
                }
            };
            total += capture(z.q, g.max(0.0));
        }
        total
    }

    /// Opens `j`, updating the cached sums incrementally.
    pub fn insert(&mut self, j: usize) {
        debug_assert!(!self.member[j]);
        self.member[j] = true;
        for i in 0..self.g.len() {
            let yj = self.inst.zones()[i].y[j];
            if yj == 0.0 {
                continue;
            }
            let dg = self.add_delta_g(i, j, yj);
            if let Some(nl) = self.nested {
                self.terms[i * self.nests + nl.nest_of()[j]] += dg;
            }
            self.g[i] += dg;
        }
    }

    /// `df/dx_j` at the indicator vector of the current set.
    pub fn gradient(&self) -> Vec<f64> {
        let m = self.inst.locations();
        let mut d = vec![0.0; m];
        for (i, z) in self.inst.zones().iter().enumerate() {
            let w = z.q / ((1.0 + self.g[i]) * (1.0 + self.g[i]));
            for (j, dj) in d.iter_mut().enumerate() {
                let yj = z.y[j];
                if yj == 0.0 {
                    continue;
                }
                let partial = match self.nested {
                    None => 1.0,
                    Some(nl) => {
                        let l = nl.nest_of()[j];
                        let at = if self.member[j] { yj } else { 0.0 };
                        nest_partial(at, self.terms[i * self.nests + l], nl.mu()[l])
                    }
                };
                *dj += w * yj * partial;
            }
        }
        d
    }

    /// Marginal value of each location: gain of adding it when closed, loss
    /// of dropping it when open.
    pub fn marginal_coefficients(&self) -> Vec<f64> {
        (0..self.inst.locations())
            .map(|j| {
                if self.member[j] {
                    self.drop_loss(j)
                } else {
                    self.add_gain(j)
                }
            })
            .collect()
    }
}
