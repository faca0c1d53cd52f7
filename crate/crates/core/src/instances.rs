//! Synthetic instances on the Euclidean plane.
//!
//! Zones, candidate locations and competitor facilities are drawn uniformly on
//! `[0, side]^2` from the geometry stream of the seed, in that order, each
//! point as an `(x, y)` pair. With `c` the Euclidean distance:
//!
//! * location utility `v_ij = -beta c_ij`,
//! * competitor utility `-beta alpha c_ij'`, aggregated as `U_i = sum_j' exp(.)`,
//! * stored attraction `Y_ij = exp(v_ij) / U_i`, so the competitors carry unit
//!   mass in every zone,
//! * `q_i = 1`.
//!
//! Utilities are clamped to `[-50, 50]` before exponentiation.

use log::warn;

use crate::choice::{AttractionVector, ChoiceModelSpec};
use crate::error::{invalid, Result};
use crate::objective::{Instance, Zone};
use crate::rng;

pub const UTILITY_CLAMP: f64 = 50.0;
pub const DEFAULT_PLANE_SIDE: f64 = 30.0;
pub const DEFAULT_COMPETITORS: usize = 5;
pub const ALPHA_GRID: [f64; 3] = [0.01, 0.1, 1.0];
pub const BETA_GRID: [f64; 3] = [1.0, 5.0, 10.0];
pub const DEFAULT_MU: [f64; 5] = [1.1, 1.2, 1.3, 1.4, 1.5];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub zones: usize,
    pub locations: usize,
    pub competitors: usize,
    pub alpha: f64,
    pub beta: f64,
    pub plane_side: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            zones: 50,
            locations: 25,
            competitors: DEFAULT_COMPETITORS,
            alpha: 0.1,
            beta: 1.0,
            plane_side: DEFAULT_PLANE_SIDE,
            seed: 0,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.zones == 0 || self.locations == 0 || self.competitors == 0 {
            return Err(invalid("zones, locations and competitors must all be >= 1"));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("plane side", self.plane_side),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mixed-logit sampling: location utilities become
/// `-theta c_ij + noise_scale * c_ij * tau_ijk / 3` with `tau` standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct MmnlParams {
    pub theta: f64,
    pub samples: usize,
    /// Multiplier on `tau`; 1 is the standard model, 0 removes the noise.
    pub noise_scale: f64,
    pub seed: u64,
}

impl MmnlParams {
    pub fn new(theta: f64, samples: usize, seed: u64) -> Self {
        Self {
            theta,
            samples,
            noise_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("MMNL needs at least one sample"));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(invalid(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(invalid("noise scale must be finite and >= 0"));
        }
        Ok(())
    }
}

type Point = (f64, f64);

/// Distances from every zone to every location and competitor.
pub struct Geometry {
    /// `zones x locations`, row-major.
    pub location_dist: Vec<f64>,
    /// `zones x competitors`, row-major.
    pub competitor_dist: Vec<f64>,
    pub locations: usize,
    pub competitors: usize,
}

fn draw_points(r: &mut rng::Stream, n: usize, side: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = rng::uniform(r, 0.0, side);
            let y = rng::uniform(r, 0.0, side);
            (x, y)
        })
        .collect()
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn geometry(p: &GeneratorParams) -> Result<Geometry> {
    p.validate()?;
    let mut r = rng::stream(p.seed, rng::STREAM_GEOMETRY);
    let zones = draw_points(&mut r, p.zones, p.plane_side);
    let locations = draw_points(&mut r, p.locations, p.plane_side);
    let competitors = draw_points(&mut r, p.competitors, p.plane_side);
    let location_dist = zones
        .iter()
        .flat_map(|&z| locations.iter().map(move |&l| dist(z, l)))
        .collect();
    let competitor_dist = zones
        .iter()
        .flat_map(|&z| competitors.iter().map(move |&c| dist(z, c)))
        .collect();
    Ok(Geometry {
        location_dist,
        competitor_dist,
        locations: p.locations,
        competitors: p.competitors,
    })
}

struct Clamp(usize);

impl Clamp {
    fn exp(&mut self, v: f64) -> f64 {
        if v.abs() > UTILITY_CLAMP {
            self.0 += 1;
        }
        v.clamp(-UTILITY_CLAMP, UTILITY_CLAMP).exp()
    }

    fn report(&self, what: &str) {
        if self.0 > 0 {
            warn!("{what}: {} utilities exceeded |v| = {UTILITY_CLAMP} and were clamped", self.0);
        }
    }
}

impl Geometry {
    pub fn zones(&self) -> usize {
        self.location_dist.len() / self.locations
    }

    pub fn location_row(&self, i: usize) -> &[f64] {
        &self.location_dist[i * self.locations..(i + 1) * self.locations]
    }

    pub fn competitor_row(&self, i: usize) -> &[f64] {
        &self.competitor_dist[i * self.competitors..(i + 1) * self.competitors]
    }

    fn competitor_mass(&self, i: usize, beta: f64, alpha: f64, clamp: &mut Clamp) -> f64 {
        self.competitor_row(i)
            .iter()
            .map(|&c| clamp.exp(-beta * alpha * c))
            .sum()
    }
}

pub fn generate_euclidean(p: &GeneratorParams, spec: ChoiceModelSpec) -> Result<Instance> {
    spec.check_dimension(p.locations)?;
    let geo = geometry(p)?;
    let mut clamp = Clamp(0);
    let mut zones = Vec::with_capacity(p.zones);
    for i in 0..p.zones {
        let u = geo.competitor_mass(i, p.beta, p.alpha, &mut clamp);
        let y = geo
            .location_row(i)
            .iter()
            .map(|&c| clamp.exp(-p.beta * c) / u)
            .collect();
        zones.push(Zone::new(1.0, AttractionVector::new(y)?)?);
    }
    clamp.report("instance generation");
    Instance::new(p.locations, zones, spec)
}

/// Expands a mixed-logit model into an MNL instance with one zone per
/// (zone, sample) pair, zone `(i, k)` at index `i * K + k` with weight
/// `q_i / K`. `p.beta` is unused: `theta` plays its role, also in the
/// competitors' utilities, which stay deterministic. Noise is drawn from the
/// noise stream of `mp.seed` in `(i, k, j)` order.
pub fn mmnl_expand(p: &GeneratorParams, mp: &MmnlParams) -> Result<Instance> {
    mp.validate()?;
    let samples = mmnl_samples(p, mp)?;
    let k = mp.samples as f64;
    let mut zones = Vec::with_capacity(p.zones * mp.samples);
    for per_zone in samples {
        for y in per_zone {
            zones.push(Zone::new(1.0 / k, y)?);
        }
    }
    Instance::new(p.locations, zones, ChoiceModelSpec::Mnl)
}

/// Normalized attraction samples, indexed `[zone][sample]`.
pub fn mmnl_samples(p: &GeneratorParams, mp: &MmnlParams) -> Result<Vec<Vec<AttractionVector>>> {
    mp.validate()?;
    let geo = geometry(p)?;
    let mut noise = rng::stream(mp.seed, rng::STREAM_MMNL_NOISE);
    let mut clamp = Clamp(0);
    let mut out = Vec::with_capacity(p.zones);
    for i in 0..p.zones {
        let u = geo.competitor_mass(i, mp.theta, p.alpha, &mut clamp);
        let mut per_zone = Vec::with_capacity(mp.samples);
        for _ in 0..mp.samples {
            let y = geo
                .location_row(i)
                .iter()
                .map(|&c| {
                    let tau = rng::standard_normal(&mut noise);
                    clamp.exp(-mp.theta * c + mp.noise_scale * c * tau / 3.0) / u
                })
                .collect();
            per_zone.push(AttractionVector::new(y)?);
        }
        out.push(per_zone);
    }
    clamp.report("MMNL expansion");
    Ok(out)
}

/// Partitions `0..m` into `mu.len()` contiguous nests; earlier nests take the
/// larger blocks when `m` does not divide evenly.
pub fn assign_nests(m: usize, mu: &[f64]) -> Result<ChoiceModelSpec> {
    let nests = mu.len();
    if nests == 0 || nests > m {
        return Err(invalid(format!("nest count must be in 1..={m}, got {nests}")));
    }
    let (base, extra) = (m / nests, m % nests);
    let mut nest_of = Vec::with_capacity(m);
    for l in 0..nests {
        let size = base + usize::from(l < extra);
        nest_of.extend(std::iter::repeat_n(l, size));
    }
    ChoiceModelSpec::nested(nest_of, mu.to_vec())
}
