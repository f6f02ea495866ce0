//! Maximization over the boundary of the Gaussian superset.
//!
//! The boundary `{g = L}` is parametrized by rays from the constraint
//! centre: each unit direction `u` meets it at exactly one point because
//! `g` is convex and vanishes at the centre. A projected-gradient ascent
//! on the unit sphere is run from several directions.

use nalgebra::DVector;
use rayon::prelude::*;

use super::constraint::{exit_time, PearsonConstraint};
use super::objective::ConvexObjective;
use crate::error::{Error, Result};

/// Settings of the multi-start boundary ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub starts: usize,
    pub max_iter: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Values closer than this are ties when looking for several optima.
    pub tie_tol: f64,
    /// Tied optima farther apart than this raise the multiple-optima flag.
    pub separation: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            max_iter: 2000,
            armijo: 1e-4,
            backtrack: 0.5,
            tie_tol: 1e-8,
            separation: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MaximizeOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub boundary_residual: f64,
    pub multiple_optima: bool,
}

#[derive(Debug, Clone)]
struct Ascent {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
}

struct RayShooter<'a> {
    obj: &'a dyn ConvexObjective,
    g: &'a PearsonConstraint,
    threshold: f64,
    center: Vec<f64>,
    last: f64,
    /// Hessian of `g` at the centre, used for the first root guess.
    curvature: nalgebra::DMatrix<f64>,
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|a| a / norm).collect())
}

impl<'a> RayShooter<'a> {
    fn new(obj: &'a dyn ConvexObjective, g: &'a PearsonConstraint, threshold: f64) -> Self {
        let center = g.center().to_vec();
        let last = 1.0 - center.iter().sum::<f64>();
        let curvature = g.hessian(&center);
        Self { obj, g, threshold, center, last, curvature }
    }

    fn point(&self, u: &[f64], t: f64) -> Vec<f64> {
        self.center.iter().zip(u).map(|(c, ui)| c + t * ui).collect()
    }

    /// Distance along `u` at which `g` reaches the threshold.
    fn root(&self, u: &[f64]) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, exit_time(&self.center, self.last, u));
        let uv = DVector::from_column_slice(u);
        let q = (uv.transpose() * &self.curvature * &uv)[(0, 0)];
        let mut t = (2.0 * self.threshold / q).sqrt();
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let tol = 1e-13 * self.threshold.max(1.0);
        for _ in 0..300 {
            let x = self.point(u, t);
            let excess = self.g.value(&x) - self.threshold;
            if excess.abs() <= tol {
                return Ok(t);
            }
            if excess > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let next = if excess.is_finite() {
                t - excess / self.g.gradient(&x).dot(&uv)
            } else {
                f64::NAN
            };
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(t);
            }
        }
        Err(Error::Convergence { method: "boundary ray root", iterations: 300 })
    }

    fn boundary(&self, u: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
        let t = self.root(u)?;
        let x = self.point(u, t);
        let value = self.obj.value(&x);
        Ok((x, t, value))
    }

    fn ascend(&self, start: &[f64], cfg: &AscentConfig) -> Result<Ascent> {
        let mut u = normalize(start)
            .ok_or_else(|| Error::InvalidInput("zero ascent direction".into()))?;
        let (mut x, mut t, mut value) = self.boundary(&u)?;
        let mut step = 1.0;
        for iter in 0..cfg.max_iter {
            let gf = self.obj.gradient(&x);
            let gg = self.g.gradient(&x);
            let uv = DVector::from_column_slice(&u);
            let grad = (&gf - &gg * (uv.dot(&gf) / gg.dot(&uv))) * t;
            let tangent = &grad - &uv * grad.dot(&uv);
            let slope = tangent.norm_squared();
            if slope <= f64::EPSILON * f64::EPSILON * (1.0 + value.abs()) {
                return Ok(Ascent { x, value, iterations: iter });
            }
            let mut s = step;
            let accepted = loop {
                let trial: Vec<f64> = u.iter().zip(tangent.iter()).map(|(a, b)| a + s * b).collect();
                if let Some(v) = normalize(&trial) {
                    let (bx, bt, bval) = self.boundary(&v)?;
                    if bval >= value + cfg.armijo * s * slope {
                        break Some((v, bx, bt, bval));
                    }
                }
                s *= cfg.backtrack;
                if s * tangent.norm() < 1e-16 {
                    break None;
                }
            };
            let Some((v, bx, bt, bval)) = accepted else {
                return Ok(Ascent { x, value, iterations: iter });
            };
            let gain = bval - value;
            u = v;
            x = bx;
            t = bt;
            value = bval;
            step = s * 2.0;
            if gain <= 1e-15 * (1.0 + value.abs()) {
                return Ok(Ascent { x, value, iterations: iter + 1 });
            }
        }
        Ok(Ascent { x, value, iterations: cfg.max_iter })
    }
}

fn primes(count: usize) -> Vec<u64> {
    let mut found = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while found.len() < count {
        if found.iter().all(|p| candidate % p != 0) {
            found.push(candidate);
        }
        candidate += 1;
    }
    found
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let (mut value, mut scale) = (0.0, 1.0 / base as f64);
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale /= base as f64;
    }
    value
}

/// `2d` signed axis directions followed by Halton points pushed through
/// Box-Muller, so the directions are spread over the sphere.
pub(crate) fn start_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count.max(2 * d));
    for j in 0..d {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[j] = sign;
            dirs.push(e);
        }
    }
    if d == 1 {
        return dirs;
    }
    let pairs = d.div_ceil(2);
    let bases = primes(2 * pairs);
    let mut index = 1u64;
    while dirs.len() < count {
        let mut z = Vec::with_capacity(2 * pairs);
        for pair in 0..pairs {
            let u1 = radical_inverse(index, bases[2 * pair]).max(f64::MIN_POSITIVE);
            let u2 = radical_inverse(index, bases[2 * pair + 1]);
            let r = (-2.0 * u1.ln()).sqrt();
            let angle = std::f64::consts::TAU * u2;
            z.push(r * angle.cos());
            z.push(r * angle.sin());
        }
        z.truncate(d);
        if let Some(v) = normalize(&z) {
            dirs.push(v);
        }
        index += 1;
    }
    dirs
}

/// Maximizes `obj` over `{x : g(x) <= threshold}`.
pub(crate) fn boundary_maximize(
    obj: &dyn ConvexObjective,
    g: &PearsonConstraint,
    threshold: f64,
    cfg: &AscentConfig,
) -> Result<MaximizeOutcome> {
    let shooter = RayShooter::new(obj, g, threshold);
    let starts = start_directions(g.dim(), cfg.starts);
    let ascents = starts
        .par_iter()
        .map(|u| shooter.ascend(u, cfg))
        .collect::<Result<Vec<_>>>()?;
    let best = ascents
        .iter()
        .enumerate()
        .fold(0, |best, (i, a)| if a.value > ascents[best].value { i } else { best });
    let top = &ascents[best];
    let multiple_optima = ascents.iter().any(|a| {
        top.value - a.value <= cfg.tie_tol
            && a.x.iter().zip(&top.x).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
                >= cfg.separation
    });
    Ok(MaximizeOutcome {
        boundary_residual: (g.value(&top.x) - threshold).abs(),
        value: top.value,
        iterations: ascents.iter().map(|a| a.iterations).sum(),
        multiple_optima,
        x: top.x.clone(),
    })
}
