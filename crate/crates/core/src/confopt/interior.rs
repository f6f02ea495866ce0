//! Log-barrier interior-point minimization over the Gaussian superset.

use nalgebra::{DMatrix, DVector};

use super::constraint::PearsonConstraint;
use super::objective::ConvexObjective;
use crate::error::{Error, Result};

/// Tolerances of the barrier method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConfig {
    pub mu_start: f64,
    pub mu_factor: f64,
    pub mu_floor: f64,
    pub gap_tol: f64,
    pub newton_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_newton: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            mu_start: 1.0,
            mu_factor: 0.2,
            mu_floor: 1e-9,
            gap_tol: 1e-8,
            newton_tol: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_newton: 200,
        }
    }
}

/// Squared Newton decrement below which full steps are taken unchecked.
const QUADRATIC_ZONE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MinimizeOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub multiplier: f64,
}

struct Barrier<'a> {
    obj: &'a dyn ConvexObjective,
    g: &'a PearsonConstraint,
    threshold: f64,
}

impl Barrier<'_> {
    fn value(&self, x: &[f64], mu: f64) -> f64 {
        let last = 1.0 - x.iter().sum::<f64>();
        if last <= 0.0 || x.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        let slack = self.threshold - self.g.value(x);
        if slack <= 0.0 {
            return f64::INFINITY;
        }
        let logs: f64 = x.iter().map(|v| v.ln()).sum::<f64>() + last.ln();
        self.obj.value(x) - mu * (slack.ln() + logs)
    }

    fn newton_system(&self, x: &[f64], mu: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = x.len();
        let last = 1.0 - x.iter().sum::<f64>();
        let slack = self.threshold - self.g.value(x);
        let gg = self.g.gradient(x);
        let mut grad = self.obj.gradient(x) + &gg * (mu / slack);
        let mut hess = self.obj.hessian(x)
            + self.g.hessian(x) * (mu / slack)
            + (&gg * gg.transpose()) * (mu / (slack * slack));
        for i in 0..d {
            grad[i] -= mu * (1.0 / x[i] - 1.0 / last);
            for j in 0..d {
                let diag = if i == j { 1.0 / (x[i] * x[i]) } else { 0.0 };
                hess[(i, j)] += mu * (diag + 1.0 / (last * last));
            }
        }
        (grad, hess)
    }

    /// Damped Newton on the barrier function for fixed `mu`.
    fn center(&self, x: &mut Vec<f64>, mu: f64, cfg: &BarrierConfig) -> Result<usize> {
        let mut current = self.value(x, mu);
        for iter in 0..cfg.max_newton {
            let (grad, hess) = self.newton_system(x, mu);
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .lu()
                    .solve(&(-&grad))
                    .ok_or(Error::Convergence { method: "barrier Newton step", iterations: iter })?,
            };
            // squared Newton decrement
            let decrement = -grad.dot(&step);
            if decrement.sqrt() <= cfg.newton_tol {
                return Ok(iter);
            }
            let step_size = step.norm();
            if step_size <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>().sqrt() {
                return Ok(iter);
            }
            // inside the quadratic-convergence zone the decrease is below
            // the resolution of the barrier value; take full steps
            let pure_newton = decrement < QUADRATIC_ZONE;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
                let value = self.value(&trial, mu);
                let sufficient = value <= current - cfg.armijo * t * decrement
                    || (pure_newton && t == 1.0 && value.is_finite());
                if sufficient {
                    *x = trial;
                    current = value;
                    break;
                }
                t *= cfg.backtrack;
                if t < 1e-16 {
                    // no further progress is representable at this scale
                    return Ok(iter + 1);
                }
            }
        }
        Err(Error::Convergence { method: "barrier centering", iterations: cfg.max_newton })
    }
}

/// Minimizes `obj` over `{x : g(x) <= threshold}` starting from the
/// constraint centre, where `g` vanishes.
pub(crate) fn barrier_minimize(
    obj: &dyn ConvexObjective,
    g: &PearsonConstraint,
    threshold: f64,
    cfg: &BarrierConfig,
) -> Result<MinimizeOutcome> {
    let barrier = Barrier { obj, g, threshold };
    let mut x = g.center().to_vec();
    let terms = (x.len() + 2) as f64;
    let mut mu = cfg.mu_start;
    let mut iterations = 0;
    loop {
        iterations += barrier.center(&mut x, mu, cfg)?;
        if mu * terms < cfg.gap_tol || mu <= cfg.mu_floor {
            break;
        }
        mu = (mu * cfg.mu_factor).max(cfg.mu_floor);
    }
    let slack = threshold - g.value(&x);
    let multiplier = mu / slack;
    let kkt = obj.gradient(&x) + g.gradient(&x) * multiplier;
    Ok(MinimizeOutcome {
        value: obj.value(&x),
        kkt_residual: kkt.norm(),
        multiplier,
        iterations,
        x,
    })
}
