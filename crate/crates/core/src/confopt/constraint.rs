//! Pearson's statistic as a smooth function of the free weights.

use nalgebra::{DMatrix, DVector};

/// `g(p) = n sum_i (phat_i - p_i)^2 / p_i` for fixed observed proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct PearsonConstraint {
    n: f64,
    p_hat: Vec<f64>,
}

impl PearsonConstraint {
    /// `p_hat` holds all `d + 1` observed proportions.
    pub fn new(n: f64, p_hat: Vec<f64>) -> Self {
        Self { n, p_hat }
    }

    pub fn dim(&self) -> usize {
        self.p_hat.len() - 1
    }

    pub fn center(&self) -> &[f64] {
        &self.p_hat[..self.dim()]
    }

    /// Value at free coordinates `x`; infinite outside the open simplex.
    pub fn value(&self, x: &[f64]) -> f64 {
        let last = 1.0 - x.iter().sum::<f64>();
        if last <= 0.0 || x.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        let term = |ph: f64, p: f64| (ph - p) * (ph - p) / p;
        let head: f64 = x.iter().zip(&self.p_hat).map(|(&p, &ph)| term(ph, p)).sum();
        self.n * (head + term(self.p_hat[self.dim()], last))
    }

    /// Gradient `n (phat_{d+1}^2 / p_{d+1}^2 - phat_j^2 / p_j^2)`.
    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let last = 1.0 - x.iter().sum::<f64>();
        let ph_last = self.p_hat[self.dim()];
        let tail = ph_last * ph_last / (last * last);
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(&self.p_hat)
                .map(|(&p, &ph)| self.n * (tail - ph * ph / (p * p))),
        )
    }

    /// Hessian `n diag(2 phat_j^2 / p_j^3) + n (2 phat_{d+1}^2 / p_{d+1}^3) 11^T`.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let last = 1.0 - x.iter().sum::<f64>();
        let ph_last = self.p_hat[self.dim()];
        let rank_one = 2.0 * self.n * ph_last * ph_last / last.powi(3);
        DMatrix::from_fn(x.len(), x.len(), |i, j| {
            let diag = if i == j {
                2.0 * self.n * self.p_hat[i] * self.p_hat[i] / x[i].powi(3)
            } else {
                0.0
            };
            diag + rank_one
        })
    }
}

/// Largest `t` keeping `center + t u` in the open simplex.
pub(crate) fn exit_time(center: &[f64], last: f64, u: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for (&c, &ui) in center.iter().zip(u) {
        if ui < 0.0 {
            t = t.min(c / -ui);
        }
    }
    let drift: f64 = u.iter().sum();
    if drift > 0.0 {
        t = t.min(last / drift);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CountVector, SimplexPoint};
    use crate::gaussian::pearson_statistic;
    use proptest::prelude::*;

    fn interior(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..1.0, d + 1).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            raw.iter().map(|r| r / total).collect()
        })
    }

    #[test]
    fn agrees_with_pearson_statistic() {
        let k = CountVector::from_categories(&[20, 30, 50]).unwrap();
        let g = PearsonConstraint::new(100.0, k.proportions());
        let p = SimplexPoint::new(vec![0.25, 0.25]).unwrap();
        let direct = pearson_statistic(&k, &p).unwrap();
        assert!((g.value(p.weights()) - direct).abs() < 1e-12 * direct);
        assert_eq!(g.value(&[0.2, 0.3]), 0.0);
        assert_eq!(g.value(&[0.6, 0.5]), f64::INFINITY);
    }

    #[test]
    fn exit_time_reaches_faces() {
        let c = [0.2, 0.3];
        assert!((exit_time(&c, 0.5, &[-1.0, 0.0]) - 0.2).abs() < 1e-15);
        assert!((exit_time(&c, 0.5, &[1.0, 1.0]) - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(
            (ph, p) in (1usize..=4).prop_flat_map(|d| (interior(d), interior(d)))
        ) {
            let d = ph.len() - 1;
            let g = PearsonConstraint::new(250.0, ph);
            let x = &p[..d];
            let grad = g.gradient(x);
            let hess = g.hessian(x);
            let h = 1e-6;
            for j in 0..d {
                let mut up = x.to_vec();
                let mut down = x.to_vec();
                up[j] += h;
                down[j] -= h;
                let fd = (g.value(&up) - g.value(&down)) / (2.0 * h);
                let scale = grad[j].abs().max(1.0);
                prop_assert!((fd - grad[j]).abs() < 1e-5 * scale, "grad {}: {} vs {}", j, fd, grad[j]);
                let gu = g.gradient(&up);
                let gd = g.gradient(&down);
                for i in 0..d {
                    let fd2 = (gu[i] - gd[i]) / (2.0 * h);
                    let scale = hess[(i, j)].abs().max(1.0);
                    prop_assert!((fd2 - hess[(i, j)]).abs() < 1e-5 * scale);
                }
            }
        }

        #[test]
        fn sublevel_sets_are_convex(
            (ph, p, q, t) in (1usize..=3).prop_flat_map(|d| (interior(d), interior(d), interior(d), 0.01f64..0.99))
        ) {
            let d = ph.len() - 1;
            let g = PearsonConstraint::new(100.0, ph);
            let mix: Vec<f64> = (0..d).map(|i| t * p[i] + (1.0 - t) * q[i]).collect();
            let bound = g.value(&p[..d]).max(g.value(&q[..d]));
            prop_assert!(g.value(&mix) <= bound + 1e-10 * bound.max(1.0));
        }
    }
}
