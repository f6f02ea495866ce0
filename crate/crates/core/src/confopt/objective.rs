//! Strictly convex objectives of the weight vector.
//!
//! Objectives are evaluated on the free coordinates `x = (p_1, ..., p_d)`;
//! the last weight `1 - sum(x)` is implied.

use nalgebra::{DMatrix, DVector};

use crate::domain::SimplexPoint;
use crate::error::{Error, Result};

/// Value, gradient and Hessian with respect to the free coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// A strictly convex function on the open simplex.
pub trait ConvexObjective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> DVector<f64>;

    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;

    /// Infimum and supremum over the open `d`-simplex, if known.
    fn simplex_range(&self, d: usize) -> Option<(f64, f64)>;

    /// A point attaining the simplex infimum, if one exists.
    fn simplex_minimizer(&self, _d: usize) -> Option<SimplexPoint> {
        None
    }

    /// Number of free coordinates this objective requires, if fixed.
    fn required_dim(&self) -> Option<usize> {
        None
    }
}

/// The two built-in objective families.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `sum_{i=1}^{d+1} p_i log p_i`.
    NegEntropy,
    /// `x^T A x` over the free coordinates, `A` symmetric positive definite.
    Quadratic(DMatrix<f64>),
}

/// An objective together with the known category values it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub values: Vec<f64>,
}

impl Objective {
    pub fn neg_entropy(values: Vec<f64>) -> Self {
        Self {
            kind: ObjectiveKind::NegEntropy,
            values,
        }
    }

    /// Quadratic form; `a` must be symmetric (to `1e-12`) and positive
    /// definite.
    pub fn quadratic(a: DMatrix<f64>, values: Vec<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "quadratic form needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * a.amax().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "quadratic form matrix is not symmetric (max asymmetry {asym})"
            )));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::InvalidInput(
                "quadratic form matrix is not positive definite".into(),
            ));
        }
        Ok(Self {
            kind: ObjectiveKind::Quadratic(a),
            values,
        })
    }

    /// The 3x3 quadratic form of the four-category example: values
    /// `(1, 2, 3, 4)`, diagonal `v_i + 1`, off-diagonals `0.5, 0.25, 0.75`.
    pub fn fig2_preset() -> Self {
        let v = [1.0, 2.0, 3.0, 4.0];
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                v[0] + 1.0, 0.5, 0.25,
                0.5, v[1] + 1.0, 0.75,
                0.25, 0.75, v[2] + 1.0,
            ],
        );
        Self::quadratic(a, v.to_vec()).expect("preset matrix is positive definite")
    }
}

fn last_weight(x: &[f64]) -> f64 {
    1.0 - x.iter().sum::<f64>()
}

fn xlogx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

impl ConvexObjective for Objective {
    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ObjectiveKind::NegEntropy => {
                x.iter().map(|&v| xlogx(v)).sum::<f64>() + xlogx(last_weight(x))
            }
            ObjectiveKind::Quadratic(a) => {
                let v = DVector::from_column_slice(x);
                (v.transpose() * a * &v)[(0, 0)]
            }
        }
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        match &self.kind {
            ObjectiveKind::NegEntropy => {
                let ln_last = last_weight(x).ln();
                DVector::from_iterator(x.len(), x.iter().map(|v| v.ln() - ln_last))
            }
            ObjectiveKind::Quadratic(a) => 2.0 * a * DVector::from_column_slice(x),
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            ObjectiveKind::NegEntropy => {
                let inv_last = 1.0 / last_weight(x);
                DMatrix::from_fn(x.len(), x.len(), |i, j| {
                    if i == j {
                        1.0 / x[i] + inv_last
                    } else {
                        inv_last
                    }
                })
            }
            ObjectiveKind::Quadratic(a) => 2.0 * a,
        }
    }

    fn simplex_range(&self, d: usize) -> Option<(f64, f64)> {
        match &self.kind {
            ObjectiveKind::NegEntropy => Some((-((d as f64) + 1.0).ln(), 0.0)),
            // inf at the vertex where all free weights vanish; sup at the
            // best vertex, since the form is convex
            ObjectiveKind::Quadratic(a) => Some((0.0, a.diagonal().max().max(0.0))),
        }
    }

    fn required_dim(&self) -> Option<usize> {
        match &self.kind {
            ObjectiveKind::NegEntropy => None,
            ObjectiveKind::Quadratic(a) => Some(a.nrows()),
        }
    }

    fn simplex_minimizer(&self, d: usize) -> Option<SimplexPoint> {
        match self.kind {
            ObjectiveKind::NegEntropy => Some(SimplexPoint::uniform(d)),
            ObjectiveKind::Quadratic(_) => None,
        }
    }
}

/// Value, gradient and Hessian of `obj` at `p`.
pub fn eval_objective(obj: &dyn ConvexObjective, p: &SimplexPoint) -> ObjectiveEval {
    let x = p.weights();
    ObjectiveEval {
        value: obj.value(x),
        gradient: obj.gradient(x),
        hessian: obj.hessian(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neg_entropy_at_uniform() {
        let obj = Objective::neg_entropy(vec![1.0, 2.0, 3.0]);
        let e = eval_objective(&obj, &SimplexPoint::uniform(2));
        assert!((e.value + 3f64.ln()).abs() < 1e-15);
        assert!(e.gradient.amax() < 1e-15);
        assert!((e.hessian[(0, 0)] - 6.0).abs() < 1e-12);
        assert!((e.hessian[(0, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_validation() {
        let not_sym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Objective::quadratic(not_sym, vec![]).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Objective::quadratic(not_pd, vec![]).is_err());
        let preset = Objective::fig2_preset();
        assert_eq!(preset.required_dim(), Some(3));
        let p = SimplexPoint::new(vec![0.2, 0.3, 0.15]).unwrap();
        // 2(.04) + 3(.09) + 4(.0225) + 2(.5)(.06) + 2(.25)(.03) + 2(.75)(.045)
        let expected = 0.08 + 0.27 + 0.09 + 0.06 + 0.015 + 0.0675;
        assert!((eval_objective(&preset, &p).value - expected).abs() < 1e-14);
    }

    fn interior(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..1.0, d + 1).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            raw[..raw.len() - 1].iter().map(|r| r / total).collect()
        })
    }

    proptest! {
        #[test]
        fn gradients_match_central_differences(x in (1usize..=4).prop_flat_map(interior)) {
            let d = x.len();
            let a = DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
            let objectives = [
                Objective::neg_entropy(vec![]),
                Objective::quadratic(a, vec![]).unwrap(),
            ];
            let h = 1e-6;
            for obj in &objectives {
                let g = obj.gradient(&x);
                let hess = obj.hessian(&x);
                for j in 0..d {
                    let mut up = x.clone();
                    let mut down = x.clone();
                    up[j] += h;
                    down[j] -= h;
                    let fd = (obj.value(&up) - obj.value(&down)) / (2.0 * h);
                    prop_assert!((fd - g[j]).abs() < 1e-6, "grad {j}: {fd} vs {}", g[j]);
                    let gu = obj.gradient(&up);
                    let gd = obj.gradient(&down);
                    for i in 0..d {
                        let fd2 = (gu[i] - gd[i]) / (2.0 * h);
                        prop_assert!((fd2 - hess[(i, j)]).abs() < 1e-4 * hess[(i, j)].abs().max(1.0));
                    }
                }
            }
        }
    }
}
