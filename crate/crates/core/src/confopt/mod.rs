//! Confidence sets for the weight vector and the extreme values of a
//! strictly convex objective over them.
//!
//! The exact set collects every `p` under which the observed counts are
//! not among the least likely outcomes of total mass `alpha`. Its Gaussian
//! relaxation is the Pearson sublevel set
//! `{p : chi2_cdf(d, g(p)) <= 1 - alpha'}` with `alpha' = alpha - eps`.

mod binomial;
mod boundary;
mod constraint;
mod interior;
mod objective;

use rayon::prelude::*;

pub use binomial::{binomial_exact_interval, binomial_lower_tail, binomial_upper_tail};
pub use boundary::AscentConfig;
pub use constraint::PearsonConstraint;
pub use interior::BarrierConfig;
pub use objective::{eval_objective, ConvexObjective, Objective, ObjectiveEval, ObjectiveKind};

use crate::approx::epsilon_n;
use crate::domain::{CountVector, SimplexPoint};
use crate::error::{Error, Result};
use crate::multinomial::{enumerate_support, log_pmf};
use crate::specfun::{chi2_cdf, chi2_quantile};

/// How the level is adjusted before building the Gaussian superset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsilonMode {
    /// `eps = 0`.
    #[default]
    Practical,
    /// `eps = epsilon_n(n, d, tau)`.
    Theoretical,
}

/// Nominal level and level adjustment of a confidence set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceSpec {
    pub alpha: f64,
    pub epsilon_mode: EpsilonMode,
    /// `tau` for the theoretical adjustment; defaults to `d + 1`.
    pub tau: Option<f64>,
}

impl ConfidenceSpec {
    pub fn practical(alpha: f64) -> Result<Self> {
        Self::new(alpha, EpsilonMode::Practical, None)
    }

    pub fn theoretical(alpha: f64, tau: Option<f64>) -> Result<Self> {
        Self::new(alpha, EpsilonMode::Theoretical, tau)
    }

    pub fn new(alpha: f64, epsilon_mode: EpsilonMode, tau: Option<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha, epsilon_mode, tau })
    }

    /// Level adjustment for sample size `n` in dimension `d`.
    pub fn epsilon(&self, n: u64, d: usize) -> Result<f64> {
        match self.epsilon_mode {
            EpsilonMode::Practical => Ok(0.0),
            EpsilonMode::Theoretical => {
                epsilon_n(n, d, self.tau.unwrap_or(d as f64 + 1.0))
            }
        }
    }

    pub fn alpha_prime(&self, n: u64, d: usize) -> Result<f64> {
        Ok(self.alpha - self.epsilon(n, d)?)
    }
}

/// Observed proportions with their sample size.
///
/// Built either from integer counts or from positive pseudo-counts such as
/// counts plus one half.
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    n: f64,
    proportions: Vec<f64>,
    counts: Option<CountVector>,
}

impl Observed {
    /// Rejects any zero category.
    pub fn from_counts(k: &CountVector) -> Result<Self> {
        if let Some(category) = k.first_zero() {
            return Err(Error::ZeroCount { category });
        }
        Ok(Self {
            n: k.total() as f64,
            proportions: k.proportions(),
            counts: Some(k.clone()),
        })
    }

    /// All `d + 1` pseudo-counts, each positive and finite.
    pub fn from_pseudo_counts(all: &[f64]) -> Result<Self> {
        if all.len() < 2 {
            return Err(Error::InvalidInput("need at least two categories".into()));
        }
        if let Some(i) = all.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::ZeroCount { category: i });
        }
        let n: f64 = all.iter().sum();
        Ok(Self {
            n,
            proportions: all.iter().map(|c| c / n).collect(),
            counts: None,
        })
    }

    /// Adds one half to every category.
    pub fn smoothed(k: &CountVector) -> Self {
        let pseudo: Vec<f64> = k.categories().map(|c| c as f64 + 0.5).collect();
        Self::from_pseudo_counts(&pseudo).expect("smoothed counts are positive")
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.proportions.len() - 1
    }

    /// All `d + 1` proportions.
    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    /// The integer counts, unless built from pseudo-counts.
    pub fn counts(&self) -> Option<&CountVector> {
        self.counts.as_ref()
    }

    pub fn center(&self) -> SimplexPoint {
        SimplexPoint::from_probabilities(&self.proportions).expect("positive proportions")
    }

    pub fn constraint(&self) -> PearsonConstraint {
        PearsonConstraint::new(self.n, self.proportions.clone())
    }

    /// Sample size rounded for the level adjustment.
    fn size(&self) -> u64 {
        self.n.round() as u64
    }
}

impl TryFrom<&CountVector> for Observed {
    type Error = Error;

    fn try_from(k: &CountVector) -> Result<Self> {
        Self::from_counts(k)
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Tie tolerance on the log-pmf scale for the exact set.
fn log_tie_tol(log_p: f64) -> f64 {
    1e-10 * (1.0 + log_p.abs())
}

/// Membership in the exact set: the mass of outcomes at least as likely
/// as `observed` under `p` is at most `1 - alpha`.
pub fn exact_set_member(p: &SimplexPoint, observed: &CountVector, alpha: f64) -> Result<bool> {
    check_dims(observed.dim(), p.dim())?;
    if let Some(category) = observed.first_zero() {
        return Err(Error::ZeroCount { category });
    }
    let reference = log_pmf(observed, p)?;
    let cutoff = reference - log_tie_tol(reference);
    let mut mass = 0.0;
    for k in enumerate_support(observed.total(), p.dim())? {
        let lp = log_pmf(&k, p)?;
        if lp >= cutoff {
            mass += lp.exp();
        }
    }
    Ok(mass <= 1.0 - alpha)
}

/// Result of a Gaussian-set membership query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    /// The adjusted level is not positive, so the set is the whole simplex.
    pub vacuous: bool,
}

/// Membership in the Gaussian superset at adjusted level `alpha_prime`.
pub fn gaussian_set_member(
    p: &SimplexPoint,
    observed: &Observed,
    alpha_prime: f64,
) -> Result<Membership> {
    check_dims(observed.dim(), p.dim())?;
    if alpha_prime <= 0.0 {
        return Ok(Membership { member: true, vacuous: true });
    }
    let stat = observed.constraint().value(p.weights());
    let member = chi2_cdf(p.dim() as u32, stat)? <= 1.0 - alpha_prime;
    Ok(Membership { member, vacuous: false })
}

/// Pearson threshold `L` of the Gaussian superset.
pub fn threshold_l(d: usize, alpha_prime: f64) -> Result<f64> {
    if !(alpha_prime > 0.0 && alpha_prime < 1.0) {
        return Err(Error::Domain(format!("alpha' must lie in (0, 1), got {alpha_prime}")));
    }
    chi2_quantile(d as u32, 1.0 - alpha_prime)
}

/// One extreme value of the objective over the superset.
#[derive(Debug, Clone, PartialEq)]
pub struct Extremum {
    pub value: f64,
    /// `None` when the extreme value is only approached.
    pub point: Option<SimplexPoint>,
    pub iterations: usize,
    /// KKT residual for a minimum, `|g - L|` for a maximum.
    pub residual: f64,
    pub multiple_optima: bool,
    pub vacuous: bool,
}

/// Prepared problem: constraint, threshold and level bookkeeping.
struct Problem {
    g: PearsonConstraint,
    /// `None` when the superset is the whole simplex.
    threshold: Option<f64>,
    epsilon: f64,
    alpha_prime: f64,
}

fn prepare(obj: &dyn ConvexObjective, observed: &Observed, spec: &ConfidenceSpec) -> Result<Problem> {
    let d = observed.dim();
    if let Some(required) = obj.required_dim() {
        check_dims(required, d)?;
    }
    let epsilon = spec.epsilon(observed.size(), d)?;
    let alpha_prime = spec.alpha - epsilon;
    let threshold = if alpha_prime > 0.0 { Some(threshold_l(d, alpha_prime)?) } else { None };
    Ok(Problem { g: observed.constraint(), threshold, epsilon, alpha_prime })
}

fn vacuous_range(obj: &dyn ConvexObjective, d: usize) -> Result<(f64, f64)> {
    obj.simplex_range(d).ok_or_else(|| {
        Error::InvalidInput("objective has no known range over the simplex".into())
    })
}

fn point(x: Vec<f64>) -> Result<SimplexPoint> {
    SimplexPoint::new(x)
}

fn minimize_problem(obj: &dyn ConvexObjective, problem: &Problem) -> Result<Extremum> {
    let d = problem.g.dim();
    let Some(threshold) = problem.threshold else {
        let (inf, _) = vacuous_range(obj, d)?;
        return Ok(Extremum {
            value: inf,
            point: obj.simplex_minimizer(d),
            iterations: 0,
            residual: 0.0,
            multiple_optima: false,
            vacuous: true,
        });
    };
    let out = interior::barrier_minimize(obj, &problem.g, threshold, &BarrierConfig::default())?;
    Ok(Extremum {
        value: out.value,
        point: Some(point(out.x)?),
        iterations: out.iterations,
        residual: out.kkt_residual,
        multiple_optima: false,
        vacuous: false,
    })
}

fn maximize_problem(obj: &dyn ConvexObjective, problem: &Problem) -> Result<Extremum> {
    let d = problem.g.dim();
    let Some(threshold) = problem.threshold else {
        let (_, sup) = vacuous_range(obj, d)?;
        return Ok(Extremum {
            value: sup,
            point: None,
            iterations: 0,
            residual: 0.0,
            multiple_optima: false,
            vacuous: true,
        });
    };
    let out = boundary::boundary_maximize(obj, &problem.g, threshold, &AscentConfig::default())?;
    Ok(Extremum {
        value: out.value,
        point: Some(point(out.x)?),
        iterations: out.iterations,
        residual: out.boundary_residual,
        multiple_optima: out.multiple_optima,
        vacuous: false,
    })
}

/// Minimum of `obj` over the Gaussian superset.
pub fn minimize_over_set(
    obj: &dyn ConvexObjective,
    observed: &Observed,
    spec: &ConfidenceSpec,
) -> Result<Extremum> {
    minimize_problem(obj, &prepare(obj, observed, spec)?)
}

/// Maximum of `obj` over the Gaussian superset.
pub fn maximize_over_set(
    obj: &dyn ConvexObjective,
    observed: &Observed,
    spec: &ConfidenceSpec,
) -> Result<Extremum> {
    maximize_problem(obj, &prepare(obj, observed, spec)?)
}

/// Which confidence set produced a [`BoundResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    ExactBinomial,
    GaussianSuperset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundDiagnostics {
    pub method: BoundMethod,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub boundary_residual: f64,
    pub multiple_optima: bool,
    pub vacuous: bool,
    pub binomial_interval: Option<(f64, f64)>,
}

/// Confidence interval `[lambda_lower, lambda_upper]` for the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub argmin: Option<SimplexPoint>,
    pub argmax: Option<SimplexPoint>,
    pub threshold_l: Option<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    pub alpha_prime: f64,
    pub diagnostics: BoundDiagnostics,
}

/// Bounds over the Gaussian superset, in any dimension.
pub fn gaussian_confidence_bounds(
    observed: &Observed,
    obj: &dyn ConvexObjective,
    spec: &ConfidenceSpec,
) -> Result<BoundResult> {
    let problem = prepare(obj, observed, spec)?;
    let (low, high) = rayon::join(
        || minimize_problem(obj, &problem),
        || maximize_problem(obj, &problem),
    );
    let (low, high) = (low?, high?);
    Ok(BoundResult {
        lambda_lower: low.value,
        lambda_upper: high.value,
        argmin: low.point,
        argmax: high.point,
        threshold_l: problem.threshold,
        alpha: spec.alpha,
        epsilon: problem.epsilon,
        alpha_prime: problem.alpha_prime,
        diagnostics: BoundDiagnostics {
            method: BoundMethod::GaussianSuperset,
            iterations: low.iterations + high.iterations,
            kkt_residual: low.residual,
            boundary_residual: high.residual,
            multiple_optima: high.multiple_optima,
            vacuous: problem.threshold.is_none(),
            binomial_interval: None,
        },
    })
}

/// Minimizer of a strictly convex function of one weight on `[lo, hi]`.
fn interval_argmin(obj: &dyn ConvexObjective, lo: f64, hi: f64) -> (f64, f64) {
    let slope = |p: f64| obj.gradient(&[p])[0];
    if slope(lo) >= 0.0 {
        return (lo, 0.0);
    }
    if slope(hi) <= 0.0 {
        return (hi, 0.0);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 4.0 * f64::EPSILON * b {
        let mid = 0.5 * (a + b);
        if slope(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x = 0.5 * (a + b);
    (x, slope(x).abs())
}

fn binomial_bounds(
    k: &CountVector,
    obj: &dyn ConvexObjective,
    spec: &ConfidenceSpec,
) -> Result<BoundResult> {
    if let Some(required) = obj.required_dim() {
        check_dims(required, 1)?;
    }
    let (lo, hi) = binomial_exact_interval(k.total(), k.count(0), spec.alpha)?;
    let (x_min, kkt) = interval_argmin(obj, lo, hi);
    let (f_lo, f_hi) = (obj.value(&[lo]), obj.value(&[hi]));
    let x_max = if f_hi > f_lo { hi } else { lo };
    Ok(BoundResult {
        lambda_lower: obj.value(&[x_min]),
        lambda_upper: f_lo.max(f_hi),
        argmin: Some(point(vec![x_min])?),
        argmax: Some(point(vec![x_max])?),
        threshold_l: None,
        alpha: spec.alpha,
        epsilon: 0.0,
        alpha_prime: spec.alpha,
        diagnostics: BoundDiagnostics {
            method: BoundMethod::ExactBinomial,
            iterations: 0,
            kkt_residual: kkt,
            boundary_residual: 0.0,
            multiple_optima: (f_lo - f_hi).abs() <= 1e-8,
            vacuous: false,
            binomial_interval: Some((lo, hi)),
        },
    })
}

/// Confidence bounds for `obj`: the exact binomial interval when there are
/// two categories with integer counts, the Gaussian superset otherwise.
pub fn confidence_bounds(
    observed: &Observed,
    obj: &dyn ConvexObjective,
    spec: &ConfidenceSpec,
) -> Result<BoundResult> {
    match observed.counts() {
        Some(k) if k.dim() == 1 => binomial_bounds(k, obj, spec),
        _ => gaussian_confidence_bounds(observed, obj, spec),
    }
}

/// Outcome of scanning a grid for exact-set points outside the superset.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub alpha: f64,
    pub epsilon_n: f64,
    pub alpha_prime: f64,
    /// `alpha' <= 0`: the superset is the whole simplex.
    pub vacuous: bool,
    /// Every exact-set grid point lies in the superset at level `alpha'`.
    pub contained: bool,
    pub grid_points: usize,
    pub exact_members: usize,
    /// Smallest `eps` for which containment holds on the grid.
    pub minimal_empirical_epsilon: f64,
}

fn interior_grid(d: usize, resolution: usize) -> Result<Vec<SimplexPoint>> {
    let step = 1.0 / (resolution as f64 + 1.0);
    match d {
        1 => (1..=resolution).map(|i| point(vec![i as f64 * step])).collect(),
        2 => (1..=resolution)
            .flat_map(|i| (1..=resolution - i).map(move |j| (i, j)))
            .map(|(i, j)| point(vec![i as f64 * step, j as f64 * step]))
            .collect(),
        _ => Err(Error::InvalidInput(format!("containment grid supports d <= 2, got {d}"))),
    }
}

/// Checks on a uniform interior grid that the exact set at level `alpha`
/// lies inside the Gaussian superset at level `alpha - epsilon_n`.
pub fn containment_check(
    observed: &CountVector,
    alpha: f64,
    grid_resolution: usize,
    tau: Option<f64>,
) -> Result<ContainmentReport> {
    let spec = ConfidenceSpec::theoretical(alpha, tau)?;
    let obs = Observed::from_counts(observed)?;
    let d = obs.dim();
    let eps = spec.epsilon(observed.total(), d)?;
    let alpha_prime = alpha - eps;
    let grid = interior_grid(d, grid_resolution)?;
    let g = obs.constraint();
    let member_cdfs = grid
        .par_iter()
        .map(|p| {
            if exact_set_member(p, observed, alpha)? {
                chi2_cdf(d as u32, g.value(p.weights())).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let members: Vec<f64> = member_cdfs.into_iter().flatten().collect();
    let worst = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let minimal = (worst - (1.0 - alpha)).max(0.0);
    let vacuous = alpha_prime <= 0.0;
    Ok(ContainmentReport {
        alpha,
        epsilon_n: eps,
        alpha_prime,
        vacuous,
        contained: vacuous || minimal <= eps,
        grid_points: grid.len(),
        exact_members: members.len(),
        minimal_empirical_epsilon: minimal,
    })
}
