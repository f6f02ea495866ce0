//! Non-asymptotic approximation layer: the local expansion of the multinomial
//! log-probability around its Gaussian analogue, the total-variation,
//! CDF-gap and confidence-superset bounds, and the quantile-coupling
//! construction.
//!
//! Every bound here is only established for `tau >= d + 1` and `n >= tau^4`;
//! the checked evaluators refuse to extrapolate outside that regime. The
//! `*_formula` variants evaluate the same closed forms without the check.

use crate::domain::{check_regime, in_bulk, in_p_tau, CountVector, Deviation, ModelParams};
use crate::error::{Error, Result};
use crate::gaussian::{covariance_bundle, log_normal_density};
use crate::multinomial::log_pmf;
use crate::oracle::StepCdf;
use crate::specfun::{chi2_cdf, chi2_pdf};

const TV_CONSTANT: f64 = 8.03;
const CDF_GAP_CONSTANT: f64 = 1.26;
const EPSILON_CONSTANT: f64 = 194.96;

/// Both sides of the local expansion at one lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionResult {
    /// `log{P(k) / (n^{-d/2} phi(delta))}`.
    pub exact_log_ratio: f64,
    /// `n^{-1/2} sum_i (delta_i^3 / (6 p_i^2) - delta_i / (2 p_i))`.
    pub main_term: f64,
    /// Upper bound on the remainder `|exact_log_ratio - main_term|`.
    pub error_bound: f64,
}

impl ExpansionResult {
    pub fn remainder(&self) -> f64 {
        self.exact_log_ratio - self.main_term
    }

    /// Whether the remainder respects its bound.
    pub fn holds(&self) -> bool {
        self.remainder().abs() <= self.error_bound
    }

    /// Fraction of the bound used by the remainder.
    pub fn slack_used(&self) -> f64 {
        self.remainder().abs() / self.error_bound
    }
}

fn check_expansion_preconditions(k: &CountVector, params: &ModelParams) -> Result<()> {
    params.check_regime()?;
    if k.total() != params.n {
        return Err(Error::InvalidInput(format!(
            "count total {} differs from n = {}",
            k.total(),
            params.n
        )));
    }
    if !in_p_tau(&params.p, params.tau) {
        return Err(Error::OutOfPTau { tau: params.tau });
    }
    if !in_bulk(k, params) {
        return Err(Error::OutOfBulk);
    }
    Ok(())
}

/// Local expansion of the multinomial pmf at a bulk point `k`.
pub fn local_expansion(k: &CountVector, params: &ModelParams) -> Result<ExpansionResult> {
    check_expansion_preconditions(k, params)?;
    let delta = Deviation::between(k, &params.p)?;
    let bundle = covariance_bundle(&params.p);
    let n = params.n as f64;
    let d = params.dim() as f64;

    let log_gaussian = -0.5 * d * n.ln() + log_normal_density(&delta, &bundle)?;
    let exact_log_ratio = log_pmf(k, &params.p)? - log_gaussian;

    let mut main = 0.0;
    let mut bound = 0.0;
    for (&di, pi) in delta.values().iter().zip(params.p.probabilities()) {
        main += di.powi(3) / (6.0 * pi * pi) - di / (2.0 * pi);
        bound += 21.0 * di.powi(4) / pi.powi(3) + 10.0 * di * di / (pi * pi) + 2.0 * params.tau / 3.0;
    }
    Ok(ExpansionResult {
        exact_log_ratio,
        main_term: main / n.sqrt(),
        error_bound: bound / n,
    })
}

/// Local expansion for a one-to-one transform `y = h(k)`: the caller passes
/// `k = h^{-1}(y)` and `log |det dh/dx|` at that point. Only the exact side
/// changes; the main term and bound depend on `k` alone.
pub fn transformed_local_expansion(
    k: &CountVector,
    log_abs_jac_det: f64,
    params: &ModelParams,
) -> Result<ExpansionResult> {
    if !log_abs_jac_det.is_finite() {
        return Err(Error::Domain(format!(
            "Jacobian log-determinant must be finite, got {log_abs_jac_det}"
        )));
    }
    let mut result = local_expansion(k, params)?;
    result.exact_log_ratio += log_abs_jac_det;
    Ok(result)
}

/// `8.03 tau^{3/2} (d+1)^{1/2} / n^{1/2}` without regime checks.
pub fn tv_bound_formula(n: u64, d: usize, tau: f64) -> f64 {
    TV_CONSTANT * tau.powf(1.5) * (d as f64 + 1.0).sqrt() / (n as f64).sqrt()
}

/// Shared shape `tau^3 (d+1) (log n)^{3/2} / n^{1/2}` of the CDF-gap and
/// confidence-superset bounds.
fn log_shape(n: u64, d: usize, tau: f64) -> f64 {
    let nf = n as f64;
    tau.powi(3) * (d as f64 + 1.0) * nf.ln().powf(1.5) / nf.sqrt()
}

pub fn cdf_gap_bound_formula(n: u64, d: usize, tau: f64) -> f64 {
    CDF_GAP_CONSTANT * log_shape(n, d, tau)
}

pub fn epsilon_n_formula(n: u64, d: usize, tau: f64) -> f64 {
    EPSILON_CONSTANT * log_shape(n, d, tau)
}

/// Total-variation bound between the jittered multinomial and its Gaussian
/// analogue, uniform over `P_tau`.
pub fn tv_bound(n: u64, d: usize, tau: f64) -> Result<f64> {
    check_regime(n as f64, d, tau)?;
    Ok(tv_bound_formula(n, d, tau))
}

/// Bound on `sup_ell |P(Pearson <= ell) - P(chi2_d <= ell)|`.
pub fn cdf_gap_bound(n: u64, d: usize, tau: f64) -> Result<f64> {
    check_regime(n as f64, d, tau)?;
    Ok(cdf_gap_bound_formula(n, d, tau))
}

/// Confidence price `eps_n` for replacing the exact set by the Gaussian
/// superset.
pub fn epsilon_n(n: u64, d: usize, tau: f64) -> Result<f64> {
    check_regime(n as f64, d, tau)?;
    Ok(epsilon_n_formula(n, d, tau))
}

/// Parameters of the quantile coupling between the Pearson statistic and
/// its chi-square analogue.
#[derive(Debug, Clone)]
pub struct CouplingContext {
    pub n: u64,
    pub d: u32,
    pub tau: f64,
    /// Exact CDF of the Pearson statistic, when it has been enumerated.
    pub quantile_fn: Option<StepCdf>,
}

impl CouplingContext {
    pub fn new(n: u64, d: u32, tau: f64) -> Result<Self> {
        if d == 0 || n < 2 {
            return Err(Error::InvalidInput("coupling needs d >= 1 and n >= 2".into()));
        }
        if !(tau >= d as f64 + 1.0) {
            return Err(Error::RegimeViolation(format!("tau = {tau} is below d + 1")));
        }
        Ok(Self {
            n,
            d,
            tau,
            quantile_fn: None,
        })
    }

    pub fn with_quantile_fn(mut self, cdf: StepCdf) -> Self {
        self.quantile_fn = Some(cdf);
        self
    }

    /// `1.26 tau^3 (d+1) (log n)^{3/2} / n^{1/2}`.
    pub fn gap(&self) -> f64 {
        cdf_gap_bound_formula(self.n, self.d as usize, self.tau)
    }

    /// Lower end `2(d/2 - 1)` of the region where the chi-square density
    /// decreases, clamped at zero.
    pub fn region_start(&self) -> f64 {
        (self.d as f64 - 2.0).max(0.0)
    }

    fn c(&self, ell: f64) -> f64 {
        if ell <= 0.0 && self.d == 1 {
            return 0.0;
        }
        match chi2_pdf(self.d, ell) {
            Ok(g) if g > 0.0 => ell - self.gap() / g,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `Xi = F*(G(y))` for the enumerated exact CDF `F`, if available.
    pub fn xi(&self, y_stat: f64) -> Option<Result<f64>> {
        let cdf = self.quantile_fn.as_ref()?;
        Some(chi2_cdf(self.d, y_stat).and_then(|q| cdf.quantile(q)))
    }
}

/// `c(ell) = ell - gap / G'(ell)` with `G'` the chi-square density.
pub fn coupling_c(ell: f64, n: u64, d: u32, tau: f64) -> Result<f64> {
    if !(ell > 0.0) {
        return Err(Error::Domain(format!("coupling_c needs ell > 0, got {ell}")));
    }
    let g = chi2_pdf(d, ell)?;
    if g <= 0.0 {
        return Err(Error::Domain(format!("chi-square density underflows at {ell}")));
    }
    Ok(ell - cdf_gap_bound_formula(n, d as usize, tau) / g)
}

/// Outcome of the quantile-coupling upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingOutcome {
    /// `root` solves `y = c(root)`; `xi_bound = y + gap / G'(root)`.
    Feasible { root: f64, xi_bound: f64 },
    /// `sup c < y`: the event on which the coupling holds is empty.
    InfeasibleEventA { sup_c: f64 },
}

const SLOPE_STEP: f64 = 1e-4;

/// Pathwise upper bound on `Xi` given the Gaussian statistic `y_stat`.
pub fn coupling_upper(y_stat: f64, ctx: &CouplingContext) -> Result<CouplingOutcome> {
    let start = ctx.region_start();
    if !(y_stat >= start) || !y_stat.is_finite() {
        return Err(Error::Domain(format!(
            "coupling needs y >= {start}, got {y_stat}"
        )));
    }
    let (peak, sup_c) = locate_sup_c(ctx)?;
    if sup_c < y_stat {
        return Ok(CouplingOutcome::InfeasibleEventA { sup_c });
    }
    // c(ell) < ell, so the root lies in (y, peak].
    let mut lo = y_stat.max(1e-300);
    let mut hi = peak;
    if ctx.c(lo) >= y_stat || hi <= lo {
        return Err(Error::Convergence {
            method: "coupling root bracketing",
            iterations: 0,
        });
    }
    let mut iterations = 0;
    while iterations < 400 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ctx.c(mid) < y_stat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = hi;
    let g = chi2_pdf(ctx.d, root)?;
    Ok(CouplingOutcome::Feasible {
        root,
        xi_bound: y_stat + ctx.gap() / g,
    })
}

/// Maximizer and maximum of `c` over `[region_start, inf)`.
///
/// Beyond the region start `c` is concave (for `d = 1` only beyond
/// `sqrt(2) - 1`), so the peak is found by doubling a bracket until the
/// finite-difference slope turns negative and refining by golden section.
fn locate_sup_c(ctx: &CouplingContext) -> Result<(f64, f64)> {
    let concave_from = if ctx.d == 1 { 0.5 } else { ctx.region_start() };
    let slope = |ell: f64| {
        let lo = (ell - SLOPE_STEP).max(0.0);
        let hi = ell + SLOPE_STEP;
        (ctx.c(hi) - ctx.c(lo)) / (hi - lo)
    };

    let (peak, mut best) = if !(slope(concave_from) > 0.0) {
        (concave_from, ctx.c(concave_from))
    } else {
        let mut a = concave_from;
        let mut width = 1.0;
        let mut b = a + width;
        let mut doublings = 0;
        while slope(b) > 0.0 {
            a = b;
            width *= 2.0;
            b = a + width;
            doublings += 1;
            if doublings > 60 {
                return Err(Error::Convergence {
                    method: "coupling sup bracketing",
                    iterations: doublings,
                });
            }
        }
        let peak = golden_section_max(|x| ctx.c(x), a, b, 200);
        (peak, ctx.c(peak))
    };
    let mut peak = peak;

    if ctx.d == 1 {
        // c is not concave near the origin for d = 1; scan that stretch.
        for i in 1..=500 {
            let ell = concave_from * i as f64 / 500.0;
            let v = ctx.c(ell);
            if v > best {
                best = v;
                peak = ell;
            }
        }
    }
    Ok((peak, best))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
        if b - a < 1e-13 * b.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}
