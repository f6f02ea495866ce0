//! Confidence bounds for observed counts.

use serde::Serialize;
use simplex_conf_core::confopt::{confidence_bounds, BoundMethod};
use simplex_conf_core::domain::in_p_tau;
use simplex_conf_core::{ConfidenceSpec, CountVector, EpsilonMode, Objective, Observed};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct BoundsRequest {
    /// All `d + 1` category counts.
    pub counts: Vec<u64>,
    pub objective: Objective,
    pub alpha: f64,
    pub epsilon_mode: EpsilonMode,
    pub tau: Option<f64>,
    /// Add one half to every count before fitting.
    pub smooth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsDiagnostics {
    pub method: &'static str,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub boundary_residual: f64,
    pub multiple_optima: bool,
    pub vacuous_set: bool,
    pub binomial_interval: Option<[f64; 2]>,
    pub smoothed: bool,
    pub warnings: Vec<String>,
}

/// JSON payload of `simplex-conf bounds`; keys are emitted in field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// Full probability vectors, last category included.
    pub argmin: Option<Vec<f64>>,
    pub argmax: Option<Vec<f64>>,
    pub alpha: f64,
    pub epsilon: f64,
    pub alpha_prime: f64,
    pub threshold_l: Option<f64>,
    pub tau: f64,
    pub values: Vec<f64>,
    pub diagnostics: BoundsDiagnostics,
}

pub fn compute_bounds(req: &BoundsRequest) -> CliResult<BoundsReport> {
    if req.counts.len() < 2 {
        return Err(CliError::Parse("need at least two categories".into()));
    }
    let d = req.counts.len() - 1;
    let values = &req.objective.values;
    if !values.is_empty() && values.len() != d + 1 {
        return Err(CliError::Parse(format!(
            "{} values given for {} categories",
            values.len(),
            d + 1
        )));
    }
    let k = CountVector::from_categories(&req.counts)?;
    let observed = if req.smooth { Observed::smoothed(&k) } else { Observed::from_counts(&k)? };
    let tau = req.tau.unwrap_or(d as f64 + 1.0);
    let mut warnings = Vec::new();
    if !in_p_tau(&observed.center(), tau) {
        warnings.push(format!("observed proportions have a weight below 1/tau = {}", 1.0 / tau));
    }
    let spec = ConfidenceSpec::new(req.alpha, req.epsilon_mode, Some(tau))?;
    let result = confidence_bounds(&observed, &req.objective, &spec)?;
    let diag = &result.diagnostics;
    Ok(BoundsReport {
        lambda_lower: result.lambda_lower,
        lambda_upper: result.lambda_upper,
        argmin: result.argmin.as_ref().map(|p| p.to_probabilities()),
        argmax: result.argmax.as_ref().map(|p| p.to_probabilities()),
        alpha: result.alpha,
        epsilon: result.epsilon,
        alpha_prime: result.alpha_prime,
        threshold_l: result.threshold_l,
        tau,
        values: values.clone(),
        diagnostics: BoundsDiagnostics {
            method: match diag.method {
                BoundMethod::ExactBinomial => "exact_binomial",
                BoundMethod::GaussianSuperset => "gaussian_superset",
            },
            iterations: diag.iterations,
            kkt_residual: diag.kkt_residual,
            boundary_residual: diag.boundary_residual,
            multiple_optima: diag.multiple_optima,
            vacuous_set: diag.vacuous,
            binomial_interval: diag.binomial_interval.map(|(lo, hi)| [lo, hi]),
            smoothed: req.smooth,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(counts: &[u64]) -> BoundsRequest {
        BoundsRequest {
            counts: counts.to_vec(),
            objective: Objective::neg_entropy(vec![]),
            alpha: 0.05,
            epsilon_mode: EpsilonMode::Practical,
            tau: None,
            smooth: false,
        }
    }

    #[test]
    fn zero_counts_need_smoothing() {
        assert!(matches!(compute_bounds(&request(&[0, 30, 70])), Err(CliError::ZeroCount(_))));
        let mut req = request(&[0, 30, 70]);
        req.smooth = true;
        let report = compute_bounds(&req).unwrap();
        assert!(report.diagnostics.smoothed);
        assert!(!report.diagnostics.warnings.is_empty());
        assert!(report.lambda_lower < report.lambda_upper);
    }

    #[test]
    fn two_categories_use_the_exact_path() {
        let report = compute_bounds(&request(&[50, 50])).unwrap();
        assert_eq!(report.diagnostics.method, "exact_binomial");
        let [lo, hi] = report.diagnostics.binomial_interval.unwrap();
        assert!((lo - 0.398_321_129_503_301_06).abs() < 1e-9);
        assert!((hi - 0.601_678_870_496_698_9).abs() < 1e-9);
    }

    #[test]
    fn value_count_must_match() {
        let mut req = request(&[20, 30, 50]);
        req.objective.values = vec![1.0, 2.0];
        assert!(matches!(compute_bounds(&req), Err(CliError::Parse(_))));
    }
}
