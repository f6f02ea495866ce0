//! Self-checks of the approximation machinery against brute force.

use simplex_conf_core::approx::{cdf_gap_bound_formula, local_expansion, tv_bound, tv_bound_formula};
use simplex_conf_core::confopt::containment_check;
use simplex_conf_core::domain::in_bulk;
use simplex_conf_core::multinomial::{central_moments, enumerate_support, pmf};
use simplex_conf_core::oracle::{default_ell_grid, sup_cdf_gap, tv_estimate};
use simplex_conf_core::{CountVector, Deviation, ModelParams, QuadratureConfig, SimplexPoint};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Largest absolute difference between enumerated and closed-form
/// moments of every standardized coordinate, the last one included.
pub fn moment_error(n: u64, p: &SimplexPoint) -> CliResult<f64> {
    let probs = p.to_probabilities();
    let mut sums = vec![[0.0f64; 3]; probs.len()];
    for k in enumerate_support(n, p.dim())? {
        let mass = pmf(&k, p)?;
        let delta = Deviation::between(&k, p)?;
        for (acc, &v) in sums.iter_mut().zip(delta.values()) {
            acc[0] += mass * v * v;
            acc[1] += mass * v * v * v;
            acc[2] += mass * v.powi(4);
        }
    }
    let mut worst = 0.0f64;
    for (acc, &pi) in sums.iter().zip(&probs) {
        let m = central_moments(n, pi)?;
        for (got, want) in acc.iter().zip([m.m2, m.m3, m.m4]) {
            worst = worst.max((got - want).abs());
        }
    }
    Ok(worst)
}

pub fn verify_moments(ns: &[u64]) -> CliResult<Vec<Check>> {
    let points = [vec![0.5], vec![0.2, 0.3]];
    let mut checks = Vec::new();
    for w in &points {
        let p = SimplexPoint::new(w.clone())?;
        for &n in ns {
            let err = moment_error(n, &p)?;
            checks.push(Check::new(
                format!("moments n={n} p={w:?}"),
                err <= 1e-10,
                format!("max abs error {err:.3e}"),
            ));
        }
    }
    Ok(checks)
}

/// Violations of the local expansion bound over the bulk and the largest
/// fraction of the bound used.
pub fn expansion_scan(params: &ModelParams) -> CliResult<(usize, usize, f64)> {
    let (mut checked, mut violations, mut slack) = (0, 0, 0.0f64);
    for k in enumerate_support(params.n, params.dim())? {
        if !in_bulk(&k, params) {
            continue;
        }
        let r = local_expansion(&k, params)?;
        checked += 1;
        if !r.holds() {
            violations += 1;
        }
        slack = slack.max(r.slack_used());
    }
    Ok((checked, violations, slack))
}

pub fn verify_expansion(n: u64, tau: f64, p: &SimplexPoint) -> CliResult<Vec<Check>> {
    let params = ModelParams::new(n, p.clone(), tau)?;
    let (checked, violations, slack) = expansion_scan(&params)?;
    Ok(vec![Check::new(
        format!("expansion n={n} tau={tau}"),
        violations == 0 && checked > 0,
        format!("{checked} bulk points, {violations} violations, max slack used {slack:.4}"),
    )])
}

pub fn verify_tv(n: u64, d: usize) -> CliResult<Vec<Check>> {
    let p = SimplexPoint::uniform(d);
    let tau = d as f64 + 1.0;
    let estimate = tv_estimate(&p, n, &QuadratureConfig::default())?;
    let (bound, note) = match tv_bound(n, d, tau) {
        Ok(b) => (b, if b > 1.0 { "bound vacuous (>1)" } else { "bound informative" }),
        Err(_) => (tv_bound_formula(n, d, tau), "outside the proven regime; formula value shown"),
    };
    Ok(vec![Check::new(
        format!("tv n={n} d={d}"),
        estimate <= bound,
        format!("estimate {estimate:.6} <= bound {bound:.4}; {note}"),
    )])
}

pub fn verify_cdf(n: u64, d: usize) -> CliResult<Vec<Check>> {
    let p = SimplexPoint::uniform(d);
    let tau = d as f64 + 1.0;
    let gap = sup_cdf_gap(&p, n, &default_ell_grid(d))?;
    let bound = cdf_gap_bound_formula(n, d, tau);
    let regime = n as f64 >= tau.powi(4);
    Ok(vec![Check::new(
        format!("cdf gap n={n} d={d}"),
        gap <= bound,
        format!(
            "sup gap {gap:.6} <= bound {bound:.4}{}",
            if regime { "" } else { " (n below tau^4; formula value)" }
        ),
    )])
}

pub fn verify_containment(n: u64, alpha: f64, grid: usize) -> CliResult<Vec<Check>> {
    let k = CountVector::from_categories(&[n / 2, n - n / 2])?;
    let report = containment_check(&k, alpha, grid, None)?;
    let detail = format!(
        "eps_n {:.4}, {} of {} grid points in the exact set, minimal empirical eps {:.6}{}",
        report.epsilon_n,
        report.exact_members,
        report.grid_points,
        report.minimal_empirical_epsilon,
        if report.vacuous { ", VacuousSet" } else { "" }
    );
    Ok(vec![Check::new(format!("containment n={n} alpha={alpha}"), report.contained, detail)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        let mut checks = verify_moments(&[2, 5, 10]).unwrap();
        checks.extend(verify_expansion(81, 3.0, &SimplexPoint::uniform(2)).unwrap());
        checks.extend(verify_tv(16, 1).unwrap());
        checks.extend(verify_containment(50, 0.05, 199).unwrap());
        for c in &checks {
            assert!(c.passed, "{}", c.line());
        }
        assert!(checks[checks.len() - 2].detail.contains("bound vacuous (>1)"));
        assert!(checks.last().unwrap().detail.contains("VacuousSet"));
    }

    #[test]
    fn line_format() {
        let c = Check::new("x", false, "why");
        assert_eq!(c.line(), "FAIL x: why");
    }
}
