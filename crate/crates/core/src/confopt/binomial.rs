//! Exact equal-tailed binomial interval by tail inversion.

use crate::domain::{CountVector, SimplexPoint};
use crate::error::{Error, Result};
use crate::multinomial::log_pmf;

const BISECTION_TOL: f64 = 1e-12;

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn binomial_log_pmf(n: u64, j: u64, p: f64) -> Result<f64> {
    log_pmf(&CountVector::new(vec![j], n)?, &SimplexPoint::new(vec![p])?)
}

/// `P(X <= k)` for `X ~ Bin(n, p)`, `0 < p < 1`.
pub fn binomial_lower_tail(n: u64, k: u64, p: f64) -> Result<f64> {
    let logs = (0..=k.min(n)).map(|j| binomial_log_pmf(n, j, p)).collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(logs.into_iter()).exp().min(1.0))
}

/// `P(X >= k)` for `X ~ Bin(n, p)`, `0 < p < 1`.
pub fn binomial_upper_tail(n: u64, k: u64, p: f64) -> Result<f64> {
    let logs = (k..=n).map(|j| binomial_log_pmf(n, j, p)).collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(logs.into_iter()).exp().min(1.0))
}

/// Bisection for an increasing function crossing `target` on `(0, 1)`.
fn bisect_increasing(mut f: impl FnMut(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equal-tailed exact interval for a binomial proportion: `p_hi` solves
/// `P(X <= k) = alpha/2` and `p_lo` solves `P(X >= k) = alpha/2`.
pub fn binomial_exact_interval(n: u64, k: u64, alpha: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::Domain(format!("binomial interval needs 0 <= k <= n, n > 0; got k={k}, n={n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let half = alpha / 2.0;
    let lo = if k == 0 {
        0.0
    } else {
        bisect_increasing(|p| binomial_upper_tail(n, k, p), half)?
    };
    let hi = if k == n {
        1.0
    } else {
        bisect_increasing(|p| binomial_lower_tail(n, k, p).map(|v| -v), -half)?
    };
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Binomial, DiscreteCDF};

    #[test]
    fn matches_reference_interval() {
        let (lo, hi) = binomial_exact_interval(100, 50, 0.05).unwrap();
        assert!((lo - 0.398_321_129_503_301_06).abs() < 1e-9, "{lo}");
        assert!((hi - 0.601_678_870_496_698_9).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn edge_counts() {
        let (lo, hi) = binomial_exact_interval(20, 0, 0.05).unwrap();
        assert_eq!(lo, 0.0);
        // (1 - p)^20 = 0.025
        assert!((hi - (1.0 - 0.025f64.powf(1.0 / 20.0))).abs() < 1e-10);
        let (lo, hi) = binomial_exact_interval(20, 20, 0.05).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - 0.025f64.powf(1.0 / 20.0)).abs() < 1e-10);
        assert!(binomial_exact_interval(5, 6, 0.05).is_err());
        assert!(binomial_exact_interval(5, 2, 1.0).is_err());
    }

    #[test]
    fn tails_match_statrs() {
        for &(n, k, p) in &[(50u64, 10u64, 0.3), (200, 120, 0.55), (1000, 3, 0.01)] {
            let reference = Binomial::new(p, n).unwrap().cdf(k);
            let ours = binomial_lower_tail(n, k, p).unwrap();
            assert!((ours - reference).abs() < 1e-12, "{n} {k} {p}");
            let upper = binomial_upper_tail(n, k, p).unwrap();
            let reference_upper = 1.0 - Binomial::new(p, n).unwrap().cdf(k - 1);
            assert!((upper - reference_upper).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_coverage_at_n50() {
        let n = 50;
        let intervals: Vec<(f64, f64)> =
            (0..=n).map(|k| binomial_exact_interval(n, k, 0.05).unwrap()).collect();
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let dist = Binomial::new(p, n).unwrap();
            let coverage: f64 = intervals
                .iter()
                .enumerate()
                .filter(|(_, &(lo, hi))| lo <= p && p <= hi)
                .map(|(k, _)| dist.cdf(k as u64) - if k == 0 { 0.0 } else { dist.cdf(k as u64 - 1) })
                .sum();
            assert!(coverage >= 0.95, "p={p}: {coverage}");
        }
    }
}
