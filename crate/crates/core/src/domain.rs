//! Points of the open simplex, lattice count vectors and the standardized
//! deviations between them.
//!
//! A `d`-dimensional point stores its first `d` weights explicitly; the
//! `(d+1)`-st weight is implied by the unit-sum constraint but cached so that
//! every routine can treat all `d + 1` coordinates uniformly.

use crate::error::{Error, Result};

/// A point `p` of the open simplex: `p_i > 0` and `p_1 + ... + p_d < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    weights: Vec<f64>,
    last_weight: f64,
}

impl SimplexPoint {
    /// Builds a point from its first `d` weights.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("simplex point needs d >= 1".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::NonInterior(format!("weight {i} = {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if !(sum < 1.0) {
            return Err(Error::NonInterior(format!("weights sum to {sum}")));
        }
        Ok(Self {
            last_weight: 1.0 - sum,
            weights,
        })
    }

    /// Builds a point from all `d + 1` probabilities, which must sum to one
    /// within `1e-9`. The last entry is recomputed from the others.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least two category probabilities".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NonInterior(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        if let Some(&last) = probs.last() {
            if !(last > 0.0) {
                return Err(Error::NonInterior(format!("last weight = {last}")));
            }
        }
        Self::new(probs[..probs.len() - 1].to_vec())
    }

    /// The uniform point `(1/(d+1), ..., 1/(d+1))`.
    pub fn uniform(d: usize) -> Self {
        let w = 1.0 / (d as f64 + 1.0);
        Self {
            weights: vec![w; d],
            last_weight: 1.0 - w * d as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn last_weight(&self) -> f64 {
        self.last_weight
    }

    /// Weight of category `i` in `0..=d`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == self.weights.len() {
            self.last_weight
        } else {
            self.weights[i]
        }
    }

    /// All `d + 1` weights in category order.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .copied()
            .chain(std::iter::once(self.last_weight))
    }

    pub fn to_probabilities(&self) -> Vec<f64> {
        self.probabilities().collect()
    }
}

/// Nonnegative lattice counts `k_1..k_d` with total `n`; the `(d+1)`-st
/// count is `n - sum(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
    last_count: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>, total: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("count vector needs d >= 1".into()));
        }
        if total == 0 {
            return Err(Error::InvalidInput("total must be positive".into()));
        }
        let sum: u64 = counts.iter().sum();
        if sum > total {
            return Err(Error::InvalidInput(format!(
                "counts sum to {sum}, exceeding total {total}"
            )));
        }
        Ok(Self {
            last_count: total - sum,
            counts,
            total,
        })
    }

    /// Builds a count vector from all `d + 1` category counts.
    pub fn from_categories(all: &[u64]) -> Result<Self> {
        if all.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least two category counts".into(),
            ));
        }
        let total = all.iter().sum();
        Self::new(all[..all.len() - 1].to_vec(), total)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn last_count(&self) -> u64 {
        self.last_count
    }

    /// Count of category `i` in `0..=d`.
    pub fn count(&self, i: usize) -> u64 {
        if i == self.counts.len() {
            self.last_count
        } else {
            self.counts[i]
        }
    }

    pub fn categories(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts
            .iter()
            .copied()
            .chain(std::iter::once(self.last_count))
    }

    /// Index of the first category with a zero count, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.categories().position(|c| c == 0)
    }

    /// Empirical proportions `k_i / n` for all `d + 1` categories.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.categories().map(|c| c as f64 / n).collect()
    }
}

/// Sample size, parameter point and the regime constant `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: u64,
    pub p: SimplexPoint,
    pub tau: f64,
}

impl ModelParams {
    /// Requires `tau >= d + 1`. The sample-size condition `n >= tau^4` is
    /// checked separately by [`ModelParams::check_regime`].
    pub fn new(n: u64, p: SimplexPoint, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        let d = p.dim() as f64;
        if !(tau >= d + 1.0) {
            return Err(Error::RegimeViolation(format!(
                "tau = {tau} is below d + 1 = {}",
                d + 1.0
            )));
        }
        Ok(Self { n, p, tau })
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn check_regime(&self) -> Result<()> {
        check_regime(self.n as f64, self.dim(), self.tau)
    }
}

pub(crate) fn check_regime(n: f64, d: usize, tau: f64) -> Result<()> {
    if !(tau >= d as f64 + 1.0) {
        return Err(Error::RegimeViolation(format!(
            "tau = {tau} is below d + 1 = {}",
            d + 1
        )));
    }
    if !(n >= tau.powi(4)) {
        return Err(Error::RegimeViolation(format!(
            "n = {n} is below tau^4 = {}",
            tau.powi(4)
        )));
    }
    Ok(())
}

/// Standardized deviations `(k_i - n p_i) / sqrt(n)` for all `d + 1`
/// categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    values: Vec<f64>,
}

impl Deviation {
    /// Deviation of `k` from its mean under `Multinomial(n, p)`.
    ///
    /// The last coordinate is set to minus the sum of the others, so the
    /// values sum to zero up to a single rounding.
    pub fn between(k: &CountVector, p: &SimplexPoint) -> Result<Self> {
        if k.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                actual: k.dim(),
            });
        }
        let n = k.total() as f64;
        let root_n = n.sqrt();
        let mut values: Vec<f64> = k
            .counts()
            .iter()
            .zip(p.weights())
            .map(|(&ki, &pi)| (ki as f64 - n * pi) / root_n)
            .collect();
        let last = -values.iter().sum::<f64>();
        values.push(last);
        Ok(Self { values })
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// All `d + 1` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The first `d` values, i.e. the argument of the Gaussian density.
    pub fn head(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }
}

/// Deviation of `k` under `params`; `k` must have total `params.n`.
pub fn deviation(k: &CountVector, params: &ModelParams) -> Result<Deviation> {
    if k.total() != params.n {
        return Err(Error::InvalidInput(format!(
            "count total {} differs from n = {}",
            k.total(),
            params.n
        )));
    }
    Deviation::between(k, &params.p)
}

/// Whether every weight of `p` (including the implied last one) is at
/// least `1 / tau`.
pub fn in_p_tau(p: &SimplexPoint, tau: f64) -> bool {
    p.probabilities().all(|w| 1.0 / w <= tau)
}

/// Whether `k` lies in the bulk: all `d + 1` counts positive and
/// `max_i |delta_i / (sqrt(n) p_i)| <= tau sqrt(log n / n)`.
pub fn in_bulk(k: &CountVector, params: &ModelParams) -> bool {
    if k.total() != params.n || k.dim() != params.dim() {
        return false;
    }
    if k.first_zero().is_some() {
        return false;
    }
    let n = params.n as f64;
    let radius = params.tau * (n.ln() / n).sqrt();
    // (k_i - n p_i) / (n p_i) is delta_i / (sqrt(n) p_i)
    k.categories()
        .zip(params.p.probabilities())
        .all(|(ki, pi)| ((ki as f64 - n * pi) / (n * pi)).abs() <= radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(w: &[f64]) -> SimplexPoint {
        SimplexPoint::new(w.to_vec()).unwrap()
    }

    #[test]
    fn simplex_point_caches_last_weight() {
        assert!((pt(&[0.2, 0.3]).last_weight() - 0.5).abs() < 1e-15);
        assert_eq!(pt(&[0.5]).last_weight(), 0.5);
    }

    #[test]
    fn simplex_point_rejects_boundary_and_outside() {
        for w in [vec![0.6, 0.5], vec![0.0, 0.3], vec![0.5, 0.5], vec![-0.1], vec![1.0]] {
            assert!(matches!(SimplexPoint::new(w), Err(Error::NonInterior(_))));
        }
        assert!(SimplexPoint::new(vec![]).is_err());
        assert!(SimplexPoint::from_probabilities(&[0.5, 0.6]).is_err());
        assert!(SimplexPoint::from_probabilities(&[0.25, 0.25, 0.5]).is_ok());
    }

    #[test]
    fn count_vector_derives_last_count() {
        let k = CountVector::new(vec![2, 3], 10).unwrap();
        assert_eq!(k.last_count(), 5);
        assert_eq!(k.categories().collect::<Vec<_>>(), vec![2, 3, 5]);
        assert!(CountVector::new(vec![6, 5], 10).is_err());
        let k = CountVector::from_categories(&[20, 30, 50]).unwrap();
        assert_eq!((k.total(), k.counts()), (100, &[20u64, 30][..]));
    }

    #[test]
    fn deviation_examples() {
        let params = ModelParams::new(10, pt(&[0.2, 0.3]), 5.0).unwrap();
        let zero = deviation(&CountVector::new(vec![2, 3], 10).unwrap(), &params).unwrap();
        assert!(zero.values().iter().all(|v| v.abs() < 1e-15));

        let dev = deviation(&CountVector::new(vec![4, 3], 10).unwrap(), &params).unwrap();
        let s = 2.0 / 10f64.sqrt();
        let expected = [s, 0.0, -s];
        for (a, b) in dev.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }

        let wrong_n = CountVector::new(vec![4, 3], 11).unwrap();
        assert!(deviation(&wrong_n, &params).is_err());
        let wrong_d = CountVector::new(vec![4], 10).unwrap();
        assert!(matches!(
            Deviation::between(&wrong_d, &params.p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn p_tau_membership() {
        let third = 1.0 / 3.0;
        assert!(in_p_tau(&pt(&[third, third]), 3.0 + 1e-12));
        assert!(!in_p_tau(&pt(&[0.2, 0.3]), 3.0));
        assert!(in_p_tau(&pt(&[0.2, 0.3]), 5.0));
    }

    #[test]
    fn exact_thirds_are_in_p_3() {
        // 1/(1/3) rounds to exactly 3.0 in binary64
        let third = 1.0 / 3.0;
        let p = pt(&[third, third]);
        assert!(in_p_tau(&p, 3.0), "{:?}", p.to_probabilities());
    }

    #[test]
    fn bulk_membership() {
        let third = 1.0 / 3.0;
        let params = ModelParams::new(81, pt(&[third, third]), 3.0).unwrap();
        let k = |a, b| CountVector::new(vec![a, b], 81).unwrap();
        assert!(in_bulk(&k(27, 27), &params));
        assert!(!in_bulk(&k(0, 54), &params));
        assert!(in_bulk(&k(40, 27), &params));
        assert!(!in_bulk(&k(50, 27), &params));
    }

    #[test]
    fn tau_must_cover_dimension() {
        assert!(matches!(
            ModelParams::new(100, pt(&[0.2, 0.3]), 2.5),
            Err(Error::RegimeViolation(_))
        ));
        let params = ModelParams::new(80, pt(&[0.3, 0.3]), 3.0).unwrap();
        assert!(params.check_regime().is_err());
        let params = ModelParams::new(81, pt(&[0.3, 0.3]), 3.0).unwrap();
        assert!(params.check_regime().is_ok());
    }
}
