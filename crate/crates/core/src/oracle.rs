//! Brute-force counterparts of the approximation bounds: the exact CDF of
//! Pearson's statistic by support enumeration, the total variation between
//! the jittered multinomial and its Gaussian analogue by per-cell
//! quadrature, and the sup-distance between the exact and chi-square CDFs.

use rayon::prelude::*;

use crate::domain::{CountVector, SimplexPoint};
use crate::error::{Error, Result};
use crate::gaussian::{covariance_bundle, mahalanobis, pearson_statistic};
use crate::multinomial::{enumerate_support, log_pmf, support_size, RandomStream, DEFAULT_ENUMERATION_CAP};
use crate::specfun::chi2_cdf;

/// Statistic values closer than this (relative to their magnitude) are one
/// atom of the step CDF.
const MERGE_TOL: f64 = 1e-12;

/// A right-continuous step CDF over finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    values: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepCdf {
    /// Builds the CDF from `(value, mass)` atoms in any order. Atoms within
    /// `1e-12` of each other are merged.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("step CDF needs at least one atom".into()));
        }
        if atoms.iter().any(|(v, m)| !v.is_finite() || !(*m >= 0.0)) {
            return Err(Error::InvalidInput("step CDF atoms must be finite with mass >= 0".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        let mut anchor = f64::NAN;
        for (v, m) in atoms {
            if !values.is_empty() && v - anchor <= MERGE_TOL * anchor.abs().max(1.0) {
                *masses.last_mut().unwrap() += m;
            } else {
                anchor = v;
                values.push(v);
                masses.push(m);
            }
        }
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(Self {
            values,
            masses,
            cumulative,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    /// `F(ell) = sum of masses at values <= ell`.
    pub fn eval(&self, ell: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= ell);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Generalized inverse `F*(q) = inf{x : F(x) >= q}` for `q` in `(0, 1]`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("quantile needs 0 < q <= 1, got {q}")));
        }
        // cumulative sums of rounded pmf values may sit a few ulps below an
        // exact level such as 1/2
        let slack = 1e-12 * q;
        let idx = self.cumulative.partition_point(|&c| c < q - slack);
        // q above a total mass that rounded below 1 maps to the largest atom
        Ok(self.values[idx.min(self.values.len() - 1)])
    }
}

/// Exact CDF of Pearson's statistic under `Multinomial(n, p)`.
pub fn exact_pearson_cdf(p: &SimplexPoint, n: u64) -> Result<StepCdf> {
    let support: Vec<CountVector> = enumerate_support(n, p.dim())?.collect();
    let atoms = support
        .par_iter()
        .map(|k| Ok((pearson_statistic(k, p)?, log_pmf(k, p)?.exp())))
        .collect::<Result<Vec<_>>>()?;
    StepCdf::from_atoms(atoms)
}

/// Settings for the per-cell total-variation quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per axis on each (sub)cell.
    pub nodes_per_axis: usize,
    /// Levels of uniform bisection applied where the integrand changes sign.
    pub subdivisions: usize,
    /// Cells whose centre is farther than this many standard deviations
    /// (Mahalanobis) from the mean skip quadrature: the Gaussian is treated
    /// as zero there and the cell contributes its pmf mass.
    pub tail_radius_sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_axis: 8,
            subdivisions: 2,
            tail_radius_sigmas: 10.0,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pm, pm1) = (p1, p0);
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

struct CellIntegrator<'a> {
    p: &'a SimplexPoint,
    n: f64,
    log_norm: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    max_depth: usize,
    tail_radius: f64,
}

impl CellIntegrator<'_> {
    /// Density of `Normal(n p, n Sigma_p)` at `x`.
    fn gaussian(&self, x: &[f64]) -> f64 {
        let root_n = self.n.sqrt();
        let y: Vec<f64> = x
            .iter()
            .zip(self.p.weights())
            .map(|(xi, pi)| (xi - self.n * pi) / root_n)
            .collect();
        (self.log_norm - 0.5 * mahalanobis(&y, self.p)).exp()
    }

    /// `(integral |mass - phi|, integral phi)` over the box `lo + [0, width]^d`.
    fn integrate(&self, mass: f64, lo: &[f64], width: f64, depth: usize) -> (f64, f64) {
        let d = lo.len();
        let m = self.nodes.len();
        let half = 0.5 * width;
        let total = m.pow(d as u32);
        let mut abs_sum = 0.0;
        let mut phi_sum = 0.0;
        let (mut pos, mut neg) = (false, false);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut w = 1.0;
            let mut rest = flat;
            for axis in 0..d {
                let j = rest % m;
                rest /= m;
                x[axis] = lo[axis] + half * (self.nodes[j] + 1.0);
                w *= self.weights[j] * half;
            }
            let phi = self.gaussian(&x);
            let diff = mass - phi;
            pos |= diff > 0.0;
            neg |= diff < 0.0;
            abs_sum += w * diff.abs();
            phi_sum += w * phi;
        }
        if pos && neg && depth < self.max_depth {
            let mut abs_total = 0.0;
            let mut phi_total = 0.0;
            let mut child = vec![0.0; d];
            for corner in 0..(1usize << d) {
                for axis in 0..d {
                    child[axis] = lo[axis] + if corner >> axis & 1 == 1 { half } else { 0.0 };
                }
                let (a, f) = self.integrate(mass, &child, half, depth + 1);
                abs_total += a;
                phi_total += f;
            }
            return (abs_total, phi_total);
        }
        (abs_sum, phi_sum)
    }
}

/// Number of Gaussian draws used by the `d = 3` Monte Carlo estimate.
pub const TV_MONTE_CARLO_DRAWS: usize = 10_000_000;

/// Total variation between `Multinomial(n, p) + Uniform(-1/2, 1/2)^d` and
/// `Normal(n p, n Sigma_p)`.
///
/// For `d <= 2` each lattice cell is integrated by tensor Gauss-Legendre,
/// and the Gaussian mass outside the cells enters through its complement.
/// For `d = 3` a fixed-seed Monte Carlo estimate is used instead.
pub fn tv_estimate(p: &SimplexPoint, n: u64, cfg: &QuadratureConfig) -> Result<f64> {
    if cfg.nodes_per_axis == 0 || !(cfg.tail_radius_sigmas > 0.0) {
        return Err(Error::InvalidInput(format!("bad quadrature config {cfg:?}")));
    }
    match p.dim() {
        1 | 2 => tv_quadrature(p, n, cfg),
        3 => tv_monte_carlo(p, n, TV_MONTE_CARLO_DRAWS, 0x7f4a_7c15),
        d => Err(Error::InvalidInput(format!(
            "total-variation estimation supports d <= 3, got {d}"
        ))),
    }
}

fn tv_quadrature(p: &SimplexPoint, n: u64, cfg: &QuadratureConfig) -> Result<f64> {
    let d = p.dim();
    let (nodes, weights) = gauss_legendre(cfg.nodes_per_axis);
    let bundle = covariance_bundle(p);
    let nf = n as f64;
    let integrator = CellIntegrator {
        p,
        n: nf,
        log_norm: -0.5 * (d as f64 * (2.0 * std::f64::consts::PI * nf).ln() + bundle.log_det),
        nodes,
        weights,
        max_depth: cfg.subdivisions,
        tail_radius: cfg.tail_radius_sigmas,
    };
    let support: Vec<CountVector> = enumerate_support(n, d)?.collect();
    let cells = support
        .par_iter()
        .map(|k| {
            let mass = log_pmf(k, p)?.exp();
            let centre: Vec<f64> = k
                .counts()
                .iter()
                .zip(p.weights())
                .map(|(&c, &pi)| (c as f64 - nf * pi) / nf.sqrt())
                .collect();
            if mahalanobis(&centre, p).sqrt() > integrator.tail_radius {
                return Ok((mass, 0.0));
            }
            let lo: Vec<f64> = k.counts().iter().map(|&c| c as f64 - 0.5).collect();
            Ok(integrator.integrate(mass, &lo, 1.0, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    // fixed-order reduction
    let (abs_total, phi_total) = cells
        .iter()
        .fold((0.0, 0.0), |(a, f), (ca, cf)| (a + ca, f + cf));
    let outside = (1.0 - phi_total).max(0.0);
    Ok((0.5 * (abs_total + outside)).clamp(0.0, 1.0))
}

/// `TV = E_Q[(1 - f/g)_+]` with `X ~ Q` Gaussian, `f` the jittered pmf.
fn tv_monte_carlo(p: &SimplexPoint, n: u64, draws: usize, seed: u64) -> Result<f64> {
    let d = p.dim();
    if support_size(n, d) > DEFAULT_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: support_size(n, d),
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let bundle = covariance_bundle(p);
    let chol = bundle
        .sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let l = chol.l();
    let nf = n as f64;
    let root_n = nf.sqrt();
    let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI * nf).ln() + bundle.log_det);
    const CHUNK: usize = 100_000;
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = RandomStream::substream(seed, &[c as u64]);
            let count = CHUNK.min(draws - c * CHUNK);
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..count {
                z.iter_mut().for_each(|zi| *zi = stream.normal());
                let mut quad = 0.0;
                for i in 0..d {
                    let lz: f64 = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                    x[i] = nf * p.weights()[i] + root_n * lz;
                    quad += z[i] * z[i];
                }
                let log_g = log_norm - 0.5 * quad;
                let rounded: Vec<f64> = x.iter().map(|v| v.round()).collect();
                let inside = rounded.iter().all(|&r| r >= 0.0) && rounded.iter().sum::<f64>() <= nf;
                let f = if inside {
                    let k = CountVector::new(rounded.iter().map(|&r| r as u64).collect(), n)
                        .expect("inside the lattice simplex");
                    log_pmf(&k, p).map(f64::exp).unwrap_or(0.0)
                } else {
                    0.0
                };
                acc += (1.0 - f / log_g.exp()).max(0.0);
            }
            acc
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / draws as f64)
}

/// Default evaluation grid: 60 points, geometric from `0.05` to `2(d + 6)`.
pub fn default_ell_grid(d: usize) -> Vec<f64> {
    let lo: f64 = 0.05;
    let hi = 2.0 * (d as f64 + 6.0);
    let ratio = (hi / lo).powf(1.0 / 59.0);
    (0..60).map(|i| lo * ratio.powi(i)).collect()
}

/// `max_ell |F(ell) - chi2_cdf(d, ell)|` over `ell_grid`, with `F` the exact
/// CDF of Pearson's statistic.
pub fn sup_cdf_gap(p: &SimplexPoint, n: u64, ell_grid: &[f64]) -> Result<f64> {
    let cdf = exact_pearson_cdf(p, n)?;
    sup_cdf_gap_from(&cdf, p.dim() as u32, ell_grid)
}

pub fn sup_cdf_gap_from(cdf: &StepCdf, d: u32, ell_grid: &[f64]) -> Result<f64> {
    if ell_grid.is_empty() {
        return Err(Error::InvalidInput("ell grid is empty".into()));
    }
    let mut gap: f64 = 0.0;
    for &ell in ell_grid {
        if !(ell > 0.0) {
            return Err(Error::Domain(format!("grid point {ell} is not positive")));
        }
        gap = gap.max((cdf.eval(ell) - chi2_cdf(d, ell)?).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(w: &[f64]) -> SimplexPoint {
        SimplexPoint::new(w.to_vec()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in 1..=12 {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m={m}");
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-12, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn pearson_cdf_small_cases() {
        let cdf = exact_pearson_cdf(&pt(&[0.5]), 2).unwrap();
        assert_eq!(cdf.values(), &[0.0, 2.0]);
        assert!((cdf.masses()[0] - 0.5).abs() < 1e-15);
        assert!((cdf.masses()[1] - 0.5).abs() < 1e-15);

        let cdf = exact_pearson_cdf(&pt(&[0.5]), 1).unwrap();
        assert_eq!(cdf.values().len(), 1);
        assert!((cdf.values()[0] - 1.0).abs() < 1e-15);
        assert!((cdf.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_cdf_conserves_mass() {
        for (w, n) in [(vec![0.2, 0.3], 40u64), (vec![0.1], 300), (vec![0.25, 0.25, 0.25], 20)] {
            let cdf = exact_pearson_cdf(&pt(&w), n).unwrap();
            assert!((cdf.total_mass() - 1.0).abs() < 1e-10);
            assert!(cdf.values().windows(2).all(|v| v[0] < v[1]));
        }
    }

    #[test]
    fn quantile_examples() {
        let cdf = exact_pearson_cdf(&pt(&[0.5]), 2).unwrap();
        assert_eq!(cdf.quantile(0.5).unwrap(), 0.0);
        assert_eq!(cdf.quantile(0.6).unwrap(), 2.0);
        assert_eq!(cdf.quantile(1.0).unwrap(), 2.0);
        assert!(cdf.quantile(0.0).is_err());
        assert!(cdf.quantile(1.1).is_err());
    }

    #[test]
    fn quantile_is_generalized_inverse() {
        let cdf = exact_pearson_cdf(&pt(&[0.2, 0.3]), 15).unwrap();
        for i in 1..=200 {
            let q = i as f64 / 200.0;
            let x = cdf.quantile(q).unwrap();
            assert!(cdf.eval(x) >= q - 1e-12);
        }
        for (&v, &c) in cdf.values().iter().zip(cdf.cumulative()) {
            assert!(cdf.quantile(c.min(1.0)).unwrap() <= v);
        }
    }

    #[test]
    fn merges_near_duplicate_atoms() {
        let cdf = StepCdf::from_atoms(vec![(1.0, 0.25), (1.0 + 1e-14, 0.25), (2.0, 0.5)]).unwrap();
        assert_eq!(cdf.values().len(), 2);
        assert_eq!(cdf.masses()[0], 0.5);
        assert!(StepCdf::from_atoms(vec![]).is_err());
    }

    #[test]
    fn tv_estimate_basic_properties() {
        let cfg = QuadratureConfig::default();
        let p = pt(&[0.5]);
        let small = tv_estimate(&p, 16, &cfg).unwrap();
        let large = tv_estimate(&p, 1024, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&small));
        assert!(large < small);
        assert!(small <= crate::approx::tv_bound(16, 1, 2.0).unwrap());
    }

    #[test]
    fn tv_quadrature_converges() {
        let cfg = QuadratureConfig::default();
        let fine = QuadratureConfig {
            nodes_per_axis: 16,
            ..cfg
        };
        let third = 1.0 / 3.0;
        for (p, n) in [(pt(&[0.5]), 64u64), (pt(&[third, third]), 32)] {
            let a = tv_estimate(&p, n, &cfg).unwrap();
            let b = tv_estimate(&p, n, &fine).unwrap();
            assert!((a - b).abs() < 5e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn tv_monte_carlo_agrees_with_quadrature_in_2d() {
        let third = 1.0 / 3.0;
        let p = pt(&[third, third]);
        let quad = tv_quadrature(&p, 30, &QuadratureConfig::default()).unwrap();
        let mc = tv_monte_carlo(&p, 30, 400_000, 99).unwrap();
        assert!((quad - mc).abs() < 3e-3, "{quad} vs {mc}");
    }

    #[test]
    fn tv_rejects_high_dimension() {
        assert!(tv_estimate(&pt(&[0.1, 0.1, 0.1, 0.1]), 5, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn cdf_gap_properties() {
        let third = 1.0 / 3.0;
        let p = pt(&[third, third]);
        let grid: Vec<f64> = (1..=24).map(|i| 0.5 * i as f64).collect();
        let small = sup_cdf_gap(&p, 25, &grid).unwrap();
        let large = sup_cdf_gap(&p, 400, &grid).unwrap();
        assert!(small >= 0.0 && large >= 0.0);
        assert!(large < small, "{large} vs {small}");
        assert!(sup_cdf_gap(&p, 25, &[]).is_err());
        assert_eq!(default_ell_grid(2).len(), 60);
        assert!((default_ell_grid(2)[59] - 16.0).abs() < 1e-9);
    }
}
