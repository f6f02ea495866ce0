//! Multinomial probabilities, lattice support enumeration, sampling and the
//! closed-form central moments of a single standardized coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{CountVector, SimplexPoint};
use crate::error::{Error, Result};
use crate::specfun::stirling_error;

/// Default cap on the number of lattice points an enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `x ln(x / m) + m - x`, summed by series when `x` is close to `m`.
fn deviance_term(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut sum = (x - m) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = sum + ej / (2 * j + 1) as f64;
            if next == sum {
                return next;
            }
            sum = next;
        }
        return sum;
    }
    x * (x / m).ln() + m - x
}

/// Log of the multinomial probability `n! / prod(k_i!) prod(p_i^k_i)`.
///
/// Evaluated in saddle-point form (Stirling errors plus deviance terms), which
/// avoids the cancellation between `ln n!` and `sum ln k_i!` at large `n`.
pub fn log_pmf(k: &CountVector, p: &SimplexPoint) -> Result<f64> {
    if k.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: k.dim(),
        });
    }
    let n = k.total();
    let nf = n as f64;
    let mut value = stirling_error(n) + 0.5 * nf.ln() + LN_SQRT_2PI;
    for (ki, pi) in k.categories().zip(p.probabilities()) {
        value -= deviance_term(ki as f64, nf * pi);
        if ki > 0 {
            value -= stirling_error(ki) + 0.5 * (ki as f64).ln() + LN_SQRT_2PI;
        }
    }
    Ok(value)
}

pub fn pmf(k: &CountVector, p: &SimplexPoint) -> Result<f64> {
    log_pmf(k, p).map(f64::exp)
}

/// Binomial coefficient `C(n + d, d)`, the size of the lattice support;
/// saturates at `u128::MAX`.
pub fn support_size(n: u64, d: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        match acc.checked_mul(n as u128 + i) {
            Some(v) => acc = v / i,
            None => return u128::MAX,
        }
    }
    acc
}

/// Iterator over `{k in N^d : sum(k) <= n}` in lexicographic order.
#[derive(Debug, Clone)]
pub struct SupportIter {
    n: u64,
    current: Vec<u64>,
    sum: u64,
    done: bool,
}

impl Iterator for SupportIter {
    type Item = CountVector;

    fn next(&mut self) -> Option<CountVector> {
        if self.done {
            return None;
        }
        let item = CountVector::new(self.current.clone(), self.n).expect("lattice point");
        // Advance: bump the last coordinate that still has room, zeroing
        // everything after it.
        let d = self.current.len();
        let mut i = d;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.sum < self.n {
                self.current[i] += 1;
                self.sum += 1;
                break;
            }
            self.sum -= self.current[i];
            self.current[i] = 0;
        }
        Some(item)
    }
}

/// Enumerates the support of `Multinomial(n, p)` for `p` of dimension `d`.
pub fn enumerate_support(n: u64, d: usize) -> Result<SupportIter> {
    enumerate_support_capped(n, d, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_support_capped(n: u64, d: usize, cap: u128) -> Result<SupportIter> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("enumeration needs n >= 1 and d >= 1".into()));
    }
    let size = support_size(n, d);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    Ok(SupportIter {
        n,
        current: vec![0; d],
        sum: 0,
        done: false,
    })
}

/// A seeded, reproducible source of uniform variates.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// An independent stream identified by `seed` and a path of indices,
    /// e.g. `(n, trial)`.
    pub fn substream(seed: u64, path: &[u64]) -> Self {
        let mut key = splitmix64(seed);
        for &part in path {
            key = splitmix64(key ^ splitmix64(part.wrapping_add(0x6a09_e667_f3bc_c909)));
        }
        Self::new(key)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal variate (Box-Muller, one of the pair).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `Multinomial(n, p)` as `n` categorical draws by inverse CDF.
pub fn sample(p: &SimplexPoint, n: u64, stream: &mut RandomStream) -> CountVector {
    let d = p.dim();
    let mut cumulative = Vec::with_capacity(d);
    let mut acc = 0.0;
    for &w in p.weights() {
        acc += w;
        cumulative.push(acc);
    }
    let mut counts = vec![0u64; d];
    for _ in 0..n {
        let u = stream.uniform();
        if let Some(i) = cumulative.iter().position(|&c| u < c) {
            counts[i] += 1;
        }
    }
    CountVector::new(counts, n).expect("sampled counts sum to at most n")
}

/// `E|delta|^2`, `E delta^3` and `E|delta|^4` for one standardized
/// multinomial coordinate `delta = (K_i - n p_i) / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

pub fn central_moments(n: u64, p: f64) -> Result<MomentSet> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("central moments need 0 < p < 1, got {p}")));
    }
    if n == 0 {
        return Err(Error::Domain("central moments need n >= 1".into()));
    }
    let nf = n as f64;
    let q = 1.0 - p;
    Ok(MomentSet {
        m2: p * q,
        m3: p * (2.0 * p * p - 3.0 * p + 1.0) / nf.sqrt(),
        m4: 3.0 * p * p * q * q + p * (1.0 - 7.0 * p + 12.0 * p * p - 6.0 * p * p * p) / nf,
    })
}
