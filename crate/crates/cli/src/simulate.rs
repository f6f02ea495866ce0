//! Monte Carlo coverage of the confidence bounds.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use simplex_conf_core::confopt::confidence_bounds;
use simplex_conf_core::multinomial::sample;
use simplex_conf_core::{
    ConfidenceSpec, ConvexObjective, EpsilonMode, Objective, Observed, RandomStream, SimplexPoint,
};

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "n,lambda0,mean_lower,mean_upper,empirical_level,trials,resampled";

/// Draws with a zero category allowed per trial before giving up.
const MAX_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub p0: SimplexPoint,
    pub objective: Objective,
    pub alpha: f64,
    pub epsilon_mode: EpsilonMode,
    pub tau: Option<f64>,
    pub n_grid: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
}

impl SimulationSetup {
    /// Three categories, `p0 = (0.2, 0.3, 0.5)`, negative entropy.
    pub fn fig1() -> Self {
        Self::preset(&[0.2, 0.3, 0.5], Objective::neg_entropy(vec![1.0, 2.0, 3.0]))
    }

    /// Four categories, `p0 = (0.2, 0.3, 0.15, 0.35)`, the built-in 3x3
    /// quadratic form.
    pub fn fig2() -> Self {
        Self::preset(&[0.2, 0.3, 0.15, 0.35], Objective::fig2_preset())
    }

    fn preset(p0: &[f64], objective: Objective) -> Self {
        Self {
            p0: SimplexPoint::from_probabilities(p0).expect("preset p0 is interior"),
            objective,
            alpha: 0.05,
            epsilon_mode: EpsilonMode::Practical,
            tau: None,
            n_grid: vec![250, 1000, 4000],
            trials: 2000,
            seed: 1,
        }
    }

    pub fn lambda0(&self) -> f64 {
        self.objective.value(self.p0.weights())
    }
}

/// Aggregate over the trials at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub n: u64,
    pub lambda0: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    /// Fraction of trials whose interval misses `lambda0`.
    pub empirical_level: f64,
    pub trials: usize,
    /// Draws discarded because a category was empty.
    pub resampled: u64,
}

struct Trial {
    lower: f64,
    upper: f64,
    resampled: u64,
}

fn run_trial(setup: &SimulationSetup, spec: &ConfidenceSpec, n: u64, trial: u64) -> CliResult<Trial> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut stream = RandomStream::substream(setup.seed, &[n, trial, attempt]);
        let k = sample(&setup.p0, n, &mut stream);
        if k.first_zero().is_some() {
            continue;
        }
        let bounds = confidence_bounds(&Observed::from_counts(&k)?, &setup.objective, spec)?;
        return Ok(Trial { lower: bounds.lambda_lower, upper: bounds.lambda_upper, resampled: attempt });
    }
    Err(CliError::ZeroCount(format!(
        "n = {n}: every one of {MAX_ATTEMPTS} draws had an empty category"
    )))
}

pub fn simulate_coverage(setup: &SimulationSetup) -> CliResult<Vec<CoverageRow>> {
    if setup.trials == 0 {
        return Err(CliError::Parse("trials must be at least 1".into()));
    }
    if setup.n_grid.is_empty() || setup.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Parse("n grid must be nonempty and strictly increasing".into()));
    }
    let d = setup.p0.dim();
    let spec = ConfidenceSpec::new(setup.alpha, setup.epsilon_mode, setup.tau.or(Some(d as f64 + 1.0)))?;
    let lambda0 = setup.lambda0();
    setup
        .n_grid
        .iter()
        .map(|&n| {
            let trials = (0..setup.trials as u64)
                .into_par_iter()
                .map(|t| run_trial(setup, &spec, n, t))
                .collect::<CliResult<Vec<_>>>()?;
            let count = trials.len() as f64;
            let misses = trials.iter().filter(|t| !(t.lower <= lambda0 && lambda0 <= t.upper)).count();
            Ok(CoverageRow {
                n,
                lambda0,
                mean_lower: trials.iter().map(|t| t.lower).sum::<f64>() / count,
                mean_upper: trials.iter().map(|t| t.upper).sum::<f64>() / count,
                empirical_level: misses as f64 / count,
                trials: trials.len(),
                resampled: trials.iter().map(|t| t.resampled).sum(),
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CoverageRow], out: W) -> CliResult<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SimulationSetup {
        SimulationSetup { n_grid: vec![30, 60], trials: 20, seed, ..SimulationSetup::fig1() }
    }

    #[test]
    fn csv_is_deterministic_and_well_formed() {
        let render = |setup: &SimulationSetup| {
            let mut buf = Vec::new();
            write_csv(&simulate_coverage(setup).unwrap(), &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render(&small(9));
        assert_eq!(a, render(&small(9)));
        assert_ne!(a, render(&small(10)));
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn rows_are_consistent() {
        for row in simulate_coverage(&small(3)).unwrap() {
            assert!(row.mean_lower <= row.lambda0 + 0.5 && row.mean_lower < row.mean_upper);
            assert!((0.0..=1.0).contains(&row.empirical_level));
            assert_eq!(row.trials, 20);
        }
    }

    #[test]
    fn small_samples_resample_empty_categories() {
        let setup = SimulationSetup {
            p0: SimplexPoint::from_probabilities(&[0.05, 0.15, 0.8]).unwrap(),
            n_grid: vec![10],
            trials: 40,
            ..small(5)
        };
        let rows = simulate_coverage(&setup).unwrap();
        assert!(rows[0].resampled > 0);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut setup = small(1);
        setup.n_grid = vec![100, 50];
        assert!(matches!(simulate_coverage(&setup), Err(CliError::Parse(_))));
        setup.n_grid = vec![100];
        setup.trials = 0;
        assert!(simulate_coverage(&setup).is_err());
    }

    #[test]
    fn presets() {
        assert!((SimulationSetup::fig1().lambda0() - (-1.029_653_014_064_573_7)).abs() < 1e-15);
        let fig2 = SimulationSetup::fig2();
        assert_eq!(fig2.p0.dim(), 3);
        // 2(.04) + 3(.09) + 4(.0225) + 2(.5)(.06) + 2(.25)(.03) + 2(.75)(.045)
        assert!((fig2.lambda0() - 0.5825).abs() < 1e-14);
    }
}
