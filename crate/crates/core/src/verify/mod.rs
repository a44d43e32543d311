//! Verification harness.
//!
//! Monte Carlo calibration of the processes, MLR and e-variable checks for the
//! noncentral t ratio, exact enumeration of the Rademacher counterexample and
//! the Bernoulli monotonicity checks.
//!
//! Replications run in parallel. Replication `i` owns a ChaCha8 stream seeded
//! with [`replication_seed`]`(seed, i)`, and results are reduced in index
//! order, so a report depends only on its [`SimConfig`].

mod checks;
mod mc;
mod rademacher;
mod report;

pub use checks::{
    bern_mixed_difference, bern_mlr_exhaustive, bern_positivity_check, bern_report, evariable_quadrature_check,
    evariable_report, linspace_step, mlr_grid_check, mlr_report, BernMlrViolation, BernViolation, EvariablePoint,
    MlrViolation, EVARIABLE_ABS_TOL,
};
pub use mc::{epower_estimate, mc_expectation, regime, type1_error_mc, Regime};
pub use rademacher::{
    counterexample_report, rademacher_exact_expectation, rademacher_mc_report, taylor_coeff_fit, TaylorFit,
    MAX_ENUMERATION_N,
};
pub use report::{Metadata, Verdict, VerificationReport, REPORT_SCHEMA};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How covariates are drawn for the regression generator. `x` and every
/// nuisance column are independent Gaussians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    pub x_mean: f64,
    pub x_sd: f64,
    pub z_mean: f64,
    pub z_sd: f64,
}

impl Default for Covariates {
    fn default() -> Self {
        Covariates { x_mean: 0.0, x_sd: 1.0, z_mean: 0.0, z_sd: 1.0 }
    }
}

/// Data-generating process for a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Gaussian { mu: f64, sigma: f64 },
    /// ±1 with probability ½ each.
    Rademacher,
    Bernoulli { theta: f64 },
    /// `Y = δσX + βᵀZ + σε`; the number of nuisance columns is `beta.len()`.
    Regression { delta: f64, beta: Vec<f64>, sigma: f64, covariates: Covariates },
}

impl Generator {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            Generator::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("gaussian generator needs finite mu and sigma > 0, got mu = {mu}, sigma = {sigma}"));
                }
            }
            Generator::Rademacher => {}
            Generator::Bernoulli { theta } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return bad(format!("bernoulli generator needs theta in (0, 1), got {theta}"));
                }
            }
            Generator::Regression { delta, beta, sigma, covariates: c } => {
                let finite = delta.is_finite()
                    && beta.iter().all(|b| b.is_finite())
                    && [c.x_mean, c.x_sd, c.z_mean, c.z_sd].iter().all(|v| v.is_finite());
                if !finite || !(*sigma > 0.0 && sigma.is_finite()) || c.x_sd < 0.0 || c.z_sd < 0.0 {
                    return bad("regression generator needs finite parameters, sigma > 0 and nonnegative spreads".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub generator: Generator,
    pub seed: u64,
    pub reps: usize,
    pub checkpoints: Vec<u64>,
}

impl SimConfig {
    pub fn new(generator: Generator, seed: u64, reps: usize, checkpoints: Vec<u64>) -> Result<Self> {
        let cfg = SimConfig { generator, seed, reps, checkpoints };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.checkpoints.is_empty() || self.checkpoints[0] == 0 {
            return Err(Error::Config("checkpoints must be nonempty and start at n ≥ 1".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("checkpoints {:?} are not strictly increasing", self.checkpoints)));
        }
        self.generator.validate()
    }

    pub fn horizon(&self) -> u64 {
        *self.checkpoints.last().expect("validated nonempty")
    }
}

/// SplitMix64 finaliser applied to `master + (index + 1)·γ`.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean and `sd/√n` with the unbiased sample standard deviation; sequential
/// so the result is independent of thread count.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim_config_invariants() {
        let g = Generator::Gaussian { mu: 0.0, sigma: 1.0 };
        assert!(SimConfig::new(g.clone(), 1, 10, vec![2, 5]).is_ok());
        assert!(SimConfig::new(g.clone(), 1, 0, vec![2]).is_err());
        assert!(SimConfig::new(g.clone(), 1, 10, vec![5, 5]).is_err());
        assert!(SimConfig::new(g.clone(), 1, 10, vec![]).is_err());
        assert!(SimConfig::new(Generator::Gaussian { mu: 0.0, sigma: 0.0 }, 1, 10, vec![2]).is_err());
        assert!(SimConfig::new(Generator::Bernoulli { theta: 1.0 }, 1, 10, vec![2]).is_err());
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|i| replication_seed(42, i)).collect();
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 1000);
        assert_eq!(a[7], replication_seed(42, 7));
        assert_ne!(replication_seed(42, 0), replication_seed(43, 0));
    }

    #[test]
    fn moments() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[3.0]), (3.0, 0.0));
    }
}
