//! Monte Carlo calibration: expectations, type-I error and e-power.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{mean_and_se, replication_seed, Generator, SimConfig, VerificationReport};
use crate::error::{Error, Result};
use crate::models::{Bernoulli, ChiSq, ModelKind, Regression, RegressionRow, TTest};
use crate::process::{log_evalue_at, EffectSpec, Model, StoppingRule};

/// Where the generating effect sits relative to the tested hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Effect equals the null boundary: the process is a martingale.
    Boundary,
    /// Effect strictly inside the null: a supermartingale.
    Null,
    Alternative,
    /// The generator is not a member of the model family (e.g. Rademacher
    /// data for a Gaussian test); no bound is claimed.
    Outside,
}

fn generator_effect(kind: ModelKind, generator: &Generator) -> Result<Option<f64>> {
    match (kind, generator) {
        (ModelKind::T, Generator::Gaussian { mu, sigma }) => Ok(Some(mu / sigma)),
        (ModelKind::ChiSq, Generator::Gaussian { sigma, .. }) => Ok(Some(*sigma)),
        (ModelKind::T | ModelKind::ChiSq, Generator::Rademacher) => Ok(None),
        // label-agnostic: θ and 1 − θ are the same hypothesis
        (ModelKind::Bernoulli, Generator::Bernoulli { theta }) => Ok(Some(theta.max(1.0 - theta))),
        (ModelKind::Linreg, Generator::Regression { delta, .. }) => Ok(Some(*delta)),
        (kind, g) => Err(Error::Config(format!("generator {g:?} cannot drive the {kind} model"))),
    }
}

/// Classifies a generator against `spec`. An alternative below the null
/// flips which side counts as the null.
pub fn regime(kind: ModelKind, spec: &EffectSpec, generator: &Generator) -> Result<Regime> {
    let Some(effect) = generator_effect(kind, generator)? else {
        return Ok(Regime::Outside);
    };
    Ok(if effect == spec.null {
        Regime::Boundary
    } else if (effect < spec.null) == spec.guarantee_holds() {
        Regime::Null
    } else {
        Regime::Alternative
    })
}

struct RepOutcome {
    log_e: Vec<f64>,
    crossed: bool,
}

#[allow(clippy::too_many_arguments)]
fn run<M, F>(
    model: &M,
    spec: &EffectSpec,
    sim: &SimConfig,
    checkpoints: &[u64],
    horizon: u64,
    log_threshold: Option<f64>,
    sample: F,
) -> Result<Vec<RepOutcome>>
where
    M: Model + Sync,
    M::Observation: Sized,
    F: Fn(&mut ChaCha8Rng) -> M::Observation + Sync,
{
    spec.validate(model)?;
    (0..sim.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(sim.seed, rep as u64));
            let mut state = model.initial_state();
            let mut log_e = Vec::with_capacity(checkpoints.len());
            let mut crossed = false;
            for n in 1..=horizon {
                state = model.update(&state, &sample(&mut rng))?;
                let at_checkpoint = log_e.len() < checkpoints.len() && checkpoints[log_e.len()] == n;
                let watch = log_threshold.is_some() && !crossed;
                if !(at_checkpoint || watch) {
                    continue;
                }
                let l = log_evalue_at(model, &state, spec)?;
                if l.is_nan() {
                    return Err(Error::Numerical(format!("{} process produced NaN at n = {n}, replication {rep}", model.name())));
                }
                if at_checkpoint {
                    log_e.push(l);
                }
                if let Some(thr) = log_threshold {
                    crossed |= l >= thr;
                }
                if crossed && log_e.len() == checkpoints.len() {
                    break;
                }
            }
            Ok(RepOutcome { log_e, crossed })
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn rademacher(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn simulate(
    kind: ModelKind,
    spec: &EffectSpec,
    sim: &SimConfig,
    checkpoints: &[u64],
    horizon: u64,
    log_threshold: Option<f64>,
) -> Result<Vec<RepOutcome>> {
    sim.validate()?;
    match (kind, &sim.generator) {
        (ModelKind::T, Generator::Gaussian { mu, sigma }) => {
            let (mu, sigma) = (*mu, *sigma);
            run(&TTest, spec, sim, checkpoints, horizon, log_threshold, |r| mu + sigma * gaussian(r))
        }
        (ModelKind::T, Generator::Rademacher) => run(&TTest, spec, sim, checkpoints, horizon, log_threshold, rademacher),
        (ModelKind::ChiSq, Generator::Gaussian { mu, sigma }) => {
            let (mu, sigma) = (*mu, *sigma);
            run(&ChiSq, spec, sim, checkpoints, horizon, log_threshold, |r| mu + sigma * gaussian(r))
        }
        (ModelKind::ChiSq, Generator::Rademacher) => run(&ChiSq, spec, sim, checkpoints, horizon, log_threshold, rademacher),
        (ModelKind::Bernoulli, Generator::Bernoulli { theta }) => {
            let theta = *theta;
            run(&Bernoulli, spec, sim, checkpoints, horizon, log_threshold, |r| u8::from(r.random::<f64>() < theta))
        }
        (ModelKind::Linreg, Generator::Regression { delta, beta, sigma, covariates: c }) => {
            let model = Regression { d: beta.len() };
            let (delta, sigma) = (*delta, *sigma);
            run(&model, spec, sim, checkpoints, horizon, log_threshold, |r| {
                let x = c.x_mean + c.x_sd * gaussian(r);
                let z: Vec<f64> = beta.iter().map(|_| c.z_mean + c.z_sd * gaussian(r)).collect();
                let nuisance: f64 = beta.iter().zip(&z).map(|(b, z)| b * z).sum();
                let y = delta * sigma * x + nuisance + sigma * gaussian(r);
                RegressionRow { y, x, z }
            })
        }
        (kind, g) => Err(Error::Config(format!("generator {g:?} cannot drive the {kind} model"))),
    }
}

fn config_echo(kind: ModelKind, spec: &EffectSpec, sim: &SimConfig) -> serde_json::Value {
    json!({ "model": kind, "spec": spec, "sim": sim })
}

/// Monte Carlo mean of the e-value at each checkpoint.
///
/// At the boundary the verdict is `|mean − 1| ≤ 3·SE`; inside the null it is
/// `mean ≤ 1 + 3·SE`. Other regimes are reported without a verdict.
pub fn mc_expectation(kind: ModelKind, spec: &EffectSpec, sim: &SimConfig) -> Result<VerificationReport> {
    let started = Instant::now();
    let regime = regime(kind, spec, &sim.generator)?;
    let outcomes = simulate(kind, spec, sim, &sim.checkpoints, sim.horizon(), None)?;
    let mut report = VerificationReport::new("mc", config_echo(kind, spec, sim));
    for (j, &n) in sim.checkpoints.iter().enumerate() {
        let es: Vec<f64> = outcomes.iter().map(|o| o.log_e[j].exp()).collect();
        let (mean, se) = mean_and_se(&es);
        report.checkpoints.push(n);
        report.mean.push(mean);
        report.standard_error.push(se);
        match regime {
            Regime::Boundary => report.verdict(format!("n={n}"), "|mean - 1| <= 3*SE", (mean - 1.0).abs() <= 3.0 * se),
            Regime::Null => report.verdict(format!("n={n}"), "mean <= 1 + 3*SE", mean <= 1.0 + 3.0 * se),
            Regime::Alternative | Regime::Outside => {}
        }
    }
    report.details = json!({ "regime": regime });
    Ok(report.finish(started))
}

/// Fraction of replications whose process reaches `1/α` by `horizon`.
pub fn type1_error_mc(
    kind: ModelKind,
    spec: &EffectSpec,
    rule: &StoppingRule,
    horizon: u64,
    sim: &SimConfig,
) -> Result<VerificationReport> {
    let started = Instant::now();
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let regime = regime(kind, spec, &sim.generator)?;
    if regime == Regime::Alternative {
        return Err(Error::Config("type-I error needs a generator inside the null".into()));
    }
    let outcomes = simulate(kind, spec, sim, &[], horizon, Some(rule.log_threshold()))?;
    let hits: Vec<f64> = outcomes.iter().map(|o| if o.crossed { 1.0 } else { 0.0 }).collect();
    let (freq, se) = mean_and_se(&hits);
    let mut report = VerificationReport::new(
        "type1",
        json!({ "model": kind, "spec": spec, "sim": sim, "alpha": rule.alpha(), "horizon": horizon }),
    );
    report.checkpoints.push(horizon);
    report.mean.push(freq);
    report.standard_error.push(se);
    if regime != Regime::Outside {
        report.verdict(format!("n<={horizon}"), "frequency <= alpha + 3*SE", freq <= rule.alpha() + 3.0 * se);
    }
    report.details = json!({ "regime": regime, "rejections": hits.iter().filter(|&&h| h > 0.0).count() });
    Ok(report.finish(started))
}

/// Monte Carlo estimate of `E[ln e]` at sample size `n`. Diagnostic only.
pub fn epower_estimate(kind: ModelKind, spec: &EffectSpec, n: u64, sim: &SimConfig) -> Result<VerificationReport> {
    let started = Instant::now();
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let regime = regime(kind, spec, &sim.generator)?;
    let sim = SimConfig { checkpoints: vec![n], ..sim.clone() };
    let outcomes = simulate(kind, spec, &sim, &sim.checkpoints, n, None)?;
    let logs: Vec<f64> = outcomes.iter().map(|o| o.log_e[0]).collect();
    let (mean, se) = mean_and_se(&logs);
    let mut report = VerificationReport::new("epower", config_echo(kind, spec, &sim));
    report.checkpoints.push(n);
    report.mean.push(mean);
    report.standard_error.push(se);
    report.details = json!({ "regime": regime });
    Ok(report.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::PriorGrid;

    fn gauss(mu: f64, sigma: f64, seed: u64, reps: usize, cps: Vec<u64>) -> SimConfig {
        SimConfig::new(Generator::Gaussian { mu, sigma }, seed, reps, cps).unwrap()
    }

    #[test]
    fn regimes() {
        let up = EffectSpec::point(0.0, 0.5);
        let g = |mu| Generator::Gaussian { mu, sigma: 2.0 };
        assert_eq!(regime(ModelKind::T, &up, &g(0.0)).unwrap(), Regime::Boundary);
        assert_eq!(regime(ModelKind::T, &up, &g(-1.0)).unwrap(), Regime::Null);
        assert_eq!(regime(ModelKind::T, &up, &g(1.0)).unwrap(), Regime::Alternative);
        let down = EffectSpec::point(1.0, 0.5);
        assert_eq!(regime(ModelKind::ChiSq, &down, &Generator::Gaussian { mu: 0.0, sigma: 2.0 }).unwrap(), Regime::Null);
        let b = EffectSpec::point(0.6, 0.8);
        assert_eq!(regime(ModelKind::Bernoulli, &b, &Generator::Bernoulli { theta: 0.3 }).unwrap(), Regime::Alternative);
        assert_eq!(regime(ModelKind::T, &up, &Generator::Rademacher).unwrap(), Regime::Outside);
        assert!(matches!(regime(ModelKind::Bernoulli, &b, &g(0.0)), Err(Error::Config(_))));
    }

    #[test]
    fn reproducible_reports() {
        let spec = EffectSpec::point(0.0, 0.5);
        let sim = gauss(0.0, 1.0, 99, 3000, vec![2, 5, 10]);
        let a = mc_expectation(ModelKind::T, &spec, &sim).unwrap();
        let b = mc_expectation(ModelKind::T, &spec, &sim).unwrap();
        assert_eq!(a.results(), b.results());
        for (x, y) in a.mean.iter().zip(&b.mean) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let c = mc_expectation(ModelKind::T, &spec, &SimConfig { seed: 100, ..sim }).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn degenerate_spec_is_exactly_one() {
        let spec = EffectSpec::point(0.3, 0.3);
        let r = mc_expectation(ModelKind::T, &spec, &gauss(1.0, 1.0, 1, 200, vec![1, 4])).unwrap();
        assert_eq!(r.mean, vec![1.0, 1.0]);
        assert_eq!(r.standard_error, vec![0.0, 0.0]);
        let rule = StoppingRule::new(0.05).unwrap();
        let spec = EffectSpec::point(0.0, 0.0);
        let t1 = type1_error_mc(ModelKind::T, &spec, &rule, 30, &gauss(0.0, 1.0, 1, 200, vec![1])).unwrap();
        assert_eq!(t1.mean, vec![0.0]);
        assert!(t1.pass);
        let ep = epower_estimate(ModelKind::T, &spec, 10, &gauss(0.0, 1.0, 1, 50, vec![1])).unwrap();
        assert_eq!(ep.mean, vec![0.0]);
    }

    #[test]
    fn supermartingale_examples() {
        let spec = EffectSpec::point(0.0, 0.5);
        let r = mc_expectation(ModelKind::T, &spec, &gauss(-1.0, 2.0, 5, 20_000, vec![2, 5, 10])).unwrap();
        assert!(r.pass, "{:?}", r.mean);
        let chi = EffectSpec::point(1.0, 2.0);
        let r = mc_expectation(ModelKind::ChiSq, &chi, &gauss(7.0, 0.5, 5, 20_000, vec![10])).unwrap();
        assert!(r.pass && r.mean[0] < 1.0, "{:?}", r.mean);
    }

    #[test]
    fn calibrator_smoke_test() {
        // boundary martingale: at least 19 of 20 fresh-seed runs pass at every checkpoint
        let spec = EffectSpec::point(0.0, 0.5);
        let passes = (0..20u64)
            .filter(|&s| mc_expectation(ModelKind::T, &spec, &gauss(0.0, 1.0, 1000 + s, 4000, vec![2, 5, 10])).unwrap().pass)
            .count();
        assert!(passes >= 19, "{passes}/20");
    }

    #[test]
    fn epower_positive_under_alternative_and_mixture_dominance() {
        let sim = gauss(0.5, 1.0, 3, 2000, vec![1]);
        let point = EffectSpec::point(0.0, 0.5);
        let ep = epower_estimate(ModelKind::T, &point, 50, &sim).unwrap();
        assert!(ep.mean[0] > -3.0 * ep.standard_error[0]);
        assert!(ep.mean[0] > 0.0);

        let prior = PriorGrid::new(vec![(0.25, 0.3), (0.5, 0.7)]).unwrap();
        let mix = EffectSpec::prior(0.0, prior).unwrap();
        let em = epower_estimate(ModelKind::T, &mix, 50, &sim).unwrap();
        // same seed, same data: pathwise ln mix ≥ ln w + ln atom
        assert!(em.mean[0] >= 0.7f64.ln() + ep.mean[0] - 1e-12);
    }

    #[test]
    fn bernoulli_and_regression_generators() {
        let rule = StoppingRule::new(0.05).unwrap();
        let spec = EffectSpec::point(0.6, 0.8);
        let sim = SimConfig::new(Generator::Bernoulli { theta: 0.5 }, 8, 2000, vec![1]).unwrap();
        let r = type1_error_mc(ModelKind::Bernoulli, &spec, &rule, 100, &sim).unwrap();
        assert!(r.pass, "{:?}", r.mean);

        let gen = Generator::Regression {
            delta: 0.0,
            beta: vec![2.0, -1.0],
            sigma: 1.5,
            covariates: Default::default(),
        };
        let sim = SimConfig::new(gen, 4, 2000, vec![5, 12]).unwrap();
        let r = mc_expectation(ModelKind::Linreg, &EffectSpec::point(0.0, 0.5), &sim).unwrap();
        assert!(r.pass, "{:?} ± {:?}", r.mean, r.standard_error);
    }

    #[test]
    fn type1_rejects_alternative_generator() {
        let rule = StoppingRule::new(0.05).unwrap();
        let err = type1_error_mc(ModelKind::T, &EffectSpec::point(0.0, 0.5), &rule, 10, &gauss(1.0, 1.0, 1, 10, vec![1]));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
