//! Deterministic checks: MLR grids, the e-variable integral and the
//! Bernoulli monotonicity conditions.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::models::bern_log_ratio;
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{nct_logpdf, nct_logratio, NoncentralTParams};

const MLR_SLACK: f64 = 1e-10;
pub const EVARIABLE_ABS_TOL: f64 = 1e-9;
/// The e-variable integral is taken over |t| ≤ this; the rest is bounded
/// analytically.
const EVARIABLE_T_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlrViolation {
    pub index: usize,
    pub t_prev: f64,
    pub t: f64,
    /// Decrease of the log ratio from `t_prev` to `t`.
    pub drop: f64,
}

fn check_sorted(grid: &[f64], what: &str) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Contract(format!("{what} must be finite and sorted ascending")));
    }
    Ok(())
}

/// Points where `t ↦ nct_logratio(t, ν, λ⁺, λ₀)` decreases by more than 1e−10.
pub fn mlr_grid_check(nu: f64, lambda_plus: f64, lambda_0: f64, grid: &[f64]) -> Result<Vec<MlrViolation>> {
    check_sorted(grid, "grid")?;
    let values = grid.iter().map(|&t| nct_logratio(t, nu, lambda_plus, lambda_0)).collect::<Result<Vec<_>>>()?;
    Ok((1..grid.len())
        .filter(|&i| values[i] < values[i - 1] - MLR_SLACK)
        .map(|i| MlrViolation { index: i, t_prev: grid[i - 1], t: grid[i], drop: values[i - 1] - values[i] })
        .collect())
}

/// `[lo, lo + step, …, hi]`, computed by index to avoid drift.
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + i as f64 * step).collect()
}

pub fn mlr_report(nu: f64, lambda_plus: f64, lambda_0: f64, grid: &[f64]) -> Result<VerificationReport> {
    let started = Instant::now();
    let violations = mlr_grid_check(nu, lambda_plus, lambda_0, grid)?;
    let mut report = VerificationReport::new(
        "mlr",
        json!({ "nu": nu, "lambda_plus": lambda_plus, "lambda_0": lambda_0, "grid_points": grid.len(),
                "grid_min": grid.first(), "grid_max": grid.last() }),
    );
    report.verdict("monotone", "log ratio nondecreasing up to 1e-10", violations.is_empty());
    report.details = json!({ "violations": violations.len(), "first": violations.iter().take(20).collect::<Vec<_>>() });
    Ok(report.finish(started))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvariablePoint {
    pub lambda_true: f64,
    /// `∫ (f_{λ⁺}/f_{λ₀})(t) f_λ(t) dt`, including the tail estimate.
    pub h: f64,
    pub error_estimate: f64,
    /// Contribution from |t| > 1e12, from the power-law tail.
    pub tail: f64,
}

fn ln_cosh(w: f64) -> f64 {
    let a = w.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `h(λ)` for each true noncentrality in `lambda_true_grid`.
///
/// The integral runs in `w = asinh(t)`, which turns the polynomial tails into
/// exponential ones. Beyond `|t| = 10¹²` the integrand behaves like
/// `c·|t|^{−ν−1}` and contributes `g(T)·T/ν`.
pub fn evariable_quadrature_check(
    nu: f64,
    lambda_plus: f64,
    lambda_0: f64,
    lambda_true_grid: &[f64],
) -> Result<Vec<EvariablePoint>> {
    if ![nu, lambda_plus, lambda_0].iter().all(|v| v.is_finite()) || lambda_true_grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("e-variable check needs finite parameters".into()));
    }
    let w_max = EVARIABLE_T_MAX.asinh();
    let opts = QuadOptions { abs_tol: EVARIABLE_ABS_TOL, rel_tol: 0.0, max_intervals: 20_000, initial_panels: 64 };
    lambda_true_grid
        .iter()
        .map(|&lam| {
            let params = NoncentralTParams::new(nu, lam)?;
            let log_g = |t: f64| -> f64 {
                match (nct_logratio(t, nu, lambda_plus, lambda_0), nct_logpdf(t, params)) {
                    (Ok(r), Ok(p)) => r + p,
                    _ => f64::NAN,
                }
            };
            let res = integrate(|w| (log_g(w.sinh()) + ln_cosh(w)).exp(), -w_max, w_max, opts).map_err(|e| {
                Error::Numerical(format!(
                    "e-variable integral failed for nu = {nu}, lambda+ = {lambda_plus}, lambda0 = {lambda_0}, lambda = {lam}: {e}"
                ))
            })?;
            let tail = (log_g(EVARIABLE_T_MAX).exp() + log_g(-EVARIABLE_T_MAX).exp()) * EVARIABLE_T_MAX / nu;
            Ok(EvariablePoint { lambda_true: lam, h: res.value + tail, error_estimate: res.error_estimate, tail })
        })
        .collect()
}

/// Runs the e-variable check and attaches the three verdicts: `h(λ₀) = 1`
/// (when λ₀ is on the grid), monotonicity and `h ≤ 1` below λ₀.
pub fn evariable_report(nu: f64, lambda_plus: f64, lambda_0: f64, lambda_true_grid: &[f64]) -> Result<VerificationReport> {
    let started = Instant::now();
    check_sorted(lambda_true_grid, "lambda_true_grid")?;
    let points = evariable_quadrature_check(nu, lambda_plus, lambda_0, lambda_true_grid)?;
    let mut report = VerificationReport::new(
        "evariable",
        json!({ "nu": nu, "lambda_plus": lambda_plus, "lambda_0": lambda_0, "lambda_true": lambda_true_grid }),
    );
    if let Some(p) = points.iter().find(|p| p.lambda_true == lambda_0) {
        report.verdict("h(lambda0)", "|h - 1| <= 1e-6", (p.h - 1.0).abs() <= 1e-6);
    }
    let monotone = points.windows(2).all(|w| w[1].h >= w[0].h - 1e-8);
    report.verdict("monotone", "h nondecreasing in lambda up to 1e-8", monotone);
    let below = points.iter().filter(|p| p.lambda_true <= lambda_0).all(|p| p.h <= 1.0 + 1e-6);
    report.verdict("null side", "h <= 1 + 1e-6 for lambda <= lambda0", below);
    report.details = json!({ "points": points });
    Ok(report.finish(started))
}

/// Mixed central difference of `ln f_θ(T; n)` in `(θ, T)`, with `T` real.
///
/// Writing `a = ln(θ/(1−θ))`, `ln f_θ = n·ln(1−θ) + T·a + ln(1 + e^{−(2T−n)a})`.
/// The first term has zero mixed difference and the second has mixed
/// difference `(a(θ+h) − a(θ−h))/2h` exactly, so only the last term is
/// differenced numerically. This keeps rounding noise near 1e−11.
pub fn bern_mixed_difference(theta: f64, t: f64, n: f64) -> f64 {
    let h = 1e-4f64.min((1.0 - theta) / 4.0).min(theta / 4.0);
    let k = 1e-2;
    let a = |th: f64| th.ln() - (-th).ln_1p();
    let soft = |th: f64, tt: f64| {
        let x = -(2.0 * tt - n) * a(th);
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let linear = (a(theta + h) - a(theta - h)) / (2.0 * h);
    let curved = (soft(theta + h, t + k) - soft(theta + h, t - k) - soft(theta - h, t + k) + soft(theta - h, t - k)) / (4.0 * h * k);
    linear + curved
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernViolation {
    pub theta: f64,
    pub n: u64,
    pub t: u64,
    pub value: f64,
}

/// Grid points where the mixed difference falls below −1e−8.
pub fn bern_positivity_check(theta_grid: &[f64], n_max: u64) -> Result<Vec<BernViolation>> {
    if let Some(th) = theta_grid.iter().find(|&&th| !(th > 0.5 && th < 1.0)) {
        return Err(Error::Config(format!("theta {th} outside (1/2, 1)")));
    }
    let mut out = Vec::new();
    for &theta in theta_grid {
        for n in 1..=n_max {
            for t in n.div_ceil(2)..=n {
                let value = bern_mixed_difference(theta, t as f64, n as f64);
                if value < -1e-8 {
                    out.push(BernViolation { theta, n, t, value });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernMlrViolation {
    pub theta0: f64,
    pub theta_plus: f64,
    pub n: u64,
    pub t: u64,
    pub drop: f64,
}

/// Exhaustive check that the Bernoulli log ratio is nondecreasing in `T_n`
/// over `T_n ∈ {⌈n/2⌉, …, n}` for every `n ≤ n_max` and every pair
/// `θ₀ < θ⁺` drawn from `theta_grid`.
pub fn bern_mlr_exhaustive(theta_grid: &[f64], n_max: u64) -> Result<Vec<BernMlrViolation>> {
    let mut out = Vec::new();
    for (i, &theta0) in theta_grid.iter().enumerate() {
        for &theta_plus in &theta_grid[i + 1..] {
            let (theta0, theta_plus) = (theta0.min(theta_plus), theta0.max(theta_plus));
            for n in 1..=n_max {
                let mut prev = bern_log_ratio(n.div_ceil(2), n, theta0, theta_plus)?;
                for t in n.div_ceil(2) + 1..=n {
                    let r = bern_log_ratio(t, n, theta0, theta_plus)?;
                    if r < prev - MLR_SLACK {
                        out.push(BernMlrViolation { theta0, theta_plus, n, t, drop: prev - r });
                    }
                    prev = r;
                }
            }
        }
    }
    Ok(out)
}

pub fn bern_report(theta_grid: &[f64], n_max: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let pos = bern_positivity_check(theta_grid, n_max)?;
    let mut with_half = vec![0.5];
    with_half.extend_from_slice(theta_grid);
    let mlr = bern_mlr_exhaustive(&with_half, n_max)?;
    let mut report = VerificationReport::new("bern-positivity", json!({ "theta": theta_grid, "n_max": n_max }));
    report.verdict("mixed difference", "d2 ln f / dtheta dT >= -1e-8", pos.is_empty());
    report.verdict("ratio monotone in T", "nondecreasing up to 1e-10", mlr.is_empty());
    report.details = json!({
        "positivity_violations": pos.iter().take(20).collect::<Vec<_>>(),
        "mlr_violations": mlr.iter().take(20).collect::<Vec<_>>(),
    });
    Ok(report.finish(started))
}
