//! Exact expectation of the t-test process under Rademacher data.
//!
//! Rademacher data are sub-Gaussian but not Gaussian, and the t-test process
//! has expectation `1 + (n−1)/6·δ⁴ + O(δ⁶)` under them, so it is not an
//! e-variable for that wider null.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{mc_expectation, Generator, SimConfig, VerificationReport};
use crate::error::{Error, Result};
use crate::models::{t_log_evalue, ModelKind, TTest, TTestState};
use crate::process::{EffectSpec, Model};

pub const MAX_ENUMERATION_N: u32 = 20;

/// `E[M_n^δ]` with `δ₀ = 0`, averaging over all `2ⁿ` sign sequences.
///
/// Paths are grouped by their sufficient statistic so each distinct value of
/// the process is evaluated once; the group counts are exact.
pub fn rademacher_exact_expectation(n: u32, delta: f64) -> Result<f64> {
    if !(2..=MAX_ENUMERATION_N).contains(&n) {
        return Err(Error::Config(format!("enumeration needs 2 <= n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    if !delta.is_finite() {
        return Err(Error::Config(format!("delta {delta} is not finite")));
    }
    let mut groups: BTreeMap<(u64, u64), (TTestState, u64)> = BTreeMap::new();
    for mask in 0u32..1 << n {
        let mut state = TTest.initial_state();
        for i in 0..n {
            let y = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            state = TTest.update(&state, &y)?;
        }
        groups.entry((state.sum_u.to_bits(), state.sum_u2.to_bits())).or_insert((state, 0)).1 += 1;
    }
    let mut total = 0.0;
    for (state, count) in groups.values() {
        total += *count as f64 * t_log_evalue(state, 0.0, delta)?.exp();
    }
    Ok(total / f64::from(1u32 << n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorFit {
    pub n: u32,
    /// Extrapolated `lim_{δ→0} (E[M_n^δ] − 1)/δ⁴`.
    pub coefficient: f64,
    /// `(n − 1)/6`.
    pub expected: f64,
    pub relative_error: f64,
    /// Within 5% of `expected`.
    pub pass: bool,
    /// `(δ, E[M_n^δ], (E − 1)/δ⁴)` per input delta.
    pub points: Vec<(f64, f64, f64)>,
}

/// Richardson (Neville) extrapolation of `(E − 1)/δ⁴` to `δ = 0` in the
/// variable `δ²`.
pub fn taylor_coeff_fit(n: u32, deltas: &[f64]) -> Result<TaylorFit> {
    if deltas.len() < 3 || deltas.iter().any(|&d| !(d > 0.0 && d <= 0.3)) {
        return Err(Error::Config("need at least 3 deltas in (0, 0.3]".into()));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Numerical("degenerate fit: repeated delta".into()));
    }
    let mut points = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let e = rademacher_exact_expectation(n, d)?;
        points.push((d, e, (e - 1.0) / d.powi(4)));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0 * p.0).collect();
    let mut p: Vec<f64> = points.iter().map(|p| p.2).collect();
    for m in 1..p.len() {
        for i in 0..p.len() - m {
            p[i] = (x[i] * p[i + 1] - x[i + m] * p[i]) / (x[i] - x[i + m]);
        }
    }
    let coefficient = p[0];
    if !coefficient.is_finite() {
        return Err(Error::Numerical(format!("degenerate fit: extrapolated value {coefficient}")));
    }
    let expected = f64::from(n - 1) / 6.0;
    let relative_error = (coefficient - expected).abs() / expected;
    Ok(TaylorFit { n, coefficient, expected, relative_error, pass: relative_error <= 0.05, points })
}

/// Exact expectations above one at each delta, plus the Taylor coefficient.
pub fn counterexample_report(n: u32, deltas: &[f64]) -> Result<VerificationReport> {
    let started = Instant::now();
    let fit = taylor_coeff_fit(n, deltas)?;
    let mut report = VerificationReport::new("counterexample", json!({ "n": n, "deltas": deltas }));
    for &(d, e, _) in &fit.points {
        report.verdict(format!("delta={d}"), "E[M_n] > 1", e > 1.0);
    }
    report.verdict("taylor coefficient", "within 5% of (n-1)/6", fit.pass);
    report.details = serde_json::to_value(&fit).expect("fit serialises");
    Ok(report.finish(started))
}

/// Exact enumeration against a Monte Carlo estimate from the simulator.
pub fn rademacher_mc_report(n: u32, delta: f64, reps: usize, seed: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let exact = rademacher_exact_expectation(n, delta)?;
    let sim = SimConfig::new(Generator::Rademacher, seed, reps, vec![u64::from(n)])?;
    let mc = mc_expectation(ModelKind::T, &EffectSpec::point(0.0, delta), &sim)?;
    let (mean, se) = (mc.mean[0], mc.standard_error[0]);
    let mut report = VerificationReport::new("rademacher", json!({ "n": n, "delta": delta, "reps": reps, "seed": seed }));
    report.checkpoints.push(u64::from(n));
    report.mean.push(mean);
    report.standard_error.push(se);
    report.verdict("agreement", "|mc - exact| <= 4*SE", (mean - exact).abs() <= 4.0 * se);
    report.details = json!({ "exact": exact });
    Ok(report.finish(started))
}
