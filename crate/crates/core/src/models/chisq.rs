//! Location-invariant χ²-test for a Gaussian scale.
//!
//! `U_i = Y_i − Y_1` removes the mean. The unnormalised empirical variance
//! `Q_n` is sufficient and the likelihood ratio is
//! `(σ₀/σ⁺)^{n−1} · exp(½(σ₀⁻² − σ⁺⁻²) Q_n)`.

use crate::error::{Error, Result};
use crate::process::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSqState {
    pub n: u64,
    pub y1: f64,
    pub sum_u: f64,
    pub sum_u2: f64,
}

impl ChiSqState {
    pub const EMPTY: ChiSqState = ChiSqState { n: 0, y1: 0.0, sum_u: 0.0, sum_u2: 0.0 };
}

/// Q_n = Σu² − (Σu)²/n, clamped at zero against rounding.
pub fn chisq_q(state: &ChiSqState) -> f64 {
    if state.n == 0 {
        return 0.0;
    }
    (state.sum_u2 - state.sum_u * state.sum_u / state.n as f64).max(0.0)
}

pub fn chisq_log_evalue(state: &ChiSqState, sigma0: f64, sigma_plus: f64) -> Result<f64> {
    for s in [sigma0, sigma_plus] {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::domain("chisq_log_evalue", format!("scale {s} must be positive and finite")));
        }
    }
    if sigma0 == sigma_plus || state.n <= 1 {
        return Ok(0.0);
    }
    let n = state.n as f64;
    let curvature = 0.5 * (sigma0.powi(-2) - sigma_plus.powi(-2));
    Ok((n - 1.0) * (sigma0 / sigma_plus).ln() + curvature * chisq_q(state))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChiSq;

impl Model for ChiSq {
    type State = ChiSqState;
    type Observation = f64;

    fn name(&self) -> &'static str {
        "chisq"
    }

    fn initial_state(&self) -> ChiSqState {
        ChiSqState::EMPTY
    }

    fn update(&self, state: &ChiSqState, &y: &f64) -> Result<ChiSqState> {
        if !y.is_finite() {
            return Err(Error::data("chi-square support", format!("observation {y} is not finite")));
        }
        if state.n == 0 {
            return Ok(ChiSqState { n: 1, y1: y, sum_u: 0.0, sum_u2: 0.0 });
        }
        let u = y - state.y1;
        Ok(ChiSqState { n: state.n + 1, y1: state.y1, sum_u: state.sum_u + u, sum_u2: state.sum_u2 + u * u })
    }

    fn statistic(&self, state: &ChiSqState) -> Option<f64> {
        (state.n > 0).then(|| chisq_q(state))
    }

    fn log_evalue(&self, state: &ChiSqState, null: f64, alt: f64) -> Result<f64> {
        chisq_log_evalue(state, null, alt)
    }

    fn validate_parameter(&self, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("scale parameter {value} must be positive")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::chisq_scaled_logpdf;

    fn feed(ys: &[f64]) -> ChiSqState {
        ys.iter().fold(ChiSq.initial_state(), |s, y| ChiSq.update(&s, y).unwrap())
    }

    #[test]
    fn q_examples() {
        let s = feed(&[1.0, 2.0, 3.0]);
        assert_eq!(chisq_q(&s), 2.0);
        assert_eq!(chisq_q(&feed(&[4.2; 6])), 0.0);
        let shifted = feed(&[1001.0, 1002.0, 1003.0]);
        assert!((chisq_q(&shifted) - 2.0).abs() <= 2e-10);
    }

    #[test]
    fn evalue_examples() {
        let s = feed(&[1.0, 2.0, 3.0]);
        assert_eq!(chisq_log_evalue(&s, 1.3, 1.3).unwrap(), 0.0);
        let l = chisq_log_evalue(&s, 1.0, 2.0).unwrap();
        assert!((l - (2.0 * 0.5f64.ln() + 0.75)).abs() < 1e-15);
        assert!((l.exp() - 0.529_250).abs() < 1e-6);
        assert_eq!(chisq_log_evalue(&feed(&[5.0]), 1.0, 2.0).unwrap(), 0.0);
        assert!(chisq_log_evalue(&s, 0.0, 1.0).is_err());
    }

    #[test]
    fn matches_scaled_density_ratio() {
        let s = feed(&[0.3, -1.1, 2.5, 0.7, 1.9]);
        let q = chisq_q(&s);
        let (s0, sp) = (0.8f64, 1.7f64);
        let direct = chisq_log_evalue(&s, s0, sp).unwrap();
        let ratio = chisq_scaled_logpdf(q, 4.0, sp * sp).unwrap() - chisq_scaled_logpdf(q, 4.0, s0 * s0).unwrap();
        assert!((direct - ratio).abs() < 1e-9);
    }
}
