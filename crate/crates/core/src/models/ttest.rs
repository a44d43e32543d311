//! Scale-invariant one-sided t-test.
//!
//! Observations are coarsened to `U_i = Y_i / |Y_1|`, which removes the scale
//! nuisance. For `n ≥ 2` the t-statistic of the coarsened stream is sufficient
//! and follows a noncentral t law with `n − 1` degrees of freedom and
//! noncentrality `√n·δ`. At `n = 1` only the sign of `Y_1` is observed and the
//! ratio is `Φ(δ⁺u₁)/Φ(δ₀u₁)`.

use crate::error::{Error, Result};
use crate::process::Model;
use crate::specfun::{log_norm_cdf, nct_logratio};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestState {
    pub n: u64,
    /// |Y₁|; zero until the first observation.
    pub abs_y1: f64,
    /// Sign of U₁ (±1); zero until the first observation.
    pub sign_u1: f64,
    pub sum_u: f64,
    pub sum_u2: f64,
}

impl TTestState {
    pub const EMPTY: TTestState = TTestState { n: 0, abs_y1: 0.0, sign_u1: 0.0, sum_u: 0.0, sum_u2: 0.0 };

    /// Builds the state from a whole sample at once.
    pub fn from_batch(ys: &[f64]) -> Result<Self> {
        let Some(&y1) = ys.first() else {
            return Ok(Self::EMPTY);
        };
        check_first(y1)?;
        let scale = y1.abs();
        let mut sum_u = 0.0;
        let mut sum_u2 = 0.0;
        for &y in ys {
            check_finite(y)?;
            let u = y / scale;
            sum_u += u;
            sum_u2 += u * u;
        }
        Ok(TTestState { n: ys.len() as u64, abs_y1: scale, sign_u1: y1.signum(), sum_u, sum_u2 })
    }
}

fn check_first(y: f64) -> Result<()> {
    check_finite(y)?;
    if y == 0.0 {
        return Err(Error::data(
            "t-test coarsening U_i = Y_i/|Y_1|",
            "first observation is exactly zero; the scale-invariant coarsening is undefined",
        ));
    }
    Ok(())
}

fn check_finite(y: f64) -> Result<()> {
    if !y.is_finite() {
        return Err(Error::data("t-test support", format!("observation {y} is not finite")));
    }
    Ok(())
}

/// T_n of the coarsened stream; ±∞ when the empirical variance vanishes.
pub fn t_statistic(state: &TTestState) -> Result<f64> {
    if state.n < 2 {
        return Err(Error::State(format!("t-statistic needs n ≥ 2, have n = {}", state.n)));
    }
    let n = state.n as f64;
    let ss = state.sum_u2 - state.sum_u * state.sum_u / n;
    let numerator = state.sum_u / n.sqrt();
    if ss <= 0.0 {
        // sum_u cannot be zero here: all coarsened values equal U₁ = ±1.
        return Ok(if state.sum_u > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    Ok(numerator / (ss / (n - 1.0)).sqrt())
}

/// Log process value for effect sizes `delta0` (null) and `delta_plus`.
pub fn t_log_evalue(state: &TTestState, delta0: f64, delta_plus: f64) -> Result<f64> {
    if delta0 == delta_plus {
        return Ok(0.0);
    }
    match state.n {
        0 => Ok(0.0),
        1 => {
            let u = state.sign_u1;
            Ok(log_norm_cdf(delta_plus * u)? - log_norm_cdf(delta0 * u)?)
        }
        n => {
            let t = t_statistic(state)?;
            let root_n = (n as f64).sqrt();
            nct_logratio(t, n as f64 - 1.0, root_n * delta_plus, root_n * delta0)
        }
    }
}

/// The t-test as a [`Model`] over scalar observations.
#[derive(Debug, Clone, Copy, Default)]
pub struct TTest;

impl Model for TTest {
    type State = TTestState;
    type Observation = f64;

    fn name(&self) -> &'static str {
        "t"
    }

    fn initial_state(&self) -> TTestState {
        TTestState::EMPTY
    }

    fn update(&self, state: &TTestState, &y: &f64) -> Result<TTestState> {
        if state.n == 0 {
            check_first(y)?;
            let sign = y.signum();
            return Ok(TTestState { n: 1, abs_y1: y.abs(), sign_u1: sign, sum_u: sign, sum_u2: 1.0 });
        }
        check_finite(y)?;
        let u = y / state.abs_y1;
        Ok(TTestState { n: state.n + 1, sum_u: state.sum_u + u, sum_u2: state.sum_u2 + u * u, ..*state })
    }

    fn statistic(&self, state: &TTestState) -> Option<f64> {
        match state.n {
            0 => None,
            1 => Some(state.sign_u1),
            _ => t_statistic(state).ok(),
        }
    }

    fn log_evalue(&self, state: &TTestState, null: f64, alt: f64) -> Result<f64> {
        t_log_evalue(state, null, alt)
    }

    fn validate_parameter(&self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("effect size {value} is not finite")));
        }
        Ok(())
    }
}
