//! Label-agnostic Bernoulli test.
//!
//! Coarsening `U_i = 1{Y_i = Y_1}` makes the stream invariant to swapping the
//! labels. `T_n = max(ΣU, n − ΣU)` is sufficient; the likelihood is a sum of
//! the two i.i.d. branches `θ^T (1−θ)^{n−T} + (1−θ)^T θ^{n−T}`.

use crate::error::{Error, Result};
use crate::process::Model;
use crate::specfun::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BernoulliState {
    pub n: u64,
    pub y1: u8,
    pub count_eq: u64,
}

impl BernoulliState {
    pub const EMPTY: BernoulliState = BernoulliState { n: 0, y1: 0, count_eq: 0 };

    /// max(count_eq, n − count_eq)
    pub fn t_stat(&self) -> u64 {
        self.count_eq.max(self.n - self.count_eq)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.5..1.0).contains(&theta) {
        return Err(Error::domain(
            "bern_log_evalue",
            format!("parameter {theta} outside [1/2, 1); map θ ↦ 1 − θ (the label flip) to use the canonical half"),
        ));
    }
    Ok(())
}

/// ln of the label-agnostic likelihood at integer or real `t`.
pub fn bern_log_likelihood(theta: f64, t: f64, n: f64) -> f64 {
    let (lt, lf) = (theta.ln(), (-theta).ln_1p());
    log_add_exp(t * lt + (n - t) * lf, t * lf + (n - t) * lt)
}

/// ln p_{θ⁺}/p_{θ₀} at the sufficient statistic `t` out of `n`.
pub fn bern_log_ratio(t: u64, n: u64, theta0: f64, theta_plus: f64) -> Result<f64> {
    check_theta(theta0)?;
    check_theta(theta_plus)?;
    if theta0 == theta_plus || n == 0 {
        return Ok(0.0);
    }
    let (t, n) = (t as f64, n as f64);
    Ok(bern_log_likelihood(theta_plus, t, n) - bern_log_likelihood(theta0, t, n))
}

pub fn bern_log_evalue(state: &BernoulliState, theta0: f64, theta_plus: f64) -> Result<f64> {
    bern_log_ratio(state.t_stat(), state.n, theta0, theta_plus)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Bernoulli;

impl Model for Bernoulli {
    type State = BernoulliState;
    type Observation = u8;

    fn name(&self) -> &'static str {
        "bernoulli"
    }

    fn initial_state(&self) -> BernoulliState {
        BernoulliState::EMPTY
    }

    fn update(&self, state: &BernoulliState, &y: &u8) -> Result<BernoulliState> {
        if y > 1 {
            return Err(Error::data("bernoulli support", format!("observation {y} is not 0 or 1")));
        }
        if state.n == 0 {
            return Ok(BernoulliState { n: 1, y1: y, count_eq: 1 });
        }
        let eq = u64::from(y == state.y1);
        Ok(BernoulliState { n: state.n + 1, y1: state.y1, count_eq: state.count_eq + eq })
    }

    fn statistic(&self, state: &BernoulliState) -> Option<f64> {
        (state.n > 0).then(|| state.t_stat() as f64)
    }

    fn log_evalue(&self, state: &BernoulliState, null: f64, alt: f64) -> Result<f64> {
        bern_log_evalue(state, null, alt)
    }

    fn validate_parameter(&self, value: f64) -> Result<()> {
        check_theta(value).map_err(|e| Error::Config(e.to_string()))
    }
}
