//! The concrete e-processes, plus [`AnyTest`] for runtime model selection.

pub mod bernoulli;
pub mod chisq;
pub mod regression;
pub mod ttest;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bernoulli::{bern_log_evalue, bern_log_likelihood, bern_log_ratio, Bernoulli, BernoulliState};
pub use chisq::{chisq_log_evalue, chisq_q, ChiSq, ChiSqState};
pub use regression::{
    nullspace_basis, reg_log_evalue, reg_t_statistic, reg_t_statistic_with_basis, RegTStat, Regression,
    RegressionRow, RegressionSnapshot,
};
pub use ttest::{t_log_evalue, t_statistic, TTest, TTestState};

use crate::error::{Error, Result};
use crate::process::{EffectSpec, EProcessState, SequentialTest, StoppingRule, TrajectoryRecord, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    T,
    ChiSq,
    Linreg,
    Bernoulli,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::T => "t",
            ModelKind::ChiSq => "chisq",
            ModelKind::Linreg => "linreg",
            ModelKind::Bernoulli => "bernoulli",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(ModelKind::T),
            "chisq" => Ok(ModelKind::ChiSq),
            "linreg" => Ok(ModelKind::Linreg),
            "bernoulli" => Ok(ModelKind::Bernoulli),
            other => Err(Error::Config(format!("unknown model '{other}' (expected t, chisq, linreg or bernoulli)"))),
        }
    }
}

/// One observation for any model.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Scalar(f64),
    Binary(u8),
    Row(RegressionRow),
}

/// A [`SequentialTest`] over a model chosen at runtime.
#[derive(Debug, Clone)]
pub enum AnyTest {
    T(SequentialTest<TTest>),
    ChiSq(SequentialTest<ChiSq>),
    Linreg(SequentialTest<Regression>),
    Bernoulli(SequentialTest<Bernoulli>),
}

macro_rules! dispatch {
    ($self:expr, $t:ident => $body:expr) => {
        match $self {
            AnyTest::T($t) => $body,
            AnyTest::ChiSq($t) => $body,
            AnyTest::Linreg($t) => $body,
            AnyTest::Bernoulli($t) => $body,
        }
    };
}

impl AnyTest {
    /// `nuisance_dim` is the number of `z` covariates (linreg only).
    pub fn new(kind: ModelKind, spec: EffectSpec, rule: StoppingRule, nuisance_dim: usize) -> Result<Self> {
        Ok(match kind {
            ModelKind::T => AnyTest::T(SequentialTest::new(TTest, spec, rule)?),
            ModelKind::ChiSq => AnyTest::ChiSq(SequentialTest::new(ChiSq, spec, rule)?),
            ModelKind::Linreg => AnyTest::Linreg(SequentialTest::new(Regression { d: nuisance_dim }, spec, rule)?),
            ModelKind::Bernoulli => AnyTest::Bernoulli(SequentialTest::new(Bernoulli, spec, rule)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyTest::T(_) => ModelKind::T,
            AnyTest::ChiSq(_) => ModelKind::ChiSq,
            AnyTest::Linreg(_) => ModelKind::Linreg,
            AnyTest::Bernoulli(_) => ModelKind::Bernoulli,
        }
    }

    pub fn observe(&mut self, datum: &Datum) -> Result<TrajectoryRecord> {
        match (self, datum) {
            (AnyTest::T(t), Datum::Scalar(y)) => t.observe(y),
            (AnyTest::ChiSq(t), Datum::Scalar(y)) => t.observe(y),
            (AnyTest::Bernoulli(t), Datum::Binary(y)) => t.observe(y),
            (AnyTest::Bernoulli(t), Datum::Scalar(y)) => {
                let bit = if *y == 0.0 {
                    0
                } else if *y == 1.0 {
                    1
                } else {
                    return Err(Error::data("bernoulli support", format!("observation {y} is not 0 or 1")));
                };
                t.observe(&bit)
            }
            (AnyTest::Linreg(t), Datum::Row(row)) => t.observe(row),
            (test, other) => Err(Error::Contract(format!("{} model cannot take datum {other:?}", test.kind()))),
        }
    }

    pub fn n(&self) -> u64 {
        dispatch!(self, t => t.state().n)
    }

    pub fn log_e(&self) -> f64 {
        dispatch!(self, t => t.state().log_e)
    }

    pub fn trajectory(&self) -> &Trajectory {
        dispatch!(self, t => t.trajectory())
    }

    pub fn spec(&self) -> &EffectSpec {
        dispatch!(self, t => t.spec())
    }

    pub fn rule(&self) -> &StoppingRule {
        dispatch!(self, t => t.rule())
    }

    /// Process value and count without the model-specific record.
    pub fn summary_state(&self) -> EProcessState<()> {
        EProcessState { n: self.n(), log_e: self.log_e(), model_state: () }
    }
}
