//! Model-agnostic e-process machinery.
//!
//! A [`Model`] knows how to fold one observation into its sufficient
//! statistic and how to read the likelihood ratio off that statistic. The
//! process value is always recomputed from the current statistic, never
//! accumulated as a running product, and carried as a natural log.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided test model: coarsening, sufficient statistic, closed-form ratio.
pub trait Model {
    type State: Clone + Debug;
    type Observation: ?Sized;

    fn name(&self) -> &'static str;

    /// Sufficient-statistic record before any observation.
    fn initial_state(&self) -> Self::State;

    /// Folds `obs` into `state`, returning the new state.
    fn update(&self, state: &Self::State, obs: &Self::Observation) -> Result<Self::State>;

    /// The test statistic at the current state, if it is defined there.
    fn statistic(&self, state: &Self::State) -> Option<f64>;

    /// Log likelihood ratio of alternative `alt` against null `null`.
    fn log_evalue(&self, state: &Self::State, null: f64, alt: f64) -> Result<f64>;

    /// Whether the state carries information about the effect (regression
    /// startup steps do not).
    fn is_informative(&self, _state: &Self::State) -> bool {
        true
    }

    /// Checks that a null or alternative parameter is admissible.
    fn validate_parameter(&self, _value: f64) -> Result<()> {
        Ok(())
    }
}

/// Discrete prior over alternative effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorGrid {
    atoms: Vec<(f64, f64)>,
}

impl PriorGrid {
    /// Builds a grid from `(effect, weight)` atoms; weights must be positive
    /// and sum to one within 1e-12.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Contract("prior grid needs at least one atom".into()));
        }
        for &(d, w) in &atoms {
            if !d.is_finite() {
                return Err(Error::Contract(format!("prior atom {d} is not finite")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Contract(format!("prior weight {w} must be positive")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("prior weights sum to {total}, expected 1")));
        }
        Ok(PriorGrid { atoms })
    }

    /// Like [`PriorGrid::new`] but rescales weights whose sum is within
    /// `tolerance` of one.
    pub fn normalized(atoms: Vec<(f64, f64)>, tolerance: f64) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if total.is_nan() || (total - 1.0).abs() > tolerance {
            return Err(Error::Contract(format!(
                "prior weights sum to {total}, not within {tolerance} of 1"
            )));
        }
        Self::new(atoms.into_iter().map(|(d, w)| (d, w / total)).collect())
    }

    pub fn point(effect: f64) -> Result<Self> {
        Self::new(vec![(effect, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Point(f64),
    Prior(PriorGrid),
}

/// Null boundary plus the alternative the likelihood ratio is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub null: f64,
    pub alternative: Alternative,
}

impl EffectSpec {
    pub fn point(null: f64, alt: f64) -> Self {
        EffectSpec { null, alternative: Alternative::Point(alt) }
    }

    /// Prior alternative; every atom must lie at or above the null boundary.
    pub fn prior(null: f64, prior: PriorGrid) -> Result<Self> {
        if let Some(&(d, _)) = prior.atoms().iter().find(|a| a.0 < null) {
            return Err(Error::Contract(format!("prior atom {d} lies below the null boundary {null}")));
        }
        Ok(EffectSpec { null, alternative: Alternative::Prior(prior) })
    }

    /// False when a point alternative sits below the null, in which case the
    /// one-sided supermartingale guarantee does not apply.
    pub fn guarantee_holds(&self) -> bool {
        match &self.alternative {
            Alternative::Point(alt) => *alt >= self.null,
            Alternative::Prior(_) => true,
        }
    }

    /// True when the alternative coincides with the null (ratio ≡ 1).
    pub fn is_degenerate(&self) -> bool {
        match &self.alternative {
            Alternative::Point(alt) => *alt == self.null,
            Alternative::Prior(p) => p.atoms().iter().all(|a| a.0 == self.null),
        }
    }

    /// Checks every parameter against the model's domain.
    pub fn validate<M: Model>(&self, model: &M) -> Result<()> {
        model.validate_parameter(self.null)?;
        match &self.alternative {
            Alternative::Point(alt) => model.validate_parameter(*alt),
            Alternative::Prior(p) => p.atoms().iter().try_for_each(|a| model.validate_parameter(a.0)),
        }
    }
}

/// Process value together with the model's sufficient statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EProcessState<S> {
    pub n: u64,
    pub log_e: f64,
    pub model_state: S,
}

impl<S> EProcessState<S> {
    pub fn fresh<M: Model<State = S>>(model: &M) -> Self {
        EProcessState { n: 0, log_e: 0.0, model_state: model.initial_state() }
    }
}

/// Level-α stopping rule: reject once the e-value reaches `1/α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    alpha: f64,
}

impl StoppingRule {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(StoppingRule { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn threshold(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn log_threshold(&self) -> f64 {
        self.threshold().ln()
    }
}

/// Linear-scale e-value; `overflow` marks an `exp` that left the f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EValue {
    pub value: f64,
    pub overflow: bool,
}

pub fn evalue<S>(state: &EProcessState<S>) -> EValue {
    evalue_from_log(state.log_e)
}

pub fn evalue_from_log(log_e: f64) -> EValue {
    let value = log_e.exp();
    EValue { value, overflow: value.is_infinite() && log_e.is_finite() }
}

/// `ln Σ_j w_j exp(log_e_j)`.
pub fn mixture_log_evalue(component_log_es: &[f64], prior: &PriorGrid) -> Result<f64> {
    if component_log_es.len() != prior.len() {
        return Err(Error::Contract(format!(
            "{} components for a prior with {} atoms",
            component_log_es.len(),
            prior.len()
        )));
    }
    let mut acc = crate::specfun::LogSumExp::new();
    for (l, &(_, w)) in component_log_es.iter().zip(prior.atoms()) {
        acc.push(w.ln() + l);
    }
    Ok(acc.value())
}

pub fn should_reject<S>(state: &EProcessState<S>, rule: &StoppingRule) -> bool {
    state.log_e >= rule.log_threshold()
}

/// Log e-value of `spec` at a model state, mixing over the prior if needed.
pub fn log_evalue_at<M: Model>(model: &M, state: &M::State, spec: &EffectSpec) -> Result<f64> {
    match &spec.alternative {
        Alternative::Point(alt) => model.log_evalue(state, spec.null, *alt),
        Alternative::Prior(prior) => {
            let comps = prior
                .atoms()
                .iter()
                .map(|&(d, _)| model.log_evalue(state, spec.null, d))
                .collect::<Result<Vec<_>>>()?;
            mixture_log_evalue(&comps, prior)
        }
    }
}

/// Advances the process by one observation.
pub fn step<M: Model>(
    model: &M,
    state: &EProcessState<M::State>,
    obs: &M::Observation,
    spec: &EffectSpec,
) -> Result<EProcessState<M::State>> {
    let model_state = model.update(&state.model_state, obs)?;
    let log_e = log_evalue_at(model, &model_state, spec)?;
    if log_e.is_nan() {
        return Err(Error::Numerical(format!("{} process produced NaN at n = {}", model.name(), state.n + 1)));
    }
    Ok(EProcessState { n: state.n + 1, log_e, model_state })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: u64,
    /// Test statistic; NaN where the model leaves it undefined.
    pub statistic: f64,
    pub log_e: f64,
    pub rejected: bool,
    pub informative: bool,
}

/// Path of a monitored process. `rejected` is sticky after the first crossing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TrajectoryRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.n <= last.n {
                return Err(Error::Contract(format!("trajectory index {} after {}", record.n, last.n)));
            }
            if last.rejected && !record.rejected {
                return Err(Error::Contract("rejection cannot be withdrawn".into()));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn first_crossing(&self) -> Option<u64> {
        self.records.iter().find(|r| r.rejected).map(|r| r.n)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A model, its effect specification and a stopping rule, monitored online.
///
/// Monitoring continues after rejection; the trajectory remembers the first
/// crossing.
#[derive(Debug, Clone)]
pub struct SequentialTest<M: Model> {
    model: M,
    spec: EffectSpec,
    rule: StoppingRule,
    state: EProcessState<M::State>,
    trajectory: Trajectory,
}

impl<M: Model> SequentialTest<M> {
    pub fn new(model: M, spec: EffectSpec, rule: StoppingRule) -> Result<Self> {
        spec.validate(&model)?;
        let state = EProcessState::fresh(&model);
        Ok(SequentialTest { model, spec, rule, state, trajectory: Trajectory::new() })
    }

    pub fn observe(&mut self, obs: &M::Observation) -> Result<TrajectoryRecord> {
        let next = step(&self.model, &self.state, obs, &self.spec)?;
        let already = self.trajectory.first_crossing().is_some();
        let record = TrajectoryRecord {
            n: next.n,
            statistic: self.model.statistic(&next.model_state).unwrap_or(f64::NAN),
            log_e: next.log_e,
            rejected: already || should_reject(&next, &self.rule),
            informative: self.model.is_informative(&next.model_state),
        };
        self.trajectory.push(record)?;
        self.state = next;
        Ok(record)
    }

    pub fn state(&self) -> &EProcessState<M::State> {
        &self.state
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn spec(&self) -> &EffectSpec {
        &self.spec
    }

    pub fn rule(&self) -> &StoppingRule {
        &self.rule
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}
