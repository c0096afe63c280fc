//! Risk indicator, wildfire-risk probability and the daily operating cost.
//!
//! Day indices are forward and 1-based: decision `n ∈ 1..=T` pays the cost
//! entries of day `n`, and the terminal forced re-energization pays day
//! `T + 1`. Every per-day series therefore carries `T + 1` entries.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov_model::{StateSpace, TransitionModel};

/// Direction and level of one phenomenon's risk threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    AtLeast(f64),
    AtMost(f64),
}

impl Criterion {
    pub fn holds(self, value: f64) -> bool {
        match self {
            Criterion::AtLeast(t) => value >= t,
            Criterion::AtMost(t) => value <= t,
        }
    }
}

/// One participating phenomenon of a [`RiskRule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTerm {
    pub phenomenon: String,
    #[serde(flatten)]
    pub criterion: Criterion,
}

/// Conjunction of per-phenomenon thresholds. Phenomena without a term
/// pass through.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskRule {
    pub terms: Vec<RuleTerm>,
}

impl RiskRule {
    pub fn new(terms: Vec<RuleTerm>) -> Self {
        Self { terms }
    }

    pub fn term(phenomenon: &str, criterion: Criterion) -> RuleTerm {
        RuleTerm {
            phenomenon: phenomenon.to_string(),
            criterion,
        }
    }

    /// 0/1 indicator for every joint state, evaluated on bin representatives.
    pub fn indicator(&self, space: &StateSpace) -> Result<Vec<f64>> {
        // Per participating phenomenon: which bins satisfy the criterion.
        let mut passing: Vec<Option<Vec<bool>>> = vec![None; space.phenomena().len()];
        for term in &self.terms {
            let idx = space.index_of(&term.phenomenon).ok_or_else(|| {
                Error::InvalidStateSpace(format!(
                    "risk rule names unknown phenomenon `{}`",
                    term.phenomenon
                ))
            })?;
            let p = &space.phenomena()[idx];
            let bins: Vec<bool> = (0..p.n_bins())
                .map(|b| term.criterion.holds(p.representative(b)))
                .collect();
            passing[idx] = Some(match passing[idx].take() {
                Some(prev) => prev.iter().zip(&bins).map(|(a, b)| *a && *b).collect(),
                None => bins,
            });
        }
        (0..space.cardinality())
            .map(|state| {
                let bins = space.decode(state)?;
                let hit = passing
                    .iter()
                    .zip(&bins)
                    .all(|(ok, &b)| ok.as_ref().is_none_or(|v| v[b]));
                Ok(if hit { 1.0 } else { 0.0 })
            })
            .collect()
    }

    pub fn risk_indicator(&self, space: &StateSpace, state: usize) -> Result<u8> {
        let bins = space.decode(state)?;
        for term in &self.terms {
            let idx = space.index_of(&term.phenomenon).ok_or_else(|| {
                Error::InvalidStateSpace(format!(
                    "risk rule names unknown phenomenon `{}`",
                    term.phenomenon
                ))
            })?;
            let rep = space.phenomena()[idx].representative(bins[idx]);
            if !term.criterion.holds(rep) {
                return Ok(0);
            }
        }
        Ok(1)
    }
}

/// Wildfire-risk probability of every state: `Σ_ξ P[x, ξ] f(ξ)`.
pub fn wrp(model: &TransitionModel, indicator: &[f64]) -> Vec<f64> {
    model
        .apply(indicator)
        .into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .collect()
}

/// Cost of moving from `u_prev` to `u`: `s1` to de-energize, `s2` to
/// re-energize.
pub fn switching_cost(u_prev: u8, u: u8, s1: f64, s2: f64) -> f64 {
    match (u_prev, u) {
        (0, 1) => s2,
        (1, 0) => s1,
        _ => 0.0,
    }
}

/// A per-day series given either as one constant or as explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerDay {
    Constant(f64),
    Series(Vec<f64>),
}

impl From<f64> for PerDay {
    fn from(v: f64) -> Self {
        PerDay::Constant(v)
    }
}

impl From<Vec<f64>> for PerDay {
    fn from(v: Vec<f64>) -> Self {
        PerDay::Series(v)
    }
}

impl PerDay {
    /// Expands to `horizon + 1` entries; a length-`horizon` series repeats
    /// its last value for the post-horizon day.
    pub(crate) fn expand(&self, name: &'static str, horizon: usize) -> Result<Vec<f64>> {
        let values = match self {
            PerDay::Constant(v) => vec![*v; horizon + 1],
            PerDay::Series(v) if v.len() == horizon + 1 => v.clone(),
            PerDay::Series(v) if v.len() == horizon && horizon > 0 => {
                let mut out = v.clone();
                out.push(v[horizon - 1]);
                out
            }
            PerDay::Series(v) => {
                return Err(invalid(
                    name,
                    format!(
                        "series has {} entries; expected {horizon} or {}",
                        v.len(),
                        horizon + 1
                    ),
                ))
            }
        };
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(name, format!("{bad} is not a finite nonnegative cost")));
        }
        Ok(values)
    }
}

/// Serialized form of a [`CostSchedule`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostScheduleFile {
    pub horizon: usize,
    #[serde(default = "default_currency")]
    pub currency: String,
    pub wildfire_cost: PerDay,
    pub revenue_loss: PerDay,
    pub deenergize_cost: PerDay,
    pub reenergize_cost: PerDay,
    #[serde(default)]
    pub penalty: f64,
    #[serde(default)]
    pub adjustment: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infrastructure_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remaining_budget: Option<f64>,
}

fn default_currency() -> String {
    "USD".to_string()
}

/// Per-day wildfire, revenue-loss and switching costs plus the scalar
/// penalty and adjustment coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostScheduleFile", into = "CostScheduleFile")]
pub struct CostSchedule {
    horizon: usize,
    currency: String,
    wildfire: Vec<f64>,
    revenue_loss: Vec<f64>,
    deenergize: Vec<f64>,
    reenergize: Vec<f64>,
    penalty: f64,
    adjustment: f64,
    infrastructure_budget: Option<f64>,
    remaining_budget: Option<f64>,
}

impl TryFrom<CostScheduleFile> for CostSchedule {
    type Error = Error;

    fn try_from(f: CostScheduleFile) -> Result<Self> {
        let h = f.horizon;
        if h == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        for (name, v) in [("penalty", f.penalty), ("adjustment", f.adjustment)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("{v} is not finite and nonnegative")));
            }
        }
        Ok(Self {
            horizon: h,
            currency: f.currency,
            wildfire: f.wildfire_cost.expand("wildfire_cost", h)?,
            revenue_loss: f.revenue_loss.expand("revenue_loss", h)?,
            deenergize: f.deenergize_cost.expand("deenergize_cost", h)?,
            reenergize: f.reenergize_cost.expand("reenergize_cost", h)?,
            penalty: f.penalty,
            adjustment: f.adjustment,
            infrastructure_budget: f.infrastructure_budget,
            remaining_budget: f.remaining_budget,
        })
    }
}

impl From<CostSchedule> for CostScheduleFile {
    fn from(c: CostSchedule) -> Self {
        Self {
            horizon: c.horizon,
            currency: c.currency,
            wildfire_cost: PerDay::Series(c.wildfire),
            revenue_loss: PerDay::Series(c.revenue_loss),
            deenergize_cost: PerDay::Series(c.deenergize),
            reenergize_cost: PerDay::Series(c.reenergize),
            penalty: c.penalty,
            adjustment: c.adjustment,
            infrastructure_budget: c.infrastructure_budget,
            remaining_budget: c.remaining_budget,
        }
    }
}

impl CostSchedule {
    /// Schedule with zero penalty and adjustment.
    pub fn new(
        horizon: usize,
        wildfire: impl Into<PerDay>,
        revenue_loss: impl Into<PerDay>,
        deenergize: impl Into<PerDay>,
        reenergize: impl Into<PerDay>,
    ) -> Result<Self> {
        CostScheduleFile {
            horizon,
            currency: default_currency(),
            wildfire_cost: wildfire.into(),
            revenue_loss: revenue_loss.into(),
            deenergize_cost: deenergize.into(),
            reenergize_cost: reenergize.into(),
            penalty: 0.0,
            adjustment: 0.0,
            infrastructure_budget: None,
            remaining_budget: None,
        }
        .try_into()
    }

    pub fn with_penalty(mut self, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(invalid("penalty", format!("{gamma} is not finite and nonnegative")));
        }
        self.penalty = gamma;
        Ok(self)
    }

    pub fn with_adjustment(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid("adjustment", format!("{lambda} is not finite and nonnegative")));
        }
        self.adjustment = lambda;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rejects any zero cost entry or coefficient.
    pub fn require_positive(&self) -> Result<()> {
        let series = [
            ("wildfire_cost", &self.wildfire),
            ("revenue_loss", &self.revenue_loss),
            ("deenergize_cost", &self.deenergize),
            ("reenergize_cost", &self.reenergize),
        ];
        for (name, values) in series {
            if let Some(day) = values.iter().position(|v| *v <= 0.0) {
                return Err(invalid(name, format!("day {} is not strictly positive", day + 1)));
            }
        }
        for (name, v) in [("penalty", self.penalty), ("adjustment", self.adjustment)] {
            if v <= 0.0 {
                return Err(invalid(name, "must be strictly positive"));
            }
        }
        Ok(())
    }

    /// First `horizon` days, with day `horizon + 1` taken from the
    /// original post-horizon entry when shortening.
    pub fn truncate(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > self.horizon {
            return Err(invalid(
                "horizon",
                format!("cannot truncate a {}-day schedule to {horizon}", self.horizon),
            ));
        }
        let cut = |v: &Vec<f64>| {
            let mut out = v[..horizon].to_vec();
            out.push(v[self.horizon]);
            out
        };
        Ok(Self {
            horizon,
            wildfire: cut(&self.wildfire),
            revenue_loss: cut(&self.revenue_loss),
            deenergize: cut(&self.deenergize),
            reenergize: cut(&self.reenergize),
            ..self.clone()
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn currency(&self) -> &str {
        &self.currency
    }

    fn at(&self, values: &[f64], day: usize) -> f64 {
        assert!(
            (1..=self.horizon + 1).contains(&day),
            "day {day} outside 1..={}",
            self.horizon + 1
        );
        values[day - 1]
    }

    pub fn wildfire(&self, day: usize) -> f64 {
        self.at(&self.wildfire, day)
    }

    pub fn revenue_loss(&self, day: usize) -> f64 {
        self.at(&self.revenue_loss, day)
    }

    pub fn deenergize(&self, day: usize) -> f64 {
        self.at(&self.deenergize, day)
    }

    pub fn reenergize(&self, day: usize) -> f64 {
        self.at(&self.reenergize, day)
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn adjustment(&self) -> f64 {
        self.adjustment
    }

    pub fn infrastructure_budget(&self) -> Option<f64> {
        self.infrastructure_budget
    }

    pub fn remaining_budget(&self) -> Option<f64> {
        self.remaining_budget
    }

    pub fn max_switching(&self) -> f64 {
        self.deenergize
            .iter()
            .chain(&self.reenergize)
            .fold(0.0, |m, v| m.max(*v))
    }

    /// Operating cost of decision index `t ∈ 0..=T` (day `t + 1`) given the
    /// risk indicator of the following state. Passing a probability in
    /// place of `f_next` yields the conditional expectation.
    pub fn stage_cost(&self, t: usize, u_prev: u8, u: u8, f_next: f64) -> f64 {
        let day = t + 1;
        let uf = f64::from(u);
        self.revenue_loss(day) * uf
            + self.wildfire(day) * f_next * (1.0 - uf)
            + switching_cost(u_prev, u, self.deenergize(day), self.reenergize(day))
    }
}
