//! Critical-peak-pricing scheduling: a quadratic supply-cost model, a
//! per-state demand estimate and the budgeted threshold policy.
//!
//! Stages follow [`scenario1`](crate::scenario1): stage `d` decides forward
//! day `T - d + 1` from the previous day's observation, and day `T + 1` is a
//! terminal day on which no event can be called.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov_model::{StateSpace, TransitionModel};
use crate::risk_cost::PerDay;
use crate::scenario1::day_of_stage;

/// Per-day supply cost `B z² + C z + D` for days `1..=T+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadCost {
    quadratic: Vec<f64>,
    linear: Vec<f64>,
    constant: Vec<f64>,
}

impl QuadCost {
    pub fn new(
        horizon: usize,
        quadratic: impl Into<PerDay>,
        linear: impl Into<PerDay>,
        constant: impl Into<PerDay>,
    ) -> Result<Self> {
        Ok(Self {
            quadratic: quadratic.into().expand("quadratic", horizon)?,
            linear: linear.into().expand("linear", horizon)?,
            constant: constant.into().expand("constant", horizon)?,
        })
    }

    /// Number of decision days covered.
    pub fn horizon(&self) -> usize {
        self.quadratic.len() - 1
    }

    /// Coefficients `(B, C, D)` of forward day `day ∈ 1..=T+1`.
    pub fn coefficients(&self, day: usize) -> (f64, f64, f64) {
        let i = day - 1;
        (self.quadratic[i], self.linear[i], self.constant[i])
    }

    pub fn power_cost(&self, demand: f64, day: usize) -> f64 {
        let (b, c, d) = self.coefficients(day);
        b * demand * demand + c * demand + d
    }

    fn validate(&self) -> Result<()> {
        let h = self.quadratic.len();
        if h < 2 || self.linear.len() != h || self.constant.len() != h {
            return Err(invalid("quad_cost", "coefficient series lengths disagree"));
        }
        for v in self.quadratic.iter().chain(&self.linear).chain(&self.constant) {
            if !v.is_finite() || *v < 0.0 {
                return Err(invalid("quad_cost", format!("{v} is not a finite nonnegative coefficient")));
            }
        }
        Ok(())
    }
}

/// Event budget `M`, curtailed load `y` and per-day revenue loss `ā`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CppParams {
    budget: usize,
    curtailment: f64,
    revenue_loss: Vec<f64>,
}

impl CppParams {
    pub fn new(
        horizon: usize,
        budget: usize,
        curtailment: f64,
        revenue_loss: impl Into<PerDay>,
    ) -> Result<Self> {
        if !curtailment.is_finite() || curtailment < 0.0 {
            return Err(invalid("curtailment", format!("{curtailment} is not a finite nonnegative load")));
        }
        Ok(Self {
            budget,
            curtailment,
            revenue_loss: revenue_loss.into().expand("revenue_loss", horizon)?,
        })
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn curtailment(&self) -> f64 {
        self.curtailment
    }

    pub fn revenue_loss(&self, day: usize) -> f64 {
        self.revenue_loss[day - 1]
    }

    pub fn horizon(&self) -> usize {
        self.revenue_loss.len() - 1
    }
}

/// Linear peak-demand estimate over a state's bin representatives plus one
/// indicator per day type after the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub intercept: f64,
    pub phenomena: Vec<f64>,
    pub day_types: Vec<f64>,
}

impl DemandModel {
    /// Regressors of `state` without the intercept column.
    pub fn features(space: &StateSpace, state: usize) -> Result<Vec<f64>> {
        let (mut values, day_type) = space.representatives(state)?;
        let extra = space.day_types().map_or(0, |t| t.len().saturating_sub(1));
        for level in 1..=extra {
            values.push(if day_type == Some(level) { 1.0 } else { 0.0 });
        }
        Ok(values)
    }

    /// Rebuilds a model from `[intercept, phenomena…, day types…]`.
    pub fn from_coefficients(space: &StateSpace, coefficients: &[f64]) -> Result<Self> {
        let p = space.phenomena().len();
        let extra = space.day_types().map_or(0, |t| t.len().saturating_sub(1));
        if coefficients.len() != 1 + p + extra {
            return Err(invalid(
                "demand_model",
                format!("{} coefficients for {} regressors", coefficients.len(), 1 + p + extra),
            ));
        }
        Ok(Self {
            intercept: coefficients[0],
            phenomena: coefficients[1..=p].to_vec(),
            day_types: coefficients[1 + p..].to_vec(),
        })
    }

    pub fn predict(&self, space: &StateSpace, state: usize) -> Result<f64> {
        let x = Self::features(space, state)?;
        if x.len() != self.phenomena.len() + self.day_types.len() {
            return Err(invalid("demand_model", "coefficient count does not match the state space"));
        }
        let weights = self.phenomena.iter().chain(&self.day_types);
        Ok(self.intercept + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Demand of every state.
    pub fn per_state(&self, space: &StateSpace) -> Result<Vec<f64>> {
        (0..space.cardinality()).map(|s| self.predict(space, s)).collect()
    }
}

/// The table `g_d(k | x)` for `d ∈ 0..=T`, `k ∈ 0..=M`, with the first and
/// second conditional moments of next-day demand per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CppTable {
    horizon: usize,
    n_states: usize,
    params: CppParams,
    quad: QuadCost,
    mean_demand: Vec<f64>,
    mean_square: Vec<f64>,
    values: Vec<f64>,
}

impl CppTable {
    /// Backward induction over stages with exact expectations over the chain.
    pub fn build(
        horizon: usize,
        params: &CppParams,
        quad: &QuadCost,
        demand: &[f64],
        model: &TransitionModel,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        for schedule in [params.horizon(), quad.horizon()] {
            if schedule != horizon {
                return Err(Error::HorizonMismatch { table: horizon, schedule });
            }
        }
        let budget = params.budget();
        if budget > horizon {
            return Err(Error::BudgetExceedsHorizon { budget, horizon });
        }
        quad.validate()?;
        model.validate()?;
        let n = model.n_states();
        if demand.len() != n {
            return Err(invalid("demand", format!("has {} entries for {n} states", demand.len())));
        }
        if let Some(bad) = demand.iter().find(|q| !q.is_finite()) {
            return Err(invalid("demand", format!("{bad} is not finite")));
        }
        let mean_demand = model.apply(demand);
        let squares: Vec<f64> = demand.iter().map(|q| q * q).collect();
        let mean_square = model.apply(&squares);
        let mut table = Self {
            horizon,
            n_states: n,
            params: params.clone(),
            quad: quad.clone(),
            mean_demand,
            mean_square,
            values: vec![0.0; (horizon + 1) * (budget + 1) * n],
        };

        let terminal: Vec<f64> = (0..n).map(|x| table.expected_cost(horizon + 1, x, false)).collect();
        let g0 = model.apply(&terminal);
        for k in 0..=budget {
            let at = table.index(0, k, 0);
            table.values[at..at + n].copy_from_slice(&g0);
        }
        let mut branch = vec![0.0; n];
        for d in 1..=horizon {
            let day = day_of_stage(horizon, d);
            let keep: Vec<f64> = (0..n).map(|x| table.expected_cost(day, x, false)).collect();
            let event: Vec<f64> = (0..n)
                .map(|x| table.expected_cost(day, x, true) + params.revenue_loss(day))
                .collect();
            for k in 0..=budget {
                let stay = table.index(d - 1, k, 0);
                for xi in 0..n {
                    let no_event = table.values[stay + xi] + keep[xi];
                    branch[xi] = if k == 0 {
                        no_event
                    } else {
                        let fewer = table.index(d - 1, k - 1, 0);
                        no_event.min(table.values[fewer + xi] + event[xi])
                    };
                }
                let averaged = model.apply(&branch);
                let at = table.index(d, k, 0);
                table.values[at..at + n].copy_from_slice(&averaged);
            }
        }
        Ok(table)
    }

    fn index(&self, d: usize, k: usize, x: usize) -> usize {
        (d * (self.params.budget() + 1) + k) * self.n_states + x
    }

    /// Reassembles a table from its parts, checking dimensions.
    pub fn from_parts(
        params: CppParams,
        quad: QuadCost,
        mean_demand: Vec<f64>,
        mean_square: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let horizon = params.horizon();
        if quad.horizon() != horizon {
            return Err(Error::HorizonMismatch { table: horizon, schedule: quad.horizon() });
        }
        let n = mean_demand.len();
        if mean_square.len() != n || values.len() != (horizon + 1) * (params.budget() + 1) * n {
            return Err(Error::Format("table value count does not match its dimensions".into()));
        }
        Ok(Self {
            horizon,
            n_states: n,
            params,
            quad,
            mean_demand,
            mean_square,
            values,
        })
    }

    /// `E[q(X')² | X = x]` per state.
    pub fn mean_square(&self) -> &[f64] {
        &self.mean_square
    }

    /// `E[c(q(X') - u y) | X = x]` on forward day `day`.
    fn expected_cost(&self, day: usize, x: usize, event: bool) -> f64 {
        let (b, c, d) = self.quad.coefficients(day);
        let shift = if event { self.params.curtailment() } else { 0.0 };
        let m1 = self.mean_demand[x];
        let m2 = self.mean_square[x];
        b * (m2 - 2.0 * shift * m1 + shift * shift) + c * (m1 - shift) + d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn budget(&self) -> usize {
        self.params.budget()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn params(&self) -> &CppParams {
        &self.params
    }

    pub fn quad(&self) -> &QuadCost {
        &self.quad
    }

    /// `E[q(X') | X = x]` per state.
    pub fn mean_demand(&self) -> &[f64] {
        &self.mean_demand
    }

    /// Row-major values in `[d][k][x]` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn g(&self, d: usize, k: usize, x: usize) -> f64 {
        self.values[self.index(d, k, x)]
    }

    fn check_query(&self, d: usize, k: usize, x: usize) {
        assert!((1..=self.horizon).contains(&d), "stage {d} outside 1..={}", self.horizon);
        assert!(k <= self.budget(), "remaining budget {k} above {}", self.budget());
        assert!(x < self.n_states, "state {x} out of range");
    }

    /// Demand level that expected next-day demand must strictly exceed for
    /// an event; `+∞` when the budget is spent.
    pub fn threshold(&self, d: usize, k: usize, x: usize) -> Result<f64> {
        self.check_query(d, k, x);
        let day = day_of_stage(self.horizon, d);
        let (b, c, _) = self.quad.coefficients(day);
        let y = self.params.curtailment();
        if y == 0.0 {
            return Err(Error::DegenerateParameter { name: "curtailment", value: y });
        }
        if b == 0.0 {
            return Err(Error::DegenerateParameter { name: "quadratic", value: b });
        }
        if k == 0 {
            return Ok(f64::INFINITY);
        }
        let numerator = self.g(d - 1, k - 1, x) - self.g(d - 1, k, x) + self.params.revenue_loss(day)
            - c * y
            + b * y * y;
        Ok(numerator / (2.0 * y * b))
    }

    /// 1 iff `E[q | x] > threshold`.
    pub fn decide(&self, d: usize, k: usize, x: usize) -> Result<u8> {
        let t = self.threshold(d, k, x)?;
        Ok(u8::from(self.mean_demand[x] > t))
    }

    /// Expected remaining cost without and with an event at stage `d`.
    pub fn branch_values(&self, d: usize, k: usize, x: usize) -> (f64, Option<f64>) {
        self.check_query(d, k, x);
        let day = day_of_stage(self.horizon, d);
        let keep = self.g(d - 1, k, x) + self.expected_cost(day, x, false);
        let event = (k > 0).then(|| {
            self.g(d - 1, k - 1, x) + self.params.revenue_loss(day) + self.expected_cost(day, x, true)
        });
        (keep, event)
    }

    /// 1 iff the event branch is strictly cheaper.
    pub fn decide_by_branches(&self, d: usize, k: usize, x: usize) -> u8 {
        match self.branch_values(d, k, x) {
            (keep, Some(event)) => u8::from(event < keep),
            _ => 0,
        }
    }

    pub fn decision_value(&self, d: usize, k: usize, x: usize) -> f64 {
        match self.branch_values(d, k, x) {
            (keep, Some(event)) => keep.min(event),
            (keep, None) => keep,
        }
    }
}

pub fn build_cpp(
    horizon: usize,
    params: &CppParams,
    quad: &QuadCost,
    demand: &[f64],
    model: &TransitionModel,
) -> Result<CppTable> {
    CppTable::build(horizon, params, quad, demand, model)
}

pub fn decide_cpp(table: &CppTable, d: usize, k: usize, x: usize) -> Result<u8> {
    table.decide(d, k, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov_model::Phenomenon;

    fn chain() -> TransitionModel {
        TransitionModel::from_dense(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.1, 0.3, 0.6],
        ])
        .unwrap()
    }

    #[test]
    fn power_cost_examples() {
        let q = QuadCost::new(1, 0.00245, 45.5, 8e5).unwrap();
        assert_eq!(q.power_cost(0.0, 1), 8e5);
        assert!((q.power_cost(1000.0, 1) - 847_950.0).abs() < 1e-6);
        let lin = QuadCost::new(1, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(lin.power_cost(7.5, 2), 7.5);
    }

    #[test]
    fn zero_budget_is_cumulative_supply_cost() {
        let m = chain();
        let demand = [100.0, 300.0, 500.0];
        let quad = QuadCost::new(4, 0.01, 2.0, 5.0).unwrap();
        let params = CppParams::new(4, 0, 50.0, 10.0).unwrap();
        let t = CppTable::build(4, &params, &quad, &demand, &m).unwrap();
        let cost: Vec<f64> = demand.iter().map(|q| quad.power_cost(*q, 1)).collect();
        let mut tail = m.apply(&m.apply(&cost));
        for d in 0..=4 {
            for x in 0..3 {
                assert!((t.g(d, 0, x) - tail[x]).abs() < 1e-9 * tail[x]);
            }
            let step: Vec<f64> = m.apply(&cost).iter().zip(&tail).map(|(a, b)| a + b).collect();
            tail = m.apply(&step);
        }
        for d in 1..=4 {
            assert_eq!(t.decide(d, 0, 1).unwrap(), 0);
        }
    }

    #[test]
    fn zero_curtailment_never_calls_events() {
        let m = chain();
        let quad = QuadCost::new(3, 0.01, 2.0, 5.0).unwrap();
        let params = CppParams::new(3, 2, 0.0, 1.0).unwrap();
        let t = CppTable::build(3, &params, &quad, &[10.0, 20.0, 30.0], &m).unwrap();
        for d in 1..=3 {
            for x in 0..3 {
                assert_eq!(t.decide_by_branches(d, 2, x), 0);
                assert!(matches!(
                    t.decide(d, 2, x),
                    Err(Error::DegenerateParameter { name: "curtailment", .. })
                ));
            }
        }
    }

    #[test]
    fn zero_quadratic_coefficient_is_rejected() {
        let quad = QuadCost::new(2, 0.0, 2.0, 5.0).unwrap();
        let params = CppParams::new(2, 1, 10.0, 1.0).unwrap();
        let t = CppTable::build(2, &params, &quad, &[1.0, 2.0, 3.0], &chain()).unwrap();
        assert!(matches!(
            t.decide(1, 1, 0),
            Err(Error::DegenerateParameter { name: "quadratic", .. })
        ));
    }

    #[test]
    fn enormous_revenue_loss_blocks_events() {
        let quad = QuadCost::new(3, 0.01, 2.0, 5.0).unwrap();
        let params = CppParams::new(3, 2, 50.0, 1e300).unwrap();
        let t = CppTable::build(3, &params, &quad, &[100.0, 900.0, 5000.0], &chain()).unwrap();
        for d in 1..=3 {
            for x in 0..3 {
                assert_eq!(t.decide(d, 2, x).unwrap(), 0);
            }
        }
    }

    #[test]
    fn threshold_form_matches_branch_comparison() {
        let quad = QuadCost::new(5, 0.00245, 45.5, 8e5).unwrap();
        let params = CppParams::new(5, 2, 100.0, 15_000.0).unwrap();
        let demand = [25_000.0, 32_000.0, 40_000.0];
        let t = CppTable::build(5, &params, &quad, &demand, &chain()).unwrap();
        let mut events = 0;
        for d in 1..=5 {
            for k in 0..=2 {
                for x in 0..3 {
                    let u = t.decide(d, k, x).unwrap();
                    assert_eq!(u, t.decide_by_branches(d, k, x));
                    events += usize::from(u);
                }
            }
        }
        assert!(events > 0);
    }

    #[test]
    fn budget_above_horizon_is_rejected() {
        let quad = QuadCost::new(2, 0.01, 2.0, 5.0).unwrap();
        let params = CppParams::new(2, 3, 10.0, 1.0).unwrap();
        assert!(matches!(
            CppTable::build(2, &params, &quad, &[1.0, 2.0, 3.0], &chain()),
            Err(Error::BudgetExceedsHorizon { .. })
        ));
    }

    #[test]
    fn demand_features_use_representatives_and_day_type() {
        let space = StateSpace::new(
            vec![Phenomenon::new("temp", "C", vec![0.0, 10.0]).unwrap()],
            Some(vec!["weekday".into(), "weekend".into()]),
        )
        .unwrap();
        let model = DemandModel::from_coefficients(&space, &[100.0, 2.0, -30.0]).unwrap();
        let weekend_mid = space.encode(&[1, 1]).unwrap();
        assert_eq!(DemandModel::features(&space, weekend_mid).unwrap(), vec![5.0, 1.0]);
        assert_eq!(model.predict(&space, weekend_mid).unwrap(), 100.0 + 10.0 - 30.0);
        assert_eq!(model.per_state(&space).unwrap().len(), 6);
    }

    #[test]
    fn table_matches_forward_oracle() {
        use crate::scenario1::stage_of_day;
        let m = chain();
        let horizon = 5;
        let demand = [26_000.0, 31_000.0, 39_000.0];
        let quad = QuadCost::new(horizon, 0.00245, 45.5, 8e5).unwrap();
        let params = CppParams::new(horizon, 2, 100.0, 15_000.0).unwrap();
        let t = CppTable::build(horizon, &params, &quad, &demand, &m).unwrap();
        let o = oracle::oracle_cpp(horizon, &params, &quad, &demand, &m).unwrap();
        for day in 1..=horizon {
            let d = stage_of_day(horizon, day);
            for k in 0..=2 {
                for x in 0..3 {
                    let want = o.value_at(day, k, x);
                    assert!((t.decision_value(d, k, x) - want).abs() <= 1e-9 * want);
                }
            }
        }
        let policy = |day: usize, k: usize, x: usize| t.decide(stage_of_day(horizon, day), k, x).unwrap();
        let rolled = oracle::evaluate_cpp_policy(horizon, &params, &quad, &demand, &m, &policy).unwrap();
        for x in 0..3 {
            assert!((rolled[x] - o.value(x)).abs() <= 1e-9 * o.value(x));
        }
    }
}
