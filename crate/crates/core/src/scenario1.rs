//! Budgeted shutoff scheduling: the continuation table `g_d(k | u, x)` and
//! its threshold policy.
//!
//! Stages count down: stage `d ∈ 1..=T` is the decision for forward day
//! `T - d + 1`; stage 0 is the forced re-energization on day `T + 1`.
//! In `g_d(k | u, x)`, `u` and `x` are the decision and observation of
//! stage `d + 1`; the recursion averages over the stage-`d` observation.
//! Deciding at stage `d` with observation `x` therefore compares the two
//! branches of `g_{d-1}(· | ·, x)`.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov_model::TransitionModel;
use crate::risk_cost::{wrp, CostSchedule};

/// Forward day paid by stage `d` of a `horizon`-day problem.
pub fn day_of_stage(horizon: usize, stage: usize) -> usize {
    horizon - stage + 1
}

/// Stage deciding forward day `day ∈ 1..=horizon`.
pub fn stage_of_day(horizon: usize, day: usize) -> usize {
    horizon + 1 - day
}

pub(crate) fn check_inputs(
    horizon: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<()> {
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    if costs.horizon() != horizon {
        return Err(Error::HorizonMismatch {
            table: horizon,
            schedule: costs.horizon(),
        });
    }
    model.validate()?;
    if indicator.len() != model.n_states() {
        return Err(invalid(
            "indicator",
            format!(
                "has {} entries for {} states",
                indicator.len(),
                model.n_states()
            ),
        ));
    }
    Ok(())
}

/// Cost of never shutting off from stage `d` down to the terminal day,
/// excluding switching: `r_0 = P e_0`, `r_d = P (e_d + r_{d-1})` where
/// `e_d = A_{day(d)} · wrp`.
pub(crate) fn no_shutoff_tail(
    horizon: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    risk: &[f64],
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(horizon + 1);
    let e0: Vec<f64> = risk.iter().map(|w| costs.wildfire(horizon + 1) * w).collect();
    out.push(model.apply(&e0));
    for d in 1..=horizon {
        let a = costs.wildfire(day_of_stage(horizon, d));
        let v: Vec<f64> = risk
            .iter()
            .zip(&out[d - 1])
            .map(|(w, r)| a * w + r)
            .collect();
        out.push(model.apply(&v));
    }
    out
}

/// Threshold on the wildfire-risk probability: shut off iff `wrp ≥`
/// `numerator / A`. A zero wildfire cost makes the comparison `0 ≥ numerator`.
pub(crate) fn ratio_threshold(numerator: f64, wildfire: f64) -> f64 {
    if wildfire > 0.0 {
        numerator / wildfire
    } else if numerator <= 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

/// The table `g_d(k | u, x)` for `d ∈ 0..=T`, `k ∈ 0..=N`, `u ∈ {0,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetTable {
    horizon: usize,
    budget: usize,
    n_states: usize,
    costs: CostSchedule,
    wrp: Vec<f64>,
    values: Vec<f64>,
}

impl BudgetTable {
    /// Backward induction over stages; `O(T · N · (nnz(P) + |X|))`.
    pub fn build(
        horizon: usize,
        budget: usize,
        costs: &CostSchedule,
        model: &TransitionModel,
        indicator: &[f64],
    ) -> Result<Self> {
        check_inputs(horizon, costs, model, indicator)?;
        if budget > horizon {
            return Err(Error::BudgetExceedsHorizon { budget, horizon });
        }
        let n = model.n_states();
        let risk = wrp(model, indicator);
        let tail = no_shutoff_tail(horizon, costs, model, &risk);
        let mut table = Self {
            horizon,
            budget,
            n_states: n,
            costs: costs.clone(),
            wrp: risk,
            values: vec![0.0; (horizon + 1) * (budget + 1) * 2 * n],
        };

        let s1_end = costs.deenergize(horizon + 1);
        for k in 0..=budget {
            for u in 0..2u8 {
                let at = table.index(0, k, u, 0);
                for x in 0..n {
                    table.values[at + x] = f64::from(u) * s1_end + tail[0][x];
                }
            }
        }

        let mut branch = vec![0.0; n];
        for d in 1..=horizon {
            let day = day_of_stage(horizon, d);
            let (a_big, a_small) = (costs.wildfire(day), costs.revenue_loss(day));
            let (s1, s2) = (costs.deenergize(day), costs.reenergize(day));
            for u in 0..2u8 {
                let at = table.index(d, 0, u, 0);
                for x in 0..n {
                    table.values[at + x] = f64::from(u) * s1 + tail[d][x];
                }
            }
            for k in 1..=budget {
                for u in 0..2u8 {
                    let uf = f64::from(u);
                    let keep = table.index(d - 1, k, 0, 0);
                    let cut = table.index(d - 1, k - 1, 1, 0);
                    for xi in 0..n {
                        let no_shutoff =
                            table.values[keep + xi] + a_big * table.wrp[xi] + uf * s1;
                        let shutoff = table.values[cut + xi] + a_small + (1.0 - uf) * s2;
                        branch[xi] = no_shutoff.min(shutoff);
                    }
                    let averaged = model.apply(&branch);
                    let at = table.index(d, k, u, 0);
                    table.values[at..at + n].copy_from_slice(&averaged);
                }
            }
        }
        Ok(table)
    }

    fn index(&self, d: usize, k: usize, u: u8, x: usize) -> usize {
        ((d * (self.budget + 1) + k) * 2 + usize::from(u)) * self.n_states + x
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn costs(&self) -> &CostSchedule {
        &self.costs
    }

    pub fn wrp(&self) -> &[f64] {
        &self.wrp
    }

    /// Row-major values in `[d][k][u][x]` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reassembles a table from its parts, checking dimensions.
    pub fn from_parts(
        horizon: usize,
        budget: usize,
        costs: CostSchedule,
        wrp: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = wrp.len();
        if costs.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                table: horizon,
                schedule: costs.horizon(),
            });
        }
        if values.len() != (horizon + 1) * (budget + 1) * 2 * n {
            return Err(Error::Format("table value count does not match its dimensions".into()));
        }
        Ok(Self {
            horizon,
            budget,
            n_states: n,
            costs,
            wrp,
            values,
        })
    }

    pub fn g(&self, d: usize, k: usize, u: u8, x: usize) -> f64 {
        self.values[self.index(d, k, u, x)]
    }

    fn check_query(&self, d: usize, k: usize, x: usize) {
        assert!(
            (1..=self.horizon).contains(&d),
            "stage {d} outside 1..={}",
            self.horizon
        );
        assert!(k <= self.budget, "budget {k} exceeds {}", self.budget);
        assert!(x < self.n_states, "state {x} out of range");
    }

    /// Threshold on the wildfire-risk probability at stage `d`; `+∞` when
    /// the budget is depleted.
    pub fn threshold(&self, d: usize, k: usize, u_prev: u8, x: usize) -> f64 {
        self.check_query(d, k, x);
        if k == 0 {
            return f64::INFINITY;
        }
        let day = day_of_stage(self.horizon, d);
        let c = &self.costs;
        let up = f64::from(u_prev);
        let numerator = self.g(d - 1, k - 1, 1, x) - self.g(d - 1, k, 0, x)
            + c.revenue_loss(day)
            + (1.0 - up) * c.reenergize(day)
            - up * c.deenergize(day);
        ratio_threshold(numerator, c.wildfire(day))
    }

    /// 1 iff budget remains and `wrp(x) ≥ threshold`.
    pub fn decide(&self, d: usize, k: usize, u_prev: u8, x: usize) -> u8 {
        u8::from(k >= 1 && self.wrp[x] >= self.threshold(d, k, u_prev, x))
    }

    /// Expected remaining cost of both choices at stage `d`: keep the grid
    /// energized, and shut off (absent when `k = 0`).
    pub fn branch_values(&self, d: usize, k: usize, u_prev: u8, x: usize) -> (f64, Option<f64>) {
        self.check_query(d, k, x);
        let day = day_of_stage(self.horizon, d);
        let c = &self.costs;
        let up = f64::from(u_prev);
        let keep = self.g(d - 1, k, 0, x) + c.wildfire(day) * self.wrp[x] + up * c.deenergize(day);
        let cut = (k >= 1).then(|| {
            self.g(d - 1, k - 1, 1, x) + c.revenue_loss(day) + (1.0 - up) * c.reenergize(day)
        });
        (keep, cut)
    }

    /// Optimal expected cost from stage `d` given the current observation.
    pub fn decision_value(&self, d: usize, k: usize, u_prev: u8, x: usize) -> f64 {
        match self.branch_values(d, k, u_prev, x) {
            (keep, Some(cut)) => keep.min(cut),
            (keep, None) => keep,
        }
    }
}

/// Builds the budgeted table; see [`BudgetTable::build`].
pub fn build_s1(
    horizon: usize,
    budget: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<BudgetTable> {
    BudgetTable::build(horizon, budget, costs, model, indicator)
}

pub fn threshold_s1(table: &BudgetTable, d: usize, k: usize, u_prev: u8, x: usize) -> f64 {
    table.threshold(d, k, u_prev, x)
}

pub fn decide_s1(table: &BudgetTable, d: usize, k: usize, u_prev: u8, x: usize) -> u8 {
    table.decide(d, k, u_prev, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_state() -> TransitionModel {
        TransitionModel::from_dense(vec![vec![1.0]]).unwrap()
    }

    #[test]
    fn boundary_sum_single_state() {
        let costs = CostSchedule::new(3, 2.0, 1.0, 0.0, 0.0).unwrap();
        let t = BudgetTable::build(3, 1, &costs, &single_state(), &[1.0]).unwrap();
        assert_eq!(t.g(1, 0, 0, 0), 4.0);
        assert_eq!(t.g(0, 1, 0, 0), 2.0);
        assert_eq!(t.g(3, 0, 0, 0), 8.0);
    }

    #[test]
    fn no_risk_means_no_cost() {
        let m = TransitionModel::from_dense(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let costs = CostSchedule::new(5, 10.0, 1.0, 0.5, 0.5).unwrap();
        let t = BudgetTable::build(5, 3, &costs, &m, &[0.0, 0.0]).unwrap();
        for d in 0..=5 {
            for k in 0..=3 {
                for x in 0..2 {
                    assert_eq!(t.g(d, k, 0, x), 0.0);
                }
            }
        }
        for d in 1..=5 {
            for k in 0..=3 {
                assert_eq!(t.decide(d, k, 0, 0), 0);
            }
        }
    }

    #[test]
    fn depleted_budget_never_fires() {
        let costs = CostSchedule::new(2, 1e12, 1.0, 0.0, 0.0).unwrap();
        let t = BudgetTable::build(2, 1, &costs, &single_state(), &[1.0]).unwrap();
        assert_eq!(t.threshold(2, 0, 0, 0), f64::INFINITY);
        assert_eq!(t.decide(2, 0, 0, 0), 0);
        assert_eq!(t.decide(2, 1, 0, 0), 1);
    }

    #[test]
    fn zero_offsets_give_zero_threshold() {
        let costs = CostSchedule::new(1, 1.0, 0.0, 0.0, 0.0).unwrap();
        let t = BudgetTable::build(1, 1, &costs, &single_state(), &[0.0]).unwrap();
        assert_eq!(t.threshold(1, 1, 0, 0), 0.0);
        // wrp 0 equals the threshold; ties shut off.
        assert_eq!(t.decide(1, 1, 0, 0), 1);
    }

    #[test]
    fn budget_above_horizon_is_rejected() {
        let costs = CostSchedule::new(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(BudgetTable::build(2, 3, &costs, &single_state(), &[1.0]).is_err());
        assert!(BudgetTable::build(3, 1, &costs, &single_state(), &[1.0]).is_err());
    }

    #[test]
    fn stage_day_mapping() {
        assert_eq!(day_of_stage(122, 122), 1);
        assert_eq!(day_of_stage(122, 1), 122);
        assert_eq!(day_of_stage(122, 0), 123);
        assert_eq!(stage_of_day(122, 1), 122);
    }

    #[test]
    fn matches_the_oracle_on_a_small_instance() {
        use oracle::{evaluate_policy, oracle_budget, Problem};
        let m = TransitionModel::from_dense(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let costs = CostSchedule::new(
            6,
            vec![9.0, 7.0, 8.0, 12.0, 6.0, 10.0, 5.0],
            vec![2.0, 3.0, 2.5, 1.0, 2.0, 3.0, 2.0],
            0.7,
            1.1,
        )
        .unwrap();
        let f = [0.0, 1.0, 1.0];
        let table = BudgetTable::build(6, 2, &costs, &m, &f).unwrap();
        let problem = Problem::new(6, &costs, &m, &f).unwrap();
        let sol = oracle_budget(&problem, 2).unwrap();
        let rolled = evaluate_policy(&problem, Some(2), 0.0, |day, k, u, x| {
            table.decide(stage_of_day(6, day), k, u, x)
        })
        .unwrap();
        for x in 0..3 {
            let v = table.decision_value(6, 2, 0, x);
            assert!((v - sol.value(x)).abs() <= 1e-9 * v.abs(), "{v} vs {}", sol.value(x));
            assert!((rolled[x] - sol.value(x)).abs() <= 1e-9 * v.abs());
        }
    }
}
