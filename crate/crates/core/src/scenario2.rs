//! Cost-adjusted shutoff scheduling: every event carries a linear charge
//! `λ` and no hard budget applies. Stage indexing follows
//! [`scenario1`](crate::scenario1).

pub use crate::scenario1::oracle::oracle_adjustment;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_model::TransitionModel;
use crate::risk_cost::{wrp, CostSchedule};
use crate::scenario1::{check_inputs, day_of_stage, ratio_threshold};

/// The table `h_d(u | x)` for `d ∈ 0..=T`, `u ∈ {0,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentTable {
    horizon: usize,
    n_states: usize,
    costs: CostSchedule,
    wrp: Vec<f64>,
    values: Vec<f64>,
}

impl AdjustmentTable {
    /// Backward induction with `λ = costs.adjustment()` added to every
    /// shutoff branch.
    pub fn build(
        horizon: usize,
        costs: &CostSchedule,
        model: &TransitionModel,
        indicator: &[f64],
    ) -> Result<Self> {
        check_inputs(horizon, costs, model, indicator)?;
        let n = model.n_states();
        let risk = wrp(model, indicator);
        let lambda = costs.adjustment();
        let mut table = Self {
            horizon,
            n_states: n,
            costs: costs.clone(),
            wrp: risk,
            values: vec![0.0; (horizon + 1) * 2 * n],
        };
        let end = horizon + 1;
        let e0: Vec<f64> = table.wrp.iter().map(|w| costs.wildfire(end) * w).collect();
        let terminal = model.apply(&e0);
        for u in 0..2u8 {
            let at = table.index(0, u, 0);
            for x in 0..n {
                table.values[at + x] = terminal[x] + f64::from(u) * costs.deenergize(end);
            }
        }
        let mut branch = vec![0.0; n];
        for d in 1..=horizon {
            let day = day_of_stage(horizon, d);
            let (a_big, a_small) = (costs.wildfire(day), costs.revenue_loss(day));
            let (s1, s2) = (costs.deenergize(day), costs.reenergize(day));
            for u in 0..2u8 {
                let uf = f64::from(u);
                let keep = table.index(d - 1, 0, 0);
                let cut = table.index(d - 1, 1, 0);
                for xi in 0..n {
                    let no_shutoff = table.values[keep + xi] + a_big * table.wrp[xi] + uf * s1;
                    let shutoff = table.values[cut + xi] + a_small + lambda + (1.0 - uf) * s2;
                    branch[xi] = no_shutoff.min(shutoff);
                }
                let averaged = model.apply(&branch);
                let at = table.index(d, u, 0);
                table.values[at..at + n].copy_from_slice(&averaged);
            }
        }
        Ok(table)
    }

    fn index(&self, d: usize, u: u8, x: usize) -> usize {
        (d * 2 + usize::from(u)) * self.n_states + x
    }

    /// Reassembles a table from its parts, checking dimensions.
    pub fn from_parts(
        horizon: usize,
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
        if values.len() != (horizon + 1) * 2 * n {
            return Err(Error::Format("table value count does not match its dimensions".into()));
        }
        Ok(Self {
            horizon,
            n_states: n,
            costs,
            wrp,
            values,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
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

    /// Row-major values in `[d][u][x]` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn h(&self, d: usize, u: u8, x: usize) -> f64 {
        self.values[self.index(d, u, x)]
    }

    fn check_query(&self, d: usize, x: usize) {
        assert!(
            (1..=self.horizon).contains(&d),
            "stage {d} outside 1..={}",
            self.horizon
        );
        assert!(x < self.n_states, "state {x} out of range");
    }

    pub fn threshold(&self, d: usize, u_prev: u8, x: usize) -> f64 {
        self.check_query(d, x);
        let day = day_of_stage(self.horizon, d);
        let c = &self.costs;
        let up = f64::from(u_prev);
        let numerator = self.h(d - 1, 1, x) - self.h(d - 1, 0, x)
            + c.revenue_loss(day)
            + c.adjustment()
            + (1.0 - up) * c.reenergize(day)
            - up * c.deenergize(day);
        ratio_threshold(numerator, c.wildfire(day))
    }

    /// 1 iff `wrp(x) ≥ threshold`.
    pub fn decide(&self, d: usize, u_prev: u8, x: usize) -> u8 {
        u8::from(self.wrp[x] >= self.threshold(d, u_prev, x))
    }

    /// Expected remaining cost (including `λ` per event) of keeping the
    /// grid energized and of shutting off at stage `d`.
    pub fn branch_values(&self, d: usize, u_prev: u8, x: usize) -> (f64, f64) {
        self.check_query(d, x);
        let day = day_of_stage(self.horizon, d);
        let c = &self.costs;
        let up = f64::from(u_prev);
        let keep = self.h(d - 1, 0, x) + c.wildfire(day) * self.wrp[x] + up * c.deenergize(day);
        let cut = self.h(d - 1, 1, x)
            + c.revenue_loss(day)
            + c.adjustment()
            + (1.0 - up) * c.reenergize(day);
        (keep, cut)
    }

    pub fn decision_value(&self, d: usize, u_prev: u8, x: usize) -> f64 {
        let (keep, cut) = self.branch_values(d, u_prev, x);
        keep.min(cut)
    }
}

pub fn build_s2(
    horizon: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<AdjustmentTable> {
    AdjustmentTable::build(horizon, costs, model, indicator)
}

pub fn decide_s2(table: &AdjustmentTable, d: usize, u_prev: u8, x: usize) -> u8 {
    table.decide(d, u_prev, x)
}
