//! Reference solvers for small instances: a forward-day recursion over
//! `(day, remaining events, previous observation)` that evaluates supply
//! costs pointwise instead of through demand moments.

use super::{CppParams, QuadCost};
use crate::error::{Error, Result};
use crate::markov_model::TransitionModel;

/// Optimal expected cost `J(day, k, x)` for `day ∈ 1..=T+1`, where `x` is
/// the observation on the day before `day`.
#[derive(Debug, Clone)]
pub struct CppOracle {
    horizon: usize,
    budget: usize,
    n_states: usize,
    values: Vec<f64>,
    actions: Vec<u8>,
}

impl CppOracle {
    fn index(&self, day: usize, k: usize, x: usize) -> usize {
        ((day - 1) * (self.budget + 1) + k) * self.n_states + x
    }

    pub fn value_at(&self, day: usize, k: usize, x: usize) -> f64 {
        self.values[self.index(day, k, x)]
    }

    /// Optimal decision on `day ∈ 1..=T`; ties keep the no-event choice.
    pub fn action(&self, day: usize, k: usize, x: usize) -> u8 {
        self.actions[self.index(day, k, x)]
    }

    /// Optimal value from `X_0 = x0` with the full budget.
    pub fn value(&self, x0: usize) -> f64 {
        self.value_at(1, self.budget, x0)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

fn day_cost(quad: &QuadCost, params: &CppParams, day: usize, u: u8, demand: f64) -> f64 {
    let curtailed = demand - f64::from(u) * params.curtailment();
    quad.power_cost(curtailed, day) + f64::from(u) * params.revenue_loss(day)
}

pub fn oracle_cpp(
    horizon: usize,
    params: &CppParams,
    quad: &QuadCost,
    demand: &[f64],
    model: &TransitionModel,
) -> Result<CppOracle> {
    let budget = params.budget();
    if budget > horizon {
        return Err(Error::BudgetExceedsHorizon { budget, horizon });
    }
    let n = model.n_states();
    let rows = model.to_dense();
    let mut oracle = CppOracle {
        horizon,
        budget,
        n_states: n,
        values: vec![0.0; (horizon + 1) * (budget + 1) * n],
        actions: vec![0; (horizon + 1) * (budget + 1) * n],
    };
    for day in (1..=horizon + 1).rev() {
        for k in 0..=budget {
            for x in 0..n {
                let mut best = (f64::INFINITY, 0u8);
                let allowed: &[u8] = if day <= horizon && k > 0 { &[0, 1] } else { &[0] };
                for &u in allowed {
                    let mut total = 0.0;
                    for (xi, p) in rows[x].iter().enumerate() {
                        if *p == 0.0 {
                            continue;
                        }
                        let mut c = day_cost(quad, params, day, u, demand[xi]);
                        if day <= horizon {
                            c += oracle.value_at(day + 1, k - usize::from(u), xi);
                        }
                        total += p * c;
                    }
                    if total < best.0 {
                        best = (total, u);
                    }
                }
                let at = oracle.index(day, k, x);
                oracle.values[at] = best.0;
                oracle.actions[at] = best.1;
            }
        }
    }
    Ok(oracle)
}

/// Expected total cost of `policy(day, k, x)` from each `X_0`, by exact
/// recursion over the chain. Errors if the policy overspends its budget.
pub fn evaluate_cpp_policy(
    horizon: usize,
    params: &CppParams,
    quad: &QuadCost,
    demand: &[f64],
    model: &TransitionModel,
    policy: &dyn Fn(usize, usize, usize) -> u8,
) -> Result<Vec<f64>> {
    let budget = params.budget();
    let n = model.n_states();
    let rows = model.to_dense();
    let idx = |k: usize, x: usize| k * n + x;
    let mut next: Vec<f64> = vec![0.0; (budget + 1) * n];
    for k in 0..=budget {
        for x in 0..n {
            next[idx(k, x)] = rows[x]
                .iter()
                .zip(demand)
                .map(|(p, q)| p * day_cost(quad, params, horizon + 1, 0, *q))
                .sum();
        }
    }
    for day in (1..=horizon).rev() {
        let mut current = vec![0.0; (budget + 1) * n];
        for k in 0..=budget {
            for x in 0..n {
                let u = policy(day, k, x);
                if u == 1 && k == 0 {
                    return Err(Error::BudgetViolation { day });
                }
                let k_next = k - usize::from(u);
                current[idx(k, x)] = rows[x]
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(xi, p)| p * (day_cost(quad, params, day, u, demand[xi]) + next[idx(k_next, xi)]))
                    .sum();
            }
        }
        next = current;
    }
    Ok((0..n).map(|x| next[idx(budget, x)]).collect())
}
