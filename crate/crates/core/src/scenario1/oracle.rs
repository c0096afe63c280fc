//! Exhaustive reference solvers for small instances.
//!
//! These work in forward time on realized risk indicators and dense
//! transition rows, sharing nothing with the table builders except
//! [`CostSchedule::stage_cost`]. Day `n ∈ 1..=T` observes `X_{n-1}`, its
//! wildfire term is `f(X_n)`, and the terminal day `T + 1` forces `u = 0`
//! with risk `f(X_{T+1})`.

use crate::error::{invalid, Error, Result};
use crate::markov_model::TransitionModel;
use crate::risk_cost::CostSchedule;

use super::day_of_stage;

pub const MAX_ORACLE_HORIZON: usize = 12;
pub const MAX_ORACLE_STATES: usize = 5;

/// A desk-scale instance in dense form.
#[derive(Debug, Clone)]
pub struct Problem {
    horizon: usize,
    costs: CostSchedule,
    rows: Vec<Vec<f64>>,
    indicator: Vec<f64>,
}

impl Problem {
    pub fn new(
        horizon: usize,
        costs: &CostSchedule,
        model: &TransitionModel,
        indicator: &[f64],
    ) -> Result<Self> {
        super::check_inputs(horizon, costs, model, indicator)?;
        if horizon > MAX_ORACLE_HORIZON || model.n_states() > MAX_ORACLE_STATES {
            return Err(Error::ScaleGuard(format!(
                "oracles accept T ≤ {MAX_ORACLE_HORIZON} and at most {MAX_ORACLE_STATES} states, \
                 got T = {horizon} with {} states",
                model.n_states()
            )));
        }
        Ok(Self {
            horizon,
            costs: costs.clone(),
            rows: model.to_dense(),
            indicator: indicator.to_vec(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn costs(&self) -> &CostSchedule {
        &self.costs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Realized cost of day `day ∈ 1..=T+1` when the next state is `next`.
    fn day_cost(&self, day: usize, u_prev: u8, u: u8, next: usize) -> f64 {
        self.costs.stage_cost(day - 1, u_prev, u, self.indicator[next])
    }
}

/// How an auxiliary counter evolves alongside the weather state.
struct Counter<'a> {
    size: usize,
    start: usize,
    allows_event: &'a dyn Fn(usize) -> bool,
    advance: &'a dyn Fn(usize, u8) -> usize,
    terminal: &'a dyn Fn(usize) -> f64,
    event_cost: f64,
}

/// Optimal closed-loop policy over `(day, counter, u_prev, x)`.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    horizon: usize,
    counters: usize,
    n_states: usize,
    start: usize,
    /// `[day - 1][counter][u_prev][x]` for days `1..=T+1`; the last layer
    /// is the terminal day.
    values: Vec<f64>,
    /// Branch values `[keep, shut]` for decision days; `NAN` when disallowed.
    branches: Vec<[f64; 2]>,
    actions: Vec<u8>,
}

impl OracleSolution {
    fn index(&self, day: usize, counter: usize, u_prev: u8, x: usize) -> usize {
        (((day - 1) * self.counters + counter) * 2 + usize::from(u_prev)) * self.n_states + x
    }

    /// Optimal expected cost from the start of day 1 with `X_0 = x0`.
    pub fn value(&self, x0: usize) -> f64 {
        self.value_at(1, self.start, 0, x0)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_states).map(|x| self.value(x)).collect()
    }

    pub fn value_at(&self, day: usize, counter: usize, u_prev: u8, x: usize) -> f64 {
        self.values[self.index(day, counter, u_prev, x)]
    }

    pub fn action(&self, day: usize, counter: usize, u_prev: u8, x: usize) -> u8 {
        assert!((1..=self.horizon).contains(&day));
        self.actions[self.index(day, counter, u_prev, x)]
    }

    /// Expected cost-to-go of `[keep, shut]`; `None` for a disallowed event.
    pub fn branches(&self, day: usize, counter: usize, u_prev: u8, x: usize) -> [Option<f64>; 2] {
        assert!((1..=self.horizon).contains(&day));
        let b = self.branches[self.index(day, counter, u_prev, x)];
        [Some(b[0]), (!b[1].is_nan()).then_some(b[1])]
    }
}

fn solve_counter(problem: &Problem, counter: &Counter<'_>) -> OracleSolution {
    let (horizon, n) = (problem.horizon, problem.n_states());
    let layer = counter.size * 2 * n;
    let mut sol = OracleSolution {
        horizon,
        counters: counter.size,
        n_states: n,
        start: counter.start,
        values: vec![0.0; (horizon + 1) * layer],
        branches: vec![[f64::NAN; 2]; (horizon + 1) * layer],
        actions: vec![0; (horizon + 1) * layer],
    };
    let terminal_day = horizon + 1;
    for c in 0..counter.size {
        for u_prev in 0..2u8 {
            for x in 0..n {
                let mut v = (counter.terminal)(c);
                for (next, p) in problem.rows[x].iter().enumerate() {
                    v += p * problem.day_cost(terminal_day, u_prev, 0, next);
                }
                let at = sol.index(terminal_day, c, u_prev, x);
                sol.values[at] = v;
            }
        }
    }
    for day in (1..=horizon).rev() {
        for c in 0..counter.size {
            for u_prev in 0..2u8 {
                for x in 0..n {
                    let mut branch = [f64::NAN; 2];
                    for u in 0..2u8 {
                        if u == 1 && !(counter.allows_event)(c) {
                            continue;
                        }
                        let c_next = (counter.advance)(c, u);
                        let mut v = f64::from(u) * counter.event_cost;
                        for (next, p) in problem.rows[x].iter().enumerate() {
                            let cont = sol.values[sol.index(day + 1, c_next, u, next)];
                            v += p * (problem.day_cost(day, u_prev, u, next) + cont);
                        }
                        branch[usize::from(u)] = v;
                    }
                    let at = sol.index(day, c, u_prev, x);
                    let shut = !branch[1].is_nan() && branch[1] < branch[0];
                    sol.actions[at] = u8::from(shut);
                    sol.values[at] = if shut { branch[1] } else { branch[0] };
                    sol.branches[at] = branch;
                }
            }
        }
    }
    sol
}

/// Minimum expected operating cost with at most `budget` events on every
/// path. The counter is the remaining budget.
pub fn oracle_budget(problem: &Problem, budget: usize) -> Result<OracleSolution> {
    if budget > problem.horizon {
        return Err(invalid("budget", "exceeds the horizon"));
    }
    Ok(solve_counter(
        problem,
        &Counter {
            size: budget + 1,
            start: budget,
            allows_event: &|k| k >= 1,
            advance: &|k, u| k - usize::from(u),
            terminal: &|_| 0.0,
            event_cost: 0.0,
        },
    ))
}

/// Minimum expected operating cost plus `gamma · max(0, Σu - budget)`.
/// The counter is the number of events so far.
pub fn oracle_penalized(problem: &Problem, budget: usize, gamma: f64) -> Result<OracleSolution> {
    if !(gamma >= 0.0) {
        return Err(invalid("gamma", "must be nonnegative"));
    }
    let horizon = problem.horizon;
    Ok(solve_counter(
        problem,
        &Counter {
            size: horizon + 1,
            start: 0,
            allows_event: &|_| true,
            // Counts above T - 1 are unreachable before the last day.
            advance: &|c, u| (c + usize::from(u)).min(horizon),
            terminal: &|c| gamma * c.saturating_sub(budget) as f64,
            event_cost: 0.0,
        },
    ))
}

/// Minimum expected operating cost plus `lambda` per event, without a cap.
pub fn oracle_adjustment(problem: &Problem, lambda: f64) -> Result<OracleSolution> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    Ok(solve_counter(
        problem,
        &Counter {
            size: 1,
            start: 0,
            allows_event: &|_| true,
            advance: &|_, _| 0,
            terminal: &|_| 0.0,
            event_cost: lambda,
        },
    ))
}

/// Exact expected cost of a Markov policy `(day, k, u_prev, x) → u` from
/// `u_0 = 0`, `k = budget`, for every `X_0`. With `budget = None` the
/// remaining-budget argument is always 0 and no cap applies. Each event
/// also pays `event_cost`.
pub fn evaluate_policy(
    problem: &Problem,
    budget: Option<usize>,
    event_cost: f64,
    mut policy: impl FnMut(usize, usize, u8, usize) -> u8,
) -> Result<Vec<f64>> {
    let (horizon, n) = (problem.horizon, problem.n_states());
    let kmax = budget.unwrap_or(0);
    let idx = |k: usize, u: u8, x: usize| (k * 2 + usize::from(u)) * n + x;
    let mut next_layer = vec![0.0; (kmax + 1) * 2 * n];
    for k in 0..=kmax {
        for u_prev in 0..2u8 {
            for x in 0..n {
                next_layer[idx(k, u_prev, x)] = problem.rows[x]
                    .iter()
                    .enumerate()
                    .map(|(nx, p)| p * problem.day_cost(horizon + 1, u_prev, 0, nx))
                    .sum();
            }
        }
    }
    for day in (1..=horizon).rev() {
        let mut layer = vec![0.0; next_layer.len()];
        for k in 0..=kmax {
            for u_prev in 0..2u8 {
                for x in 0..n {
                    let u = policy(day, k, u_prev, x);
                    if u > 1 {
                        return Err(invalid("policy", format!("returned decision {u}")));
                    }
                    if budget.is_some() && u == 1 && k == 0 {
                        return Err(Error::BudgetViolation { day });
                    }
                    let k_next = if budget.is_some() { k - usize::from(u) } else { 0 };
                    let mut v = f64::from(u) * event_cost;
                    for (nx, p) in problem.rows[x].iter().enumerate() {
                        v += p
                            * (problem.day_cost(day, u_prev, u, nx)
                                + next_layer[idx(k_next, u, nx)]);
                    }
                    layer[idx(k, u_prev, x)] = v;
                }
            }
        }
        next_layer = layer;
    }
    Ok((0..n).map(|x| next_layer[idx(kmax, 0, x)]).collect())
}

/// Exact expected operating cost of a fixed decision sequence from `X_0 = x0`.
pub fn open_loop_cost(problem: &Problem, x0: usize, decisions: &[u8]) -> f64 {
    assert_eq!(decisions.len(), problem.horizon, "one decision per day");
    let n = problem.n_states();
    let mut dist = vec![0.0; n];
    dist[x0] = 1.0;
    let mut total = 0.0;
    let mut u_prev = 0u8;
    for day in 1..=problem.horizon + 1 {
        let u = if day <= problem.horizon {
            decisions[day - 1]
        } else {
            0
        };
        let mut next = vec![0.0; n];
        for (x, w) in dist.iter().enumerate() {
            for (nx, p) in problem.rows[x].iter().enumerate() {
                next[nx] += w * p;
            }
        }
        for (nx, w) in next.iter().enumerate() {
            total += w * problem.day_cost(day, u_prev, u, nx);
        }
        dist = next;
        u_prev = u;
    }
    total
}

fn all_sequences(horizon: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u32..1 << horizon).map(move |bits| (0..horizon).map(|i| ((bits >> i) & 1) as u8).collect())
}

/// Minimum of `cost(seq) + extra(Σ seq)` over all `2^T` fixed sequences;
/// ties keep the first sequence in enumeration order.
fn open_loop_search(
    problem: &Problem,
    x0: usize,
    extra: impl Fn(usize) -> Option<f64>,
) -> Option<(f64, Vec<u8>)> {
    let mut best: Option<(f64, Vec<u8>)> = None;
    for seq in all_sequences(problem.horizon) {
        let count = seq.iter().map(|&u| usize::from(u)).sum();
        let Some(add) = extra(count) else { continue };
        let v = open_loop_cost(problem, x0, &seq) + add;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, seq));
        }
    }
    best
}

/// Best fixed sequence, optionally restricted to at most `budget` events.
pub fn open_loop_min(problem: &Problem, x0: usize, budget: Option<usize>) -> (f64, Vec<u8>) {
    open_loop_search(problem, x0, |c| match budget {
        Some(b) if c > b => None,
        _ => Some(0.0),
    })
    .expect("the all-zero sequence is always admissible")
}

/// Best fixed sequence under the overrun penalty `gamma · max(0, Σu - budget)`.
pub fn open_loop_penalized(
    problem: &Problem,
    x0: usize,
    budget: usize,
    gamma: f64,
) -> (f64, Vec<u8>) {
    open_loop_search(problem, x0, |c| Some(gamma * c.saturating_sub(budget) as f64))
        .expect("search space is nonempty")
}

/// Gap between the budget-constrained and unconstrained open-loop minima.
/// Any penalty coefficient above it makes the penalized problem exact.
pub fn exactness_gap(problem: &Problem, x0: usize, budget: usize) -> f64 {
    open_loop_min(problem, x0, Some(budget)).0 - open_loop_min(problem, x0, None).0
}

/// Literal carried-cost value recursions, used to check that the tables
/// equal these values minus the carried offset.
pub struct CarriedCost<'a> {
    problem: &'a Problem,
    powers: Vec<Vec<Vec<f64>>>,
    expected_risk: Vec<f64>,
    lambda: f64,
}

impl<'a> CarriedCost<'a> {
    /// `lambda` is added to every shutoff branch; use 0 for the budgeted
    /// recursion.
    pub fn new(problem: &'a Problem, model: &TransitionModel, lambda: f64) -> Self {
        let powers = (0..=problem.horizon as u32 + 1).map(|i| model.n_step(i)).collect();
        let expected_risk = problem
            .rows
            .iter()
            .map(|row| row.iter().zip(&problem.indicator).map(|(p, f)| p * f).sum())
            .collect();
        Self {
            problem,
            powers,
            expected_risk,
            lambda,
        }
    }

    fn day(&self, d: usize) -> usize {
        day_of_stage(self.problem.horizon, d)
    }

    /// `E[A f(next) | X = ξ]` at stage `d`.
    fn wildfire(&self, d: usize, xi: usize) -> f64 {
        self.problem.costs.wildfire(self.day(d)) * self.expected_risk[xi]
    }

    fn average(&self, x: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.problem.rows[x].iter().enumerate().map(|(xi, p)| p * f(xi)).sum()
    }

    /// Budgeted value `v_d(w, k | u, x)`.
    pub fn budgeted(&self, d: usize, w: f64, k: usize, u: u8, x: usize) -> f64 {
        let c = &self.problem.costs;
        let uf = f64::from(u);
        if d == 0 {
            return w + self.average(x, |xi| self.wildfire(0, xi)) + uf * c.deenergize(self.day(0));
        }
        if k == 0 {
            let mut tail = 0.0;
            for i in 0..=d {
                let power = &self.powers[d - i + 1];
                for xi in 0..self.problem.n_states() {
                    tail += self.wildfire(i, xi) * power[x][xi];
                }
            }
            return w + tail + uf * c.deenergize(self.day(d));
        }
        let day = self.day(d);
        self.average(x, |xi| {
            let keep = self.budgeted(d - 1, w + self.wildfire(d, xi) + uf * c.deenergize(day), k, 0, xi);
            let shut = self.budgeted(
                d - 1,
                w + c.revenue_loss(day) + (1.0 - uf) * c.reenergize(day),
                k - 1,
                1,
                xi,
            );
            keep.min(shut)
        })
    }

    /// Adjusted value `z_d(w | u, x)`.
    pub fn adjusted(&self, d: usize, w: f64, u: u8, x: usize) -> f64 {
        let c = &self.problem.costs;
        let uf = f64::from(u);
        if d == 0 {
            return w + self.average(x, |xi| self.wildfire(0, xi)) + uf * c.deenergize(self.day(0));
        }
        let day = self.day(d);
        self.average(x, |xi| {
            let keep = self.adjusted(d - 1, w + self.wildfire(d, xi) + uf * c.deenergize(day), 0, xi);
            let shut = self.adjusted(
                d - 1,
                w + c.revenue_loss(day) + self.lambda + (1.0 - uf) * c.reenergize(day),
                1,
                xi,
            );
            keep.min(shut)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(horizon: usize, a_big: f64, a_small: f64, s: f64) -> Problem {
        let m = TransitionModel::from_dense(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let c = CostSchedule::new(horizon, a_big, a_small, s, s).unwrap();
        Problem::new(horizon, &c, &m, &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn scale_guard() {
        let m = TransitionModel::from_dense(vec![vec![1.0]]).unwrap();
        let c = CostSchedule::new(13, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            Problem::new(13, &c, &m, &[1.0]),
            Err(Error::ScaleGuard(_))
        ));
    }

    #[test]
    fn zero_budget_is_never_shutting_off() {
        let p = two_state(4, 10.0, 3.0, 1.0);
        let sol = oracle_budget(&p, 0).unwrap();
        for x0 in 0..2 {
            let never = open_loop_cost(&p, x0, &[0; 4]);
            assert!((sol.value(x0) - never).abs() < 1e-12);
        }
    }

    #[test]
    fn full_budget_without_switching_is_myopic() {
        let p = two_state(4, 10.0, 3.0, 0.0);
        let sol = oracle_budget(&p, 4).unwrap();
        // Each day (and the terminal) contributes min(a, A·wrp) under the chain.
        let m = TransitionModel::from_dense(p.rows.clone()).unwrap();
        let wrp = m.apply(&[0.0, 1.0]);
        for x0 in 0..2 {
            let mut dist = vec![0.0; 2];
            dist[x0] = 1.0;
            let mut expected = 0.0;
            for _ in 0..4 {
                expected += dist
                    .iter()
                    .zip(&wrp)
                    .map(|(d, w)| d * (10.0 * w).min(3.0))
                    .sum::<f64>();
                dist = m.propagate(&dist);
            }
            expected += dist.iter().zip(&wrp).map(|(d, w)| d * 10.0 * w).sum::<f64>();
            assert!((sol.value(x0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn penalty_vacuous_cases_match_unconstrained() {
        let p = two_state(5, 10.0, 3.0, 1.0);
        let free = oracle_adjustment(&p, 0.0).unwrap();
        let a = oracle_penalized(&p, 0, 0.0).unwrap();
        let b = oracle_penalized(&p, 5, 1e6).unwrap();
        for x in 0..2 {
            assert!((a.value(x) - free.value(x)).abs() < 1e-12);
            assert!((b.value(x) - free.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_day_adjustment_compares_two_expectations() {
        let p = two_state(1, 10.0, 3.0, 1.0);
        let sol = oracle_adjustment(&p, 0.5).unwrap();
        for x in 0..2 {
            let keep = open_loop_cost(&p, x, &[0]);
            let shut = open_loop_cost(&p, x, &[1]) + 0.5;
            assert!((sol.value(x) - keep.min(shut)).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_evaluation_reproduces_the_optimum() {
        let p = two_state(5, 10.0, 3.0, 1.0);
        let sol = oracle_budget(&p, 2).unwrap();
        let v = evaluate_policy(&p, Some(2), 0.0, |d, k, u, x| sol.action(d, k, u, x)).unwrap();
        for x in 0..2 {
            assert!((v[x] - sol.value(x)).abs() < 1e-12);
        }
        assert!(matches!(
            evaluate_policy(&p, Some(2), 0.0, |_, _, _, _| 1),
            Err(Error::BudgetViolation { .. })
        ));
    }
}
