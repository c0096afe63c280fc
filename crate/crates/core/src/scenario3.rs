//! Minimum expected number of shutoffs subject to an expected-cost cap.
//!
//! The constrained problem is solved by value iteration on the state
//! augmented with the cost still allowed, `α`. Stage `τ` decides the same
//! forward day as stage `d = τ` of [`scenario1`](crate::scenario1); stage 0
//! is the forced re-energization. Because switching costs depend on the
//! previous decision, the value is indexed by `(τ, u_prev, x, α)`.
//!
//! Successor thresholds are restricted to a uniform grid plus each
//! successor's own feasibility bound. For every `(τ, u, x)` the
//! attainable pairs `(Σ p·φ, Σ p·V)` form a Pareto frontier that does not
//! depend on `α`, so `V` can be evaluated exactly at any `α` by a binary
//! search on that frontier.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov_model::TransitionModel;
use crate::risk_cost::{wrp, CostSchedule};
use crate::scenario1::{check_inputs, day_of_stage, stage_of_day};

/// Largest `T · |X| · grid points` accepted by [`ValueTensor::build`].
pub const MAX_TENSOR_CELLS: usize = 20_000_000;

/// Largest number of stored frontier points accepted by [`ValueTensor::build`].
pub const MAX_FRONTIER_POINTS: usize = 16_000_000;

/// Largest number of candidate allocations formed in one merge step.
pub const MAX_MERGE_CANDIDATES: usize = 4_000_000;

/// Relative slack when comparing an allocation's cost with its budget.
const BUDGET_TOL: f64 = 1e-9;

fn slack(budget: f64) -> f64 {
    BUDGET_TOL * budget.abs().max(1.0)
}

/// Uniform grid of expected-cost thresholds `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    lo: f64,
    hi: f64,
    step: f64,
}

impl AlphaGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(invalid("alpha_grid", "bounds and step must be finite"));
        }
        if lo >= hi {
            return Err(invalid("alpha_grid", format!("lo {lo} is not below hi {hi}")));
        }
        if step <= 0.0 {
            return Err(invalid("alpha_grid", "step must be positive"));
        }
        let intervals = (hi - lo) / step;
        if (intervals - intervals.round()).abs() > 1e-6 * intervals.max(1.0) {
            return Err(invalid(
                "alpha_grid",
                format!("(hi - lo) / step = {intervals} is not an integer"),
            ));
        }
        Ok(Self { lo, hi, step })
    }

    /// Grid over `[lo, hi]` with `intervals` equal steps.
    pub fn with_intervals(lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(invalid("alpha_grid", "needs at least one interval"));
        }
        Self::new(lo, hi, (hi - lo) / intervals as f64)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.step
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the first grid point `≥ value`.
    pub fn first_at_or_above(&self, value: f64) -> usize {
        if value <= self.lo {
            return 0;
        }
        let mut i = ((value - self.lo) / self.step).floor() as usize;
        i = i.min(self.len());
        while i > 0 && self.point(i - 1) >= value {
            i -= 1;
        }
        while i < self.len() && self.point(i) < value {
            i += 1;
        }
        i
    }
}

/// Expected cost of stage `τ` given the previous decision and the current
/// observation's wildfire-risk probability.
fn stage_expectation(costs: &CostSchedule, day: usize, u_prev: u8, u: u8, risk: f64) -> f64 {
    costs.stage_cost(day - 1, u_prev, u, risk)
}

/// Smallest expected cost over fixed decision sequences for every
/// `(τ, u_prev, x)`, indexed `[τ][u_prev][x]`.
pub fn feasibility_bounds(
    horizon: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<Vec<[Vec<f64>; 2]>> {
    check_inputs(horizon, costs, model, indicator)?;
    Ok(bounds_from_risk(horizon, costs, model, &wrp(model, indicator)))
}

fn bounds_from_risk(
    horizon: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    risk: &[f64],
) -> Vec<[Vec<f64>; 2]> {
    let n = model.n_states();
    // ahead[j][x] = E[wrp(X_j) | X_0 = x].
    let mut ahead = vec![risk.to_vec()];
    for j in 1..=horizon {
        let next = model.apply(&ahead[j - 1]);
        ahead.push(next);
    }
    let end = horizon + 1;
    let mut bounds = Vec::with_capacity(horizon + 1);
    for tau in 0..=horizon {
        let mut layer = [vec![0.0; n], vec![0.0; n]];
        for x in 0..n {
            // Backward over the fixed sequence: tail[u] is the cheapest
            // remaining cost after deciding `u` at the current step.
            let mut tail = [
                stage_expectation(costs, end, 0, 0, ahead[tau][x]),
                stage_expectation(costs, end, 1, 0, ahead[tau][x]),
            ];
            for j in (0..tau).rev() {
                let day = day_of_stage(horizon, tau - j);
                let mut next = [0.0; 2];
                for (u_prev, slot) in next.iter_mut().enumerate() {
                    let up = u_prev as u8;
                    *slot = (0..2u8)
                        .map(|u| {
                            stage_expectation(costs, day, up, u, ahead[j][x]) + tail[usize::from(u)]
                        })
                        .fold(f64::INFINITY, f64::min);
                }
                tail = next;
            }
            layer[0][x] = tail[0];
            layer[1][x] = tail[1];
        }
        bounds.push(layer);
    }
    bounds
}

/// One Pareto-optimal allocation: expected successor threshold and
/// expected successor count, with back-pointers for reconstruction.
#[derive(Debug, Clone, Copy)]
struct FrontPoint {
    cost: f64,
    value: f64,
    prev: u32,
    choice: u32,
}

/// Pareto frontier of successor-threshold allocations for one `(τ, u, x)`.
#[derive(Debug, Clone, Default)]
struct Frontier {
    /// Successors with positive probability, in state order.
    successors: Vec<usize>,
    /// Merge levels; level `j` covers the first `j + 1` successors.
    levels: Vec<Vec<FrontPoint>>,
}

impl Frontier {
    fn last(&self) -> &[FrontPoint] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the cheapest-value point with cost within `budget`.
    fn query(&self, budget: f64) -> Option<usize> {
        let pts = self.last();
        let limit = budget + slack(budget);
        let k = pts.partition_point(|p| p.cost <= limit);
        k.checked_sub(1)
    }

    /// Per-successor choice indices of the frontier point `idx`.
    fn trace(&self, mut idx: usize) -> Vec<usize> {
        let mut choices = vec![0; self.levels.len()];
        for level in (0..self.levels.len()).rev() {
            let p = self.levels[level][idx];
            choices[level] = p.choice as usize;
            idx = p.prev as usize;
        }
        choices
    }
}

/// Keeps points whose value strictly improves on every cheaper point.
fn prune(points: &mut Vec<FrontPoint>) {
    points.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.value.total_cmp(&b.value)));
    let mut kept: Vec<FrontPoint> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        if kept.last().is_none_or(|q| p.value < q.value) {
            kept.push(p);
        }
    }
    *points = kept;
}

/// `V_τ(u, x, ·)` on its candidate thresholds, as a Pareto list
/// `(α ascending, V strictly decreasing)`.
type StepList = Vec<(f64, f64)>;

/// Value function of the constrained problem on an α grid.
#[derive(Debug, Clone)]
pub struct ValueTensor {
    horizon: usize,
    n_states: usize,
    alpha_bar: f64,
    grid: AlphaGrid,
    costs: CostSchedule,
    wrp: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    /// `[τ][u_prev][x]`.
    bounds: Vec<[Vec<f64>; 2]>,
    /// `[τ][u_prev][x]` Pareto lists of `V_τ`.
    steps: Vec<[Vec<StepList>; 2]>,
    /// `[τ][u][x]` for `τ ≥ 1`; index 0 is unused.
    frontiers: Vec<[Vec<Frontier>; 2]>,
}

/// Decision and successor thresholds at one `(day, x, α, u_prev)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedDecision {
    pub u: u8,
    /// Threshold for the next day, indexed by the next observation.
    /// Entries for unreachable successors hold their feasibility bound.
    pub next_alpha: Vec<f64>,
    /// Expected number of events from this day on.
    pub expected_count: f64,
    /// Expected cost of the chosen day plus the promised successor thresholds.
    pub committed_cost: f64,
}

impl ValueTensor {
    /// Solves all layers `τ = 0..=T`.
    pub fn build(
        horizon: usize,
        alpha_bar: f64,
        grid: AlphaGrid,
        costs: &CostSchedule,
        model: &TransitionModel,
        indicator: &[f64],
    ) -> Result<Self> {
        check_inputs(horizon, costs, model, indicator)?;
        if !alpha_bar.is_finite() {
            return Err(invalid("alpha_bar", "must be finite"));
        }
        if grid.hi() < alpha_bar {
            return Err(invalid(
                "alpha_grid",
                format!("upper end {} is below the cap {alpha_bar}", grid.hi()),
            ));
        }
        let n = model.n_states();
        let cells = horizon
            .saturating_mul(n)
            .saturating_mul(2)
            .saturating_mul(grid.len());
        if cells > MAX_TENSOR_CELLS {
            return Err(Error::ScaleGuard(format!(
                "value tensor would hold {cells} cells (limit {MAX_TENSOR_CELLS}); \
                 use fewer states or a coarser grid"
            )));
        }
        let risk = wrp(model, indicator);
        let bounds = bounds_from_risk(horizon, costs, model, &risk);
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|x| model.support(x).into_iter().filter(|(_, p)| *p > 0.0).collect())
            .collect();

        let mut tensor = Self {
            horizon,
            n_states: n,
            alpha_bar,
            grid,
            costs: costs.clone(),
            wrp: risk,
            rows,
            bounds,
            steps: Vec::with_capacity(horizon + 1),
            frontiers: Vec::with_capacity(horizon + 1),
        };
        let terminal: [Vec<StepList>; 2] = [0, 1].map(|u| {
            (0..n)
                .map(|x| vec![(tensor.bounds[0][u][x], 0.0)])
                .collect()
        });
        tensor.steps.push(terminal);
        tensor.frontiers.push([Vec::new(), Vec::new()]);

        let mut stored = 0usize;
        for tau in 1..=horizon {
            let mut frontiers: [Vec<Frontier>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
            for u in 0..2u8 {
                for x in 0..n {
                    let f = tensor.merge(tau, u, x)?;
                    stored += f.levels.iter().map(Vec::len).sum::<usize>();
                    if stored > MAX_FRONTIER_POINTS {
                        return Err(Error::ScaleGuard(format!(
                            "cost-allocation frontiers exceed {MAX_FRONTIER_POINTS} points at day {}; \
                             use fewer states, a shorter horizon or a coarser grid",
                            day_of_stage(horizon, tau)
                        )));
                    }
                    frontiers[usize::from(u)].push(f);
                }
            }
            tensor.frontiers.push(frontiers);
            let mut layer: [Vec<StepList>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
            for u_prev in 0..2u8 {
                for x in 0..n {
                    let b = tensor.bounds[tau][usize::from(u_prev)][x];
                    let mut list: StepList = Vec::new();
                    for alpha in tensor.candidates(b) {
                        let v = tensor.evaluate(tau, u_prev, x, alpha).0;
                        if v < tensor.sentinel() && list.last().is_none_or(|(_, last)| v < *last) {
                            list.push((alpha, v));
                        }
                    }
                    layer[usize::from(u_prev)].push(list);
                }
            }
            tensor.steps.push(layer);
        }
        Ok(tensor)
    }

    /// `b` followed by every grid point at or above it.
    fn candidates(&self, bound: f64) -> impl Iterator<Item = f64> + '_ {
        let first = self.grid.first_at_or_above(bound);
        std::iter::once(bound).chain(
            (first..self.grid.len())
                .map(|i| self.grid.point(i))
                .filter(move |&a| a > bound),
        )
    }

    fn merge(&self, tau: usize, u: u8, x: usize) -> Result<Frontier> {
        let prev = &self.steps[tau - 1][usize::from(u)];
        let row = &self.rows[x];
        // Cheapest completion over the successors after each position.
        let mut rest = vec![0.0; row.len() + 1];
        for (j, &(succ, p)) in row.iter().enumerate().rev() {
            let cheapest = prev[succ].first().map_or(f64::INFINITY, |&(a, _)| p * a);
            rest[j] = rest[j + 1] + cheapest;
        }
        // Largest threshold ever evaluated at this state.
        let top = self.bounds[tau][0][x].max(self.bounds[tau][1][x]).max(self.grid.hi());
        let top = top + slack(top);
        let mut frontier = Frontier::default();
        for (j, &(succ, p)) in row.iter().enumerate() {
            frontier.successors.push(succ);
            let options = &prev[succ];
            let mut merged: Vec<FrontPoint> = match frontier.levels.last() {
                None => options
                    .iter()
                    .enumerate()
                    .map(|(c, &(a, v))| FrontPoint {
                        cost: p * a,
                        value: p * v,
                        prev: 0,
                        choice: c as u32,
                    })
                    .collect(),
                Some(acc) => {
                    let candidates = acc.len().saturating_mul(options.len());
                    if candidates > MAX_MERGE_CANDIDATES {
                        return Err(Error::ScaleGuard(format!(
                            "a cost-allocation merge at day {} would form {candidates} candidates \
                             (limit {MAX_MERGE_CANDIDATES}); use fewer states, a shorter horizon \
                             or a coarser grid",
                            day_of_stage(self.horizon, tau)
                        )));
                    }
                    let mut out = Vec::with_capacity(candidates);
                    for (i, q) in acc.iter().enumerate() {
                        for (c, &(a, v)) in options.iter().enumerate() {
                            out.push(FrontPoint {
                                cost: q.cost + p * a,
                                value: q.value + p * v,
                                prev: i as u32,
                                choice: c as u32,
                            });
                        }
                    }
                    out
                }
            };
            // Allocations that cannot finish within the grid's top are never queried.
            merged.retain(|q| q.cost + rest[j + 1] <= top);
            prune(&mut merged);
            frontier.levels.push(merged);
        }
        Ok(frontier)
    }

    /// `(V, best u, frontier index)` at an arbitrary `α`; thresholds above
    /// both the grid's top and the state's bound are treated as the larger.
    fn evaluate(&self, tau: usize, u_prev: u8, x: usize, alpha: f64) -> (f64, u8, Option<usize>) {
        let alpha = alpha.min(self.grid.hi().max(self.bounds[tau][usize::from(u_prev)][x]));
        let vbar = self.sentinel();
        if tau == 0 {
            let b = self.bounds[0][usize::from(u_prev)][x];
            let v = if alpha + slack(alpha) >= b { 0.0 } else { vbar };
            return (v, 0, None);
        }
        let b = self.bounds[tau][usize::from(u_prev)][x];
        if alpha + slack(alpha) < b {
            return (vbar, 0, None);
        }
        let day = day_of_stage(self.horizon, tau);
        let mut best = (vbar, 0u8, None);
        for u in 0..2u8 {
            let c = stage_expectation(&self.costs, day, u_prev, u, self.wrp[x]);
            let frontier = &self.frontiers[tau][usize::from(u)][x];
            if let Some(idx) = frontier.query(alpha - c) {
                let v = f64::from(u) + frontier.last()[idx].value;
                // Ties keep the earlier (no-shutoff) choice.
                if v < best.0 - 1e-12 {
                    best = (v, u, Some(idx));
                }
            }
        }
        best
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    pub fn grid(&self) -> AlphaGrid {
        self.grid
    }

    pub fn wrp(&self) -> &[f64] {
        &self.wrp
    }

    pub fn costs(&self) -> &CostSchedule {
        &self.costs
    }

    /// Value assigned to infeasible cells: one more than the horizon.
    pub fn sentinel(&self) -> f64 {
        (self.horizon + 1) as f64
    }

    /// Smallest achievable expected cost from `(τ, u_prev, x)`.
    pub fn bound(&self, tau: usize, u_prev: u8, x: usize) -> f64 {
        self.bounds[tau][usize::from(u_prev)][x]
    }

    /// `V_τ(u_prev, x, α)`; the sentinel when infeasible.
    pub fn value_at(&self, tau: usize, u_prev: u8, x: usize, alpha: f64) -> f64 {
        assert!(tau <= self.horizon && x < self.n_states);
        self.evaluate(tau, u_prev, x, alpha).0
    }

    /// `V_τ(u_prev, x, ·)` at every grid point.
    pub fn grid_values(&self, tau: usize, u_prev: u8, x: usize) -> Vec<f64> {
        self.grid
            .points()
            .into_iter()
            .map(|a| self.value_at(tau, u_prev, x, a))
            .collect()
    }

    /// Expected events over the whole horizon from `X_0 = x0`, `u_0 = 0`.
    pub fn start_value(&self, x0: usize) -> f64 {
        self.value_at(self.horizon, 0, x0, self.alpha_bar)
    }

    /// Fails when the cap is below the feasibility bound of the start state.
    pub fn check_feasible(&self, x0: usize) -> Result<()> {
        let b = self.bound(self.horizon, 0, x0);
        if self.start_value(x0) >= self.sentinel() {
            return Err(Error::Infeasible(format!(
                "cost cap {} is below the smallest achievable expected cost {b} from state {x0}",
                self.alpha_bar
            )));
        }
        Ok(())
    }

    /// Optimal decision on forward day `day` with the current threshold.
    pub fn decide(
        &self,
        day: usize,
        x: usize,
        alpha: f64,
        u_prev: u8,
    ) -> Result<ConstrainedDecision> {
        if !(1..=self.horizon).contains(&day) {
            return Err(invalid("day", format!("{day} outside 1..={}", self.horizon)));
        }
        if x >= self.n_states {
            return Err(Error::StateOutOfRange {
                state: x,
                cardinality: self.n_states,
            });
        }
        let tau = stage_of_day(self.horizon, day);
        let (value, u, idx) = self.evaluate(tau, u_prev, x, alpha);
        let Some(idx) = idx else {
            return Err(Error::Infeasible(format!(
                "threshold {alpha} is below the bound {} on day {day}",
                self.bound(tau, u_prev, x)
            )));
        };
        let frontier = &self.frontiers[tau][usize::from(u)][x];
        let choices = frontier.trace(idx);
        let prev = &self.steps[tau - 1][usize::from(u)];
        let mut next_alpha: Vec<f64> = (0..self.n_states)
            .map(|s| self.bound(tau - 1, u, s))
            .collect();
        for (&succ, &c) in frontier.successors.iter().zip(&choices) {
            next_alpha[succ] = prev[succ][c].0;
        }
        let day_cost = stage_expectation(
            &self.costs,
            day_of_stage(self.horizon, tau),
            u_prev,
            u,
            self.wrp[x],
        );
        Ok(ConstrainedDecision {
            u,
            next_alpha,
            expected_count: value,
            committed_cost: day_cost + frontier.last()[idx].cost,
        })
    }
}

pub fn build_value(
    horizon: usize,
    alpha_bar: f64,
    grid: AlphaGrid,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<ValueTensor> {
    ValueTensor::build(horizon, alpha_bar, grid, costs, model, indicator)
}

pub fn extract_policy(
    tensor: &ValueTensor,
    day: usize,
    x: usize,
    alpha: f64,
    u_prev: u8,
) -> Result<ConstrainedDecision> {
    tensor.decide(day, x, alpha, u_prev)
}

/// Grid from the smallest start bound to `alpha_bar` with `intervals` steps.
pub fn covering_grid(
    horizon: usize,
    alpha_bar: f64,
    intervals: usize,
    costs: &CostSchedule,
    model: &TransitionModel,
    indicator: &[f64],
) -> Result<AlphaGrid> {
    let bounds = feasibility_bounds(horizon, costs, model, indicator)?;
    let lo = bounds[horizon][0].iter().copied().fold(f64::INFINITY, f64::min);
    if alpha_bar <= lo {
        return Err(Error::Infeasible(format!(
            "cost cap {alpha_bar} does not exceed the smallest achievable expected cost {lo}"
        )));
    }
    AlphaGrid::with_intervals(lo, alpha_bar, intervals)
}
