//! Episode replay, baseline policies and the Monte Carlo harness.
//!
//! A path `x_0, x_1, …, x_{T+1}` drives one season: the decision for day
//! `n ∈ 1..=T` sees `x_{n-1}` and its cost is realized on `x_n`. Day `T + 1`
//! is a forced no-event terminal day whose costs are recorded separately.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpp_sched::{CppParams, CppTable, QuadCost};
use crate::error::{invalid, Error, Result};
use crate::markov_model::{sample_from, TransitionModel};
use crate::risk_cost::{wrp, CostSchedule};
use crate::scenario1::{stage_of_day, BudgetTable};
use crate::scenario2::AdjustmentTable;

/// Tolerance on the stationary distribution used to draw `x_0`.
const STATIONARY_TOL: f64 = 1e-13;

/// What the simulator does with the event count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetRule {
    /// Events are counted but never limited.
    Unlimited,
    /// An event with nothing left is a contract violation.
    Hard(usize),
    /// Events are suppressed once the budget is spent.
    StopAt(usize),
}

impl BudgetRule {
    fn initial(self) -> Option<usize> {
        match self {
            BudgetRule::Unlimited => None,
            BudgetRule::Hard(k) | BudgetRule::StopAt(k) => Some(k),
        }
    }
}

/// Everything a policy may look at when deciding day `day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionContext {
    pub horizon: usize,
    pub day: usize,
    /// Events left, if the run has a budget.
    pub remaining: Option<usize>,
    pub used: usize,
    pub u_prev: u8,
    /// Observation `x_{day-1}`.
    pub state: usize,
}

impl DecisionContext {
    /// Backward stage of the decision.
    pub fn stage(&self) -> usize {
        stage_of_day(self.horizon, self.day)
    }
}

/// A decision with the quantity and threshold that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub u: u8,
    pub signal: f64,
    pub threshold: f64,
}

pub trait Policy {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step>;
}

fn need_remaining(ctx: &DecisionContext) -> Result<usize> {
    ctx.remaining
        .ok_or_else(|| invalid("budget_rule", "this policy needs a budgeted run"))
}

/// Threshold policy of the budgeted shutoff scenario.
pub struct BudgetPolicy<'a>(pub &'a BudgetTable);

impl Policy for BudgetPolicy<'_> {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step> {
        let k = need_remaining(ctx)?.min(self.0.budget());
        let d = ctx.stage();
        Ok(Step {
            u: self.0.decide(d, k, ctx.u_prev, ctx.state),
            signal: self.0.wrp()[ctx.state],
            threshold: self.0.threshold(d, k, ctx.u_prev, ctx.state),
        })
    }
}

/// Threshold policy of the cost-adjusted shutoff scenario.
pub struct AdjustmentPolicy<'a>(pub &'a AdjustmentTable);

impl Policy for AdjustmentPolicy<'_> {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step> {
        let d = ctx.stage();
        Ok(Step {
            u: self.0.decide(d, ctx.u_prev, ctx.state),
            signal: self.0.wrp()[ctx.state],
            threshold: self.0.threshold(d, ctx.u_prev, ctx.state),
        })
    }
}

/// Threshold policy of the CPP scheduler.
pub struct CppPolicy<'a>(pub &'a CppTable);

impl Policy for CppPolicy<'_> {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step> {
        let k = need_remaining(ctx)?.min(self.0.budget());
        let d = ctx.stage();
        Ok(Step {
            u: self.0.decide(d, k, ctx.state)?,
            signal: self.0.mean_demand()[ctx.state],
            threshold: self.0.threshold(d, k, ctx.state)?,
        })
    }
}

/// Event iff a per-state signal strictly exceeds a constant threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalThreshold {
    pub signal: Vec<f64>,
    pub threshold: f64,
}

impl Policy for SignalThreshold {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step> {
        let s = self.signal[ctx.state];
        Ok(Step {
            u: u8::from(s > self.threshold),
            signal: s,
            threshold: self.threshold,
        })
    }
}

/// A precomputed schedule indexed by day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedSchedule(pub Vec<u8>);

impl Policy for FixedSchedule {
    fn decide(&self, ctx: &DecisionContext) -> Result<Step> {
        let u = self.0[ctx.day - 1];
        Ok(Step {
            u,
            signal: f64::from(u),
            threshold: 0.5,
        })
    }
}

/// Per-day cost accounting for an episode.
pub trait EpisodeCost {
    /// Cost of day `day` conditioned on the observation `x_prev` it was decided on.
    fn expected(&self, day: usize, x_prev: usize, u_prev: u8, u: u8) -> f64;
    /// Cost of day `day` once its own observation `x` is known.
    fn realized(&self, day: usize, x: usize, u_prev: u8, u: u8) -> f64;
}

/// Operating cost of the shutoff problem, without penalty or adjustment.
pub struct PspsCost<'a> {
    costs: &'a CostSchedule,
    indicator: &'a [f64],
    wrp: Vec<f64>,
}

impl<'a> PspsCost<'a> {
    pub fn new(costs: &'a CostSchedule, model: &TransitionModel, indicator: &'a [f64]) -> Self {
        Self {
            costs,
            indicator,
            wrp: wrp(model, indicator),
        }
    }

    pub fn wrp(&self) -> &[f64] {
        &self.wrp
    }
}

impl EpisodeCost for PspsCost<'_> {
    fn expected(&self, day: usize, x_prev: usize, u_prev: u8, u: u8) -> f64 {
        self.costs.stage_cost(day - 1, u_prev, u, self.wrp[x_prev])
    }

    fn realized(&self, day: usize, x: usize, u_prev: u8, u: u8) -> f64 {
        self.costs.stage_cost(day - 1, u_prev, u, self.indicator[x])
    }
}

/// Supply cost plus revenue loss of the CPP problem.
pub struct CppCost<'a> {
    params: &'a CppParams,
    quad: &'a QuadCost,
    demand: &'a [f64],
    mean: Vec<f64>,
    mean_square: Vec<f64>,
}

impl<'a> CppCost<'a> {
    pub fn new(params: &'a CppParams, quad: &'a QuadCost, model: &TransitionModel, demand: &'a [f64]) -> Self {
        let squares: Vec<f64> = demand.iter().map(|q| q * q).collect();
        Self {
            params,
            quad,
            demand,
            mean: model.apply(demand),
            mean_square: model.apply(&squares),
        }
    }

    pub fn mean_demand(&self) -> &[f64] {
        &self.mean
    }
}

impl EpisodeCost for CppCost<'_> {
    fn expected(&self, day: usize, x_prev: usize, _u_prev: u8, u: u8) -> f64 {
        let (b, c, d) = self.quad.coefficients(day);
        let y = f64::from(u) * self.params.curtailment();
        let (m1, m2) = (self.mean[x_prev], self.mean_square[x_prev]);
        b * (m2 - 2.0 * y * m1 + y * y) + c * (m1 - y) + d + f64::from(u) * self.params.revenue_loss(day)
    }

    fn realized(&self, day: usize, x: usize, _u_prev: u8, u: u8) -> f64 {
        let y = f64::from(u) * self.params.curtailment();
        self.quad.power_cost(self.demand[x] - y, day) + f64::from(u) * self.params.revenue_loss(day)
    }
}

/// One replayed season. Per-day vectors have `T` entries; the terminal
/// day's costs are kept apart and included in the totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub decisions: Vec<u8>,
    pub realized: Vec<f64>,
    pub expected: Vec<f64>,
    pub signal: Vec<f64>,
    pub threshold: Vec<f64>,
    /// Events left before each decision, for budgeted runs.
    pub remaining: Vec<Option<usize>>,
    pub terminal_realized: f64,
    pub terminal_expected: f64,
}

impl EpisodeResult {
    pub fn count(&self) -> usize {
        self.decisions.iter().map(|&u| usize::from(u)).sum()
    }

    pub fn total_realized(&self) -> f64 {
        self.realized.iter().sum::<f64>() + self.terminal_realized
    }

    /// Cumulative conditional expected cost of every decision given the
    /// observation it was made on.
    pub fn total_expected(&self) -> f64 {
        self.expected.iter().sum::<f64>() + self.terminal_expected
    }

    /// Writes `day,metric,threshold,decision,budget_left` rows.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "metric", "threshold", "decision", "budget_left"])?;
        for i in 0..self.decisions.len() {
            w.write_record([
                (i + 1).to_string(),
                self.signal[i].to_string(),
                self.threshold[i].to_string(),
                self.decisions[i].to_string(),
                self.remaining[i].map_or_else(String::new, |k| k.to_string()),
            ])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "trace".into(),
            source,
        })?;
        Ok(())
    }
}

/// Replays `policy` along `path` (length at least `horizon + 2`).
pub fn run_policy(
    path: &[usize],
    horizon: usize,
    rule: BudgetRule,
    cost: &dyn EpisodeCost,
    policy: &dyn Policy,
) -> Result<EpisodeResult> {
    if path.len() < horizon + 2 {
        return Err(invalid(
            "path",
            format!("has {} states; a {horizon}-day season needs {}", path.len(), horizon + 2),
        ));
    }
    let mut out = EpisodeResult {
        decisions: Vec::with_capacity(horizon),
        realized: Vec::with_capacity(horizon),
        expected: Vec::with_capacity(horizon),
        signal: Vec::with_capacity(horizon),
        threshold: Vec::with_capacity(horizon),
        remaining: Vec::with_capacity(horizon),
        terminal_realized: 0.0,
        terminal_expected: 0.0,
    };
    let mut remaining = rule.initial();
    let mut used = 0;
    let mut u_prev = 0u8;
    for day in 1..=horizon {
        let ctx = DecisionContext {
            horizon,
            day,
            remaining,
            used,
            u_prev,
            state: path[day - 1],
        };
        let mut step = policy.decide(&ctx)?;
        if step.u == 1 && remaining == Some(0) {
            match rule {
                BudgetRule::Hard(_) => return Err(Error::BudgetViolation { day }),
                _ => step.u = 0,
            }
        }
        out.expected.push(cost.expected(day, path[day - 1], u_prev, step.u));
        out.realized.push(cost.realized(day, path[day], u_prev, step.u));
        out.decisions.push(step.u);
        out.signal.push(step.signal);
        out.threshold.push(step.threshold);
        out.remaining.push(remaining);
        if step.u == 1 {
            used += 1;
            remaining = remaining.map(|k| k - 1);
        }
        u_prev = step.u;
    }
    out.terminal_expected = cost.expected(horizon + 1, path[horizon], u_prev, 0);
    out.terminal_realized = cost.realized(horizon + 1, path[horizon + 1], u_prev, 0);
    Ok(out)
}

/// Mean over years of each year's `rank`-th largest value.
pub fn historical_threshold(years: &[Vec<f64>], rank: usize) -> Result<f64> {
    if years.is_empty() {
        return Err(invalid("training", "needs at least one year"));
    }
    if rank == 0 {
        return Err(invalid("rank", "must be at least 1"));
    }
    let mut total = 0.0;
    for (i, year) in years.iter().enumerate() {
        if year.len() < rank {
            return Err(invalid(
                "training",
                format!("year {i} has {} days, fewer than {rank}", year.len()),
            ));
        }
        let mut sorted = year.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        total += sorted[rank - 1];
    }
    Ok(total / years.len() as f64)
}

/// Events on the `budget` largest values, earlier days winning ties.
pub fn hindsight_schedule(values: &[f64], budget: usize) -> Vec<u8> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut out = vec![0u8; values.len()];
    for &day in order.iter().take(budget) {
        out[day] = 1;
    }
    out
}

/// `(none - policy) / (none - hindsight)`; NaN when hindsight saves nothing.
pub fn savings_vs_hindsight(no_events: f64, policy: f64, hindsight: f64) -> f64 {
    let best = no_events - hindsight;
    if best == 0.0 {
        f64::NAN
    } else {
        (no_events - policy) / best
    }
}

/// Independent stream seed for `year` of a run seeded by `seed`.
pub fn year_seed(seed: u64, year: u64) -> u64 {
    let mut z = seed ^ year.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `x_0` from the stationary distribution and `horizon + 1`
/// transitions after it, one stream per year.
pub fn simulate_paths(model: &TransitionModel, horizon: usize, n_years: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_years == 0 {
        return Err(invalid("years", "must be at least 1"));
    }
    let stationary = model.stationary(STATIONARY_TOL)?;
    Ok((0..n_years as u64)
        .map(|year| {
            let mut rng = ChaCha8Rng::seed_from_u64(year_seed(seed, year));
            let mut x = sample_from(&stationary, rng.random::<f64>());
            let mut path = Vec::with_capacity(horizon + 2);
            path.push(x);
            for _ in 0..=horizon {
                x = model.sample_next(x, rng.random::<f64>());
                path.push(x);
            }
            path
        })
        .collect())
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Per-policy aggregate over simulated years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub count: Stat,
    pub expected_cost: Stat,
    pub realized_cost: Stat,
}

impl PolicySummary {
    pub fn of(policy: &str, episodes: &[EpisodeResult]) -> Self {
        let counts: Vec<f64> = episodes.iter().map(|e| e.count() as f64).collect();
        let expected: Vec<f64> = episodes.iter().map(EpisodeResult::total_expected).collect();
        let realized: Vec<f64> = episodes.iter().map(EpisodeResult::total_realized).collect();
        Self {
            policy: policy.to_string(),
            count: Stat::of(&counts),
            expected_cost: Stat::of(&expected),
            realized_cost: Stat::of(&realized),
        }
    }
}

/// Renders `policy | count avg (std) | expected cost avg (std)` rows, with
/// costs divided by `scale`.
pub fn summary_table(rows: &[PolicySummary], scale: f64, unit: &str) -> String {
    let mut out = format!("{:<12} {:>18} {:>26}\n", "Policy", "Number of events", format!("Expected costs [{unit}]"));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>18} {:>26}\n",
            r.policy,
            format!("{:.2} ({:.2})", r.count.mean, r.count.std),
            format!("{:.3} ({:.3})", r.expected_cost.mean / scale, r.expected_cost.std / scale),
        ));
    }
    out
}

/// Inputs of a shutoff experiment.
pub struct PspsSetup<'a> {
    pub horizon: usize,
    pub budget: usize,
    pub costs: &'a CostSchedule,
    pub model: &'a TransitionModel,
    pub indicator: &'a [f64],
}

/// Episodes of both optimal policies and the historical baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PspsRun {
    pub historical_threshold: f64,
    pub p1: Vec<EpisodeResult>,
    pub p2: Vec<EpisodeResult>,
    pub historical: Vec<EpisodeResult>,
}

impl PspsRun {
    pub fn summaries(&self) -> Vec<PolicySummary> {
        vec![
            PolicySummary::of("P1", &self.p1),
            PolicySummary::of("P2", &self.p2),
            PolicySummary::of("Historical", &self.historical),
        ]
    }
}

/// Historical WRP threshold: the mean over `training` seasons (paths
/// `x_0..=x_{T+1}`, any `T`) of each season's `budget`-th largest daily WRP.
pub fn psps_historical_threshold(setup: &PspsSetup, training: &[Vec<usize>]) -> Result<f64> {
    let cost = PspsCost::new(setup.costs, setup.model, setup.indicator);
    let signals: Vec<Vec<f64>> = training
        .iter()
        .map(|p| {
            let days = season_days(p)?;
            Ok(p[..days].iter().map(|&x| cost.wrp()[x]).collect())
        })
        .collect::<Result<_>>()?;
    historical_threshold(&signals, setup.budget.max(1))
}

/// Historical CPP threshold: the mean over `training` seasons of each
/// season's `budget`-th highest realized demand.
pub fn cpp_historical_threshold(setup: &CppSetup, training: &[Vec<usize>]) -> Result<f64> {
    let demands: Vec<Vec<f64>> = training
        .iter()
        .map(|p| {
            let days = season_days(p)?;
            Ok(realized_demand(p, days, setup.demand))
        })
        .collect::<Result<_>>()?;
    historical_threshold(&demands, setup.params.budget().max(1))
}

fn season_days(path: &[usize]) -> Result<usize> {
    if path.len() < 3 {
        return Err(invalid("training", "a season path needs at least one decision day"));
    }
    Ok(path.len() - 2)
}

/// Runs P1, P2 and the historical policy with the given threshold on the
/// same paths.
pub fn psps_experiment(setup: &PspsSetup, paths: &[Vec<usize>], threshold: f64) -> Result<PspsRun> {
    let PspsSetup { horizon, budget, costs, model, indicator } = *setup;
    let p1 = BudgetTable::build(horizon, budget, costs, model, indicator)?;
    let p2 = AdjustmentTable::build(horizon, costs, model, indicator)?;
    let cost = PspsCost::new(costs, model, indicator);
    let hist = SignalThreshold {
        signal: cost.wrp().to_vec(),
        threshold,
    };
    let mut run = PspsRun {
        historical_threshold: threshold,
        p1: Vec::with_capacity(paths.len()),
        p2: Vec::with_capacity(paths.len()),
        historical: Vec::with_capacity(paths.len()),
    };
    for path in paths {
        run.p1.push(run_policy(path, horizon, BudgetRule::Hard(budget), &cost, &BudgetPolicy(&p1))?);
        run.p2.push(run_policy(path, horizon, BudgetRule::Unlimited, &cost, &AdjustmentPolicy(&p2))?);
        run.historical.push(run_policy(path, horizon, BudgetRule::Unlimited, &cost, &hist)?);
    }
    Ok(run)
}

/// Inputs of a CPP experiment.
pub struct CppSetup<'a> {
    pub horizon: usize,
    pub params: &'a CppParams,
    pub quad: &'a QuadCost,
    pub model: &'a TransitionModel,
    pub demand: &'a [f64],
}

/// Episodes of the optimal, historical, hindsight and no-event schedules
/// with per-year savings against hindsight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CppRun {
    pub historical_threshold: f64,
    pub policy: Vec<EpisodeResult>,
    pub historical: Vec<EpisodeResult>,
    pub hindsight: Vec<EpisodeResult>,
    pub no_events: Vec<EpisodeResult>,
    pub policy_savings: Vec<f64>,
    pub historical_savings: Vec<f64>,
}

impl CppRun {
    pub fn summaries(&self) -> Vec<PolicySummary> {
        vec![
            PolicySummary::of("Policy", &self.policy),
            PolicySummary::of("Historical", &self.historical),
            PolicySummary::of("Hindsight", &self.hindsight),
            PolicySummary::of("No events", &self.no_events),
        ]
    }

    /// Years on which the policy saves strictly more than the historical rule.
    pub fn policy_wins(&self) -> usize {
        self.policy_savings
            .iter()
            .zip(&self.historical_savings)
            .filter(|(p, h)| p > h)
            .count()
    }
}

/// Daily realized demand `q(x_1), …, q(x_T)` of a path.
pub fn realized_demand(path: &[usize], horizon: usize, demand: &[f64]) -> Vec<f64> {
    path[1..=horizon].iter().map(|&x| demand[x]).collect()
}

/// Runs the CPP policy, the budget-capped historical rule on forecast
/// demand, hindsight selection and the no-event schedule on the same paths.
pub fn cpp_experiment(setup: &CppSetup, paths: &[Vec<usize>], historical_threshold: f64) -> Result<CppRun> {
    let CppSetup { horizon, params, quad, model, demand } = *setup;
    let budget = params.budget();
    let table = CppTable::build(horizon, params, quad, demand, model)?;
    let cost = CppCost::new(params, quad, model, demand);
    let hist = SignalThreshold {
        signal: cost.mean_demand().to_vec(),
        threshold: historical_threshold,
    };
    let none = FixedSchedule(vec![0; horizon]);
    let mut run = CppRun {
        historical_threshold,
        policy: Vec::with_capacity(paths.len()),
        historical: Vec::with_capacity(paths.len()),
        hindsight: Vec::with_capacity(paths.len()),
        no_events: Vec::with_capacity(paths.len()),
        policy_savings: Vec::with_capacity(paths.len()),
        historical_savings: Vec::with_capacity(paths.len()),
    };
    for path in paths {
        let best = FixedSchedule(hindsight_schedule(&realized_demand(path, horizon, demand), budget));
        let p = run_policy(path, horizon, BudgetRule::Hard(budget), &cost, &CppPolicy(&table))?;
        let h = run_policy(path, horizon, BudgetRule::StopAt(budget), &cost, &hist)?;
        let b = run_policy(path, horizon, BudgetRule::Hard(budget), &cost, &best)?;
        let n = run_policy(path, horizon, BudgetRule::Unlimited, &cost, &none)?;
        let (cn, cb) = (n.total_realized(), b.total_realized());
        run.policy_savings.push(savings_vs_hindsight(cn, p.total_realized(), cb));
        run.historical_savings.push(savings_vs_hindsight(cn, h.total_realized(), cb));
        run.policy.push(p);
        run.historical.push(h);
        run.hindsight.push(b);
        run.no_events.push(n);
    }
    Ok(run)
}
