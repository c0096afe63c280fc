//! Acceptance checks. Each returns a one-line detail on success and the
//! first violation otherwise.

use std::time::Instant;

use rand::Rng;
use shutoff_core::baselines_sim::{
    cpp_experiment, cpp_historical_threshold, psps_experiment, psps_historical_threshold, run_policy,
    simulate_paths, BudgetPolicy, BudgetRule, CppRun, CppSetup, PolicySummary, PspsCost, PspsRun, PspsSetup,
};
use shutoff_core::cpp_sched::{CppParams, CppTable, QuadCost};
use shutoff_core::scenario1::oracle::{
    evaluate_policy, exactness_gap, oracle_adjustment, oracle_budget, oracle_penalized, open_loop_min,
    open_loop_penalized, CarriedCost, Problem,
};
use shutoff_core::scenario1::{build_s1, decide_s1, stage_of_day};
use shutoff_core::scenario2::{build_s2, decide_s2};
use shutoff_core::scenario3::{covering_grid, feasibility_bounds, ValueTensor};

use super::enumerate::{enumerate, rollout};
use super::fixture::{CppFixture, PspsFixture, MC_SEED};
use super::{random_chain, random_costs, random_indicator, random_instance, rng};

pub type Check = Result<String, String>;

const TOL: f64 = 1e-9;

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `decide_s1` rolled out in the budgeted oracle's state space reaches the
/// oracle's optimum.
pub fn s1_oracle_equivalence(instances: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let inst = random_instance(&mut r, 8, 4);
        let budget = r.random_range(0..=inst.horizon.min(3));
        let table = build_s1(inst.horizon, budget, &inst.costs, &inst.model, &inst.indicator).map_err(fail)?;
        let problem = Problem::new(inst.horizon, &inst.costs, &inst.model, &inst.indicator).map_err(fail)?;
        let sol = oracle_budget(&problem, budget).map_err(fail)?;
        let rolled = evaluate_policy(&problem, Some(budget), 0.0, |day, k, u, x| {
            decide_s1(&table, stage_of_day(inst.horizon, day), k, u, x)
        })
        .map_err(fail)?;
        for (x, v) in rolled.iter().enumerate() {
            let e = rel_err(*v, sol.value(x));
            worst = worst.max(e);
            ensure(e <= TOL, || format!("instance {i}, x0 = {x}: policy {v} vs oracle {}", sol.value(x)))?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{instances} instances, max rel err {worst:.1e}, {secs:.2} s"))
}

/// Tables equal the carried-cost recursions minus the carried amount `w`.
pub fn decomposition_identities(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut cells = 0usize;
    for i in 0..instances {
        let inst = random_instance(&mut r, 6, 3);
        let budget = r.random_range(0..=inst.horizon.min(3));
        let lambda = r.random_range(0.0..8.0);
        let costs = inst.costs.clone().with_adjustment(lambda).map_err(fail)?;
        let problem = Problem::new(inst.horizon, &costs, &inst.model, &inst.indicator).map_err(fail)?;
        let s1 = build_s1(inst.horizon, budget, &costs, &inst.model, &inst.indicator).map_err(fail)?;
        let s2 = build_s2(inst.horizon, &costs, &inst.model, &inst.indicator).map_err(fail)?;
        let budgeted = CarriedCost::new(&problem, &inst.model, 0.0);
        let adjusted = CarriedCost::new(&problem, &inst.model, lambda);
        for d in 0..=inst.horizon {
            for u in 0..2u8 {
                for x in 0..inst.model.n_states() {
                    let w = r.random_range(-50.0..50.0);
                    for k in 0..=budget {
                        let v = budgeted.budgeted(d, w, k, u, x);
                        let e = rel_err(v, w + s1.g(d, k, u, x));
                        worst = worst.max(e);
                        ensure(e <= TOL, || format!("instance {i}: v != w + g at d={d} k={k} u={u} x={x}"))?;
                        cells += 1;
                    }
                    let z = adjusted.adjusted(d, w, u, x);
                    let e = rel_err(z, w + s2.h(d, u, x));
                    worst = worst.max(e);
                    ensure(e <= TOL, || format!("instance {i}: z != w + h at d={d} u={u} x={x}"))?;
                    cells += 1;
                }
            }
        }
    }
    Ok(format!("{instances} instances, {cells} cells, max rel err {worst:.1e}"))
}

/// Over fixed decision sequences, a penalty just above the exactness gap
/// makes the penalized optimum feasible and as good as the constrained one;
/// without a penalty the closed-loop penalized value never exceeds the
/// budgeted one.
pub fn penalty_exactness(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let horizon = r.random_range(2..=8);
        let n = r.random_range(1..=3);
        let model = random_chain(&mut r, n);
        let costs = random_costs(&mut r, horizon);
        let indicator = random_indicator(&mut r, n);
        let budget = r.random_range(0..horizon);
        let problem = Problem::new(horizon, &costs, &model, &indicator).map_err(fail)?;
        let relaxed = oracle_penalized(&problem, budget, 0.0).map_err(fail)?;
        let capped = oracle_budget(&problem, budget).map_err(fail)?;
        for x0 in 0..n {
            let alpha = exactness_gap(&problem, x0, budget);
            let gamma = alpha * (1.0 + 1e-6) + 1.0;
            let (value, seq) = open_loop_penalized(&problem, x0, budget, gamma);
            let events: usize = seq.iter().map(|&u| usize::from(u)).sum();
            ensure(events <= budget, || format!("instance {i}, x0 = {x0}: {events} events > {budget}"))?;
            let constrained = open_loop_min(&problem, x0, Some(budget)).0;
            let e = rel_err(value, constrained);
            worst = worst.max(e);
            ensure(e <= TOL, || format!("instance {i}, x0 = {x0}: penalized {value} vs constrained {constrained}"))?;
            let (free, _) = open_loop_penalized(&problem, x0, budget, 0.0);
            ensure(free <= constrained * (1.0 + TOL), || format!("instance {i}: open-loop ordering"))?;
            ensure(relaxed.value(x0) <= capped.value(x0) * (1.0 + TOL), || {
                format!("instance {i}, x0 = {x0}: γ = 0 value {} > budgeted {}", relaxed.value(x0), capped.value(x0))
            })?;
        }
    }
    Ok(format!("{instances} instances, max rel err {worst:.1e}"))
}

/// `decide_s2` picks the adjustment oracle's argmin at every reachable
/// state; ties accept either branch.
pub fn s2_oracle_equivalence(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut visited = 0usize;
    for i in 0..instances {
        let inst = random_instance(&mut r, 8, 4);
        let lambda = r.random_range(0.0..8.0);
        let costs = inst.costs.clone().with_adjustment(lambda).map_err(fail)?;
        let horizon = inst.horizon;
        let n = inst.model.n_states();
        let rows = inst.model.to_dense();
        let table = build_s2(horizon, &costs, &inst.model, &inst.indicator).map_err(fail)?;
        let problem = Problem::new(horizon, &costs, &inst.model, &inst.indicator).map_err(fail)?;
        let sol = oracle_adjustment(&problem, lambda).map_err(fail)?;
        // reach[u][x] on the current day.
        let mut reach = [vec![true; n], vec![false; n]];
        for day in 1..=horizon {
            let stage = stage_of_day(horizon, day);
            let mut next = [vec![false; n], vec![false; n]];
            for u_prev in 0..2u8 {
                for x in 0..n {
                    if !reach[usize::from(u_prev)][x] {
                        continue;
                    }
                    visited += 1;
                    let [keep, shut] = sol.branches(day, 0, u_prev, x);
                    let (keep, shut) = (keep.unwrap(), shut.unwrap());
                    let chosen = decide_s2(&table, stage, u_prev, x);
                    let tie = rel_err(keep, shut) <= TOL;
                    let best = u8::from(shut < keep);
                    ensure(tie || chosen == best, || {
                        format!("instance {i}: day {day} u={u_prev} x={x} picks {chosen}, oracle {best}")
                    })?;
                    let e = rel_err(table.decision_value(stage, u_prev, x), sol.value_at(day, 0, u_prev, x));
                    worst = worst.max(e);
                    ensure(e <= TOL, || format!("instance {i}: value mismatch at day {day} u={u_prev} x={x}"))?;
                    let moves: &[u8] = if tie { &[0, 1] } else { &[chosen] };
                    for &u in moves {
                        for (s, p) in rows[x].iter().enumerate() {
                            if *p > 0.0 {
                                next[usize::from(u)][s] = true;
                            }
                        }
                    }
                }
            }
            reach = next;
        }
    }
    Ok(format!("{instances} instances, {visited} reachable states, max rel err {worst:.1e}"))
}

/// The constrained-scenario tensor against exhaustive enumeration of
/// grid-valued threshold policies.
pub fn s3_enumeration(instances: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut compared = 0usize;
    for i in 0..instances {
        let horizon = r.random_range(1..=4);
        let n = r.random_range(1..=3);
        let model = random_chain(&mut r, n);
        let costs = random_costs(&mut r, horizon);
        let indicator = random_indicator(&mut r, n);
        let rows = model.to_dense();
        let x0 = r.random_range(0..n);
        let bounds = feasibility_bounds(horizon, &costs, &model, &indicator).map_err(fail)?;
        let problem = Problem::new(horizon, &costs, &model, &indicator).map_err(fail)?;
        let never = oracle_budget(&problem, 0).map_err(fail)?.value(x0);
        let b = bounds[horizon][0][x0];
        let alpha_bar = b + r.random_range(0.1..0.9) * (never - b).max(1.0);
        let grid = covering_grid(horizon, alpha_bar, 100, &costs, &model, &indicator).map_err(fail)?;
        ensure(grid.step() <= 0.01 * (grid.hi() - grid.lo()) * (1.0 + 1e-12), || format!("instance {i}: grid too coarse"))?;
        let tensor = ValueTensor::build(horizon, alpha_bar, grid, &costs, &model, &indicator).map_err(fail)?;
        let reference = enumerate(horizon, &costs, &rows, &indicator, &grid);
        for tau in 0..=horizon {
            for u in 0..2u8 {
                for x in 0..n {
                    let want = reference.bounds[tau][usize::from(u)][x];
                    ensure(rel_err(tensor.bound(tau, u, x), want) <= TOL, || format!("instance {i}: bound at τ={tau}"))?;
                    for &(alpha, v) in &reference.values[tau][usize::from(u)][x] {
                        let got = tensor.value_at(tau, u, x, alpha);
                        ensure(rel_err(got, v) <= TOL, || {
                            format!("instance {i}: V at τ={tau} u={u} x={x} α={alpha}: {got} vs {v}")
                        })?;
                        compared += 1;
                    }
                    let values = tensor.grid_values(tau, u, x);
                    ensure(values.windows(2).all(|w| w[1] <= w[0]), || {
                        format!("instance {i}: V increases in α at τ={tau} u={u} x={x}")
                    })?;
                }
            }
        }
        tensor.check_feasible(x0).map_err(fail)?;
        let (cost, count) = rollout(&tensor, horizon, &costs, &rows, &indicator, 1, x0, alpha_bar, 0);
        ensure(cost <= alpha_bar + grid.step(), || format!("instance {i}: rollout cost {cost} > {alpha_bar} + step"))?;
        ensure(rel_err(count, tensor.start_value(x0)) <= TOL, || format!("instance {i}: rollout count"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{instances} instances, {compared} values compared, {secs:.2} s"))
}

/// The threshold rule against direct branch comparison on random tables,
/// then the event budget on every simulated fixture year.
pub fn cpp_threshold_identity(draws: usize, seed: u64, fixture_run: &CppRun, budget: usize) -> Check {
    let mut r = rng(seed);
    let mut ties = 0usize;
    for i in 0..draws {
        let horizon = r.random_range(1..=6);
        let n = r.random_range(1..=4);
        let m = r.random_range(1..=horizon);
        let params = CppParams::new(horizon, m, r.random_range(1.0..500.0), r.random_range(0.0..1e5)).map_err(fail)?;
        let quad = QuadCost::new(horizon, r.random_range(1e-4..1e-2), r.random_range(0.0..100.0), r.random_range(0.0..1e6))
            .map_err(fail)?;
        let mean: Vec<f64> = (0..n).map(|_| r.random_range(100.0..40_000.0)).collect();
        let square: Vec<f64> = mean.iter().map(|q| q * q + r.random_range(0.0..1e7)).collect();
        let values: Vec<f64> = (0..(horizon + 1) * (m + 1) * n).map(|_| r.random_range(0.0..1e8)).collect();
        let table = CppTable::from_parts(params, quad, mean, square, values).map_err(fail)?;
        let d = r.random_range(1..=horizon);
        let k = r.random_range(1..=m);
        let x = r.random_range(0..n);
        let by_threshold = table.decide(d, k, x).map_err(fail)?;
        let by_branches = table.decide_by_branches(d, k, x);
        if by_threshold != by_branches {
            let (keep, event) = table.branch_values(d, k, x);
            let tie = rel_err(keep, event.unwrap()) <= TOL;
            ensure(tie, || format!("draw {i}: threshold rule {by_threshold} vs branches {by_branches}"))?;
            ties += 1;
        }
    }
    for (name, episodes) in [("policy", &fixture_run.policy), ("historical", &fixture_run.historical)] {
        for (year, e) in episodes.iter().enumerate() {
            ensure(e.count() <= budget, || format!("{name} year {year}: {} events > {budget}", e.count()))?;
        }
    }
    let most = fixture_run.policy.iter().map(|e| e.count()).max().unwrap_or(0);
    Ok(format!(
        "{draws} draws agree ({ties} ties), fixture years use at most {most} of {budget} events"
    ))
}

pub fn psps_run(fx: &PspsFixture, years: usize) -> Result<PspsRun, String> {
    let setup = PspsSetup {
        horizon: fx.horizon,
        budget: fx.budget,
        costs: &fx.costs,
        model: &fx.model,
        indicator: &fx.indicator,
    };
    let threshold = psps_historical_threshold(&setup, &fx.training).map_err(fail)?;
    let paths = simulate_paths(&fx.model, fx.horizon, years, MC_SEED).map_err(fail)?;
    psps_experiment(&setup, &paths, threshold).map_err(fail)
}

pub fn cpp_run(fx: &CppFixture, years: usize) -> Result<CppRun, String> {
    let setup = CppSetup {
        horizon: fx.horizon,
        params: &fx.params,
        quad: &fx.quad,
        model: &fx.model,
        demand: &fx.demand,
    };
    let threshold = cpp_historical_threshold(&setup, &fx.training).map_err(fail)?;
    let paths = simulate_paths(&fx.model, fx.horizon, years, MC_SEED).map_err(fail)?;
    cpp_experiment(&setup, &paths, threshold).map_err(fail)
}

fn line(s: &PolicySummary) -> String {
    format!(
        "{} {:.2} ({:.2}) {:.3} B$",
        s.policy,
        s.count.mean,
        s.count.std,
        s.expected_cost.mean / 1e9
    )
}

/// Event counts and the expected-cost ordering of the shutoff experiment.
pub fn psps_structure(run: &PspsRun, budget: usize) -> Check {
    let rows = run.summaries();
    let [p1, p2, hist] = [&rows[0], &rows[1], &rows[2]];
    let detail = format!("{}; {}; {}", line(p1), line(p2), line(hist));
    ensure(
        p1.count.mean >= budget as f64 - 1.0 && p1.count.mean <= budget as f64 && p1.count.std < 1.0,
        || format!("P1 count outside [{}, {budget}] or spread ≥ 1: {detail}", budget - 1),
    )?;
    ensure(p2.expected_cost.mean <= p1.expected_cost.mean, || format!("P2 above P1: {detail}"))?;
    ensure(p1.expected_cost.mean < hist.expected_cost.mean, || format!("P1 not below historical: {detail}"))?;
    Ok(detail)
}

/// Savings against hindsight: years on which the policy beats the
/// historical rule.
pub fn cpp_wins(run: &CppRun, needed: usize) -> Check {
    let wins = run.policy_wins();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let detail = format!(
        "policy wins {wins}/{} years; mean savings {:.3} vs {:.3}",
        run.policy_savings.len(),
        mean(&run.policy_savings),
        mean(&run.historical_savings)
    );
    ensure(wins >= needed, || detail.clone())?;
    Ok(detail)
}

/// Peak resident set of this process, from `/proc/self/status`.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Table build time, peak memory and Monte-Carlo time on the fixture.
pub fn performance(fx: &PspsFixture) -> Check {
    let start = Instant::now();
    let table = build_s1(fx.horizon, fx.budget, &fx.costs, &fx.model, &fx.indicator).map_err(fail)?;
    let build = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let paths = simulate_paths(&fx.model, fx.horizon, 100, MC_SEED).map_err(fail)?;
    let cost = PspsCost::new(&fx.costs, &fx.model, &fx.indicator);
    for path in &paths {
        run_policy(path, fx.horizon, BudgetRule::Hard(fx.budget), &cost, &BudgetPolicy(&table)).map_err(fail)?;
    }
    let mc = start.elapsed().as_secs_f64();
    let peak = peak_rss_bytes();
    let peak_mb = peak.map_or(f64::NAN, |b| b as f64 / (1024.0 * 1024.0));
    let detail = format!(
        "|X| = {}, build {build:.2} s, 100-year Monte Carlo {mc:.2} s, peak RSS {peak_mb:.0} MiB",
        fx.model.n_states()
    );
    ensure(build < 5.0 && mc < 5.0, || detail.clone())?;
    ensure(peak.is_none_or(|b| b < 1 << 30), || detail.clone())?;
    Ok(detail)
}
