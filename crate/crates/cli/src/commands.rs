//! Subcommand implementations.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use shutoff_core::baselines_sim::{
    cpp_experiment, cpp_historical_threshold, psps_experiment, psps_historical_threshold, run_policy,
    simulate_paths, summary_table, BudgetRule, CppRun, CppSetup, DecisionContext, EpisodeResult, Policy,
    PolicySummary, PspsCost, PspsRun, PspsSetup, Stat, Step,
};
use shutoff_core::cpp_sched::{CppTable, DemandModel};
use shutoff_core::ingest::{day_type, fit_bins, fit_demand, load_csv, WeatherFrame};
use shutoff_core::markov_model::{estimate_transitions, StateSpace, TransitionModel};
use shutoff_core::risk_cost::CostSchedule;
use shutoff_core::scenario1::BudgetTable;
use shutoff_core::scenario2::AdjustmentTable;
use shutoff_core::scenario3::{covering_grid, ValueTensor};
use shutoff_core::table_io::StoredTable;

use crate::config::{RunConfig, Scenario};
use crate::failure::{Failure, Outcome};

pub const MODEL_FILE: &str = "model.json";
pub const TABLE_FILE: &str = "table.bin";
const MODEL_FORMAT: &str = "shutoff-model";
const MODEL_VERSION: u32 = 1;

/// Fitted demand regression stored with the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandArtifact {
    pub model: DemandModel,
    pub rmse: f64,
    pub rows: usize,
}

/// State space, transition matrix and optional demand model of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub scenario: Scenario,
    pub train_years: Vec<i32>,
    pub space: StateSpace,
    pub transitions: TransitionModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandArtifact>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_trace(path: &Path, episode: &EpisodeResult) -> Outcome<()> {
    let mut buf = Vec::new();
    episode.write_trace(&mut buf)?;
    write_file(path, &buf)
}

struct Loaded {
    train: WeatherFrame,
    test: WeatherFrame,
}

fn load_data(config: &RunConfig) -> Outcome<Loaded> {
    let frame = load_csv(&config.data.path, &config.data.schema(), config.data.options())?;
    let (train, test) = frame.split(&config.data.train_years, &config.data.test_years)?;
    Ok(Loaded { train, test })
}

fn load_model(out: &Path, config: &RunConfig) -> Outcome<ModelArtifact> {
    let path = out.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        Failure::data(format!("{}: {e} (run `fit` first)", path.display()))
    })?;
    let model: ModelArtifact =
        serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
        return Err(Failure::data(format!(
            "{}: unsupported artifact {} v{}",
            path.display(),
            model.format,
            model.version
        )));
    }
    if model.scenario != config.scenario {
        return Err(Failure::usage(format!(
            "{} was fitted for scenario {}, the config says {}",
            path.display(),
            model.scenario.tag(),
            config.scenario.tag()
        )));
    }
    Ok(model)
}

fn load_table(out: &Path) -> Outcome<StoredTable> {
    let path = out.join(TABLE_FILE);
    if !path.is_file() {
        return Err(Failure::data(format!("{} not found (run `solve` first)", path.display())));
    }
    Ok(StoredTable::load(&path)?)
}

pub fn fit(config: &RunConfig, out: &Path) -> Outcome<()> {
    let data = load_data(config)?;
    let space = fit_bins(&data.train, &config.bins, config.day_types)?;
    let paths = data.train.transition_paths(&space)?;
    let transitions = estimate_transitions(&paths, space.cardinality(), config.smoothing)?;
    let demand = if config.scenario == Scenario::Cpp {
        let fit = fit_demand(&data.train, &space)?;
        Some(DemandArtifact {
            model: fit.model,
            rmse: fit.rmse,
            rows: fit.rows,
        })
    } else {
        None
    };
    let artifact = ModelArtifact {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        scenario: config.scenario,
        train_years: config.data.train_years.clone(),
        space,
        transitions,
        demand,
    };
    let path = out.join(MODEL_FILE);
    write_json(&path, &artifact)?;
    say!("states: {}", artifact.space.cardinality());
    say!("training seasons: {}", paths.len());
    if let Some(d) = &artifact.demand {
        say!("demand fit: rmse {:.1} over {} days", d.rmse, d.rows);
    }
    say!("wrote {}", path.display());
    Ok(())
}

/// Per-day threshold range, skipping infinite entries.
#[derive(Debug, Clone, Copy)]
struct Range {
    min: f64,
    max: f64,
}

impl Range {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn add(&mut self, v: f64) {
        if v.is_finite() {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }
}

fn print_ranges(out: &Path, label: &str, ranges: &[Range]) -> Outcome<()> {
    let mut csv = format!("day,min_{label},max_{label}\n");
    say!("{:>5} {:>14} {:>14}", "day", format!("min {label}"), format!("max {label}"));
    for (i, r) in ranges.iter().enumerate() {
        let (lo, hi) = if r.min <= r.max { (r.min, r.max) } else { (f64::NAN, f64::NAN) };
        say!("{:>5} {:>14.6e} {:>14.6e}", i + 1, lo, hi);
        csv.push_str(&format!("{},{lo},{hi}\n", i + 1));
    }
    write_file(&out.join("thresholds.csv"), csv.as_bytes())
}

fn psps_inputs(config: &RunConfig, model: &ModelArtifact) -> Outcome<(CostSchedule, Vec<f64>)> {
    let costs = config.cost_schedule()?;
    let indicator = config.risk_rule.indicator(&model.space)?;
    Ok((costs, indicator))
}

fn demand_of(model: &ModelArtifact) -> Outcome<Vec<f64>> {
    let d = model
        .demand
        .as_ref()
        .ok_or_else(|| Failure::data("model artifact has no demand model; refit with a cpp config"))?;
    Ok(d.model.per_state(&model.space)?)
}

fn build_tensor(config: &RunConfig, model: &ModelArtifact) -> Outcome<ValueTensor> {
    let alpha_bar = config.cost_cap()?;
    let (costs, indicator) = psps_inputs(config, model)?;
    let grid = covering_grid(
        config.horizon,
        alpha_bar,
        config.grid_intervals,
        &costs,
        &model.transitions,
        &indicator,
    )?;
    Ok(ValueTensor::build(
        config.horizon,
        alpha_bar,
        grid,
        &costs,
        &model.transitions,
        &indicator,
    )?)
}

pub fn solve(config: &RunConfig, out: &Path) -> Outcome<()> {
    let model = load_model(out, config)?;
    let t = config.horizon;
    let n = model.space.cardinality();
    say!("scenario: {}", config.scenario.tag());
    match config.scenario {
        Scenario::S1 => {
            let budget = config.event_budget()?;
            let (costs, indicator) = psps_inputs(config, &model)?;
            let table = BudgetTable::build(t, budget, &costs, &model.transitions, &indicator)?;
            say!("table dims: ({}, {}, 2, {n})", t + 1, budget + 1);
            let mut ranges = vec![Range::new(); t];
            for (day, r) in ranges.iter_mut().enumerate() {
                let d = t - day;
                for k in 1..=budget {
                    for u in 0..=1 {
                        for x in 0..n {
                            r.add(table.threshold(d, k, u, x));
                        }
                    }
                }
            }
            StoredTable::Budget(table).save(&out.join(TABLE_FILE))?;
            print_ranges(out, "threshold", &ranges)?;
        }
        Scenario::S2 => {
            let (costs, indicator) = psps_inputs(config, &model)?;
            let table = AdjustmentTable::build(t, &costs, &model.transitions, &indicator)?;
            say!("table dims: ({}, 2, {n})", t + 1);
            let mut ranges = vec![Range::new(); t];
            for (day, r) in ranges.iter_mut().enumerate() {
                let d = t - day;
                for u in 0..=1 {
                    for x in 0..n {
                        r.add(table.threshold(d, u, x));
                    }
                }
            }
            StoredTable::Adjustment(table).save(&out.join(TABLE_FILE))?;
            print_ranges(out, "threshold", &ranges)?;
        }
        Scenario::S3 => {
            let tensor = build_tensor(config, &model)?;
            let grid = tensor.grid();
            say!("value dims: ({}, 2, {n}, {})", t + 1, grid.len());
            say!("cost grid: {:.6e} ..= {:.6e} step {:.6e}", grid.lo(), grid.hi(), grid.step());
            let feasible = (0..n).filter(|&x| tensor.check_feasible(x).is_ok()).count();
            say!("start states meeting the cap: {feasible} of {n}");
            if feasible == 0 {
                return Err(Failure::from(shutoff_core::Error::Infeasible(format!(
                    "cost cap {} is below every start state's smallest expected cost",
                    tensor.alpha_bar()
                ))));
            }
            let mut ranges = vec![Range::new(); t];
            for (day, r) in ranges.iter_mut().enumerate() {
                let tau = t - day;
                for u in 0..=1 {
                    for x in 0..n {
                        r.add(tensor.bound(tau, u, x));
                    }
                }
            }
            let starts: Vec<f64> = (0..n).map(|x| tensor.start_value(x)).collect();
            write_json(
                &out.join("s3_summary.json"),
                &json!({
                    "alpha_bar": tensor.alpha_bar(),
                    "grid": {"lo": grid.lo(), "hi": grid.hi(), "step": grid.step()},
                    "feasible_start_states": feasible,
                    "start_expected_events": starts,
                }),
            )?;
            print_ranges(out, "cost_bound", &ranges)?;
        }
        Scenario::Cpp => {
            let (params, quad) = config.cpp_costs()?;
            let demand = demand_of(&model)?;
            let table = CppTable::build(t, &params, &quad, &demand, &model.transitions)?;
            let budget = params.budget();
            say!("table dims: ({}, {}, {n})", t + 1, budget + 1);
            let mut ranges = vec![Range::new(); t];
            for (day, r) in ranges.iter_mut().enumerate() {
                for k in 1..=budget {
                    for x in 0..n {
                        r.add(table.threshold(day + 1, k, x)?);
                    }
                }
            }
            StoredTable::Cpp(table).save(&out.join(TABLE_FILE))?;
            print_ranges(out, "threshold", &ranges)?;
        }
    }
    say!("wrote {}", out.display());
    Ok(())
}

/// Arguments of one advisory step.
pub struct AdviseArgs {
    pub day: usize,
    pub prev_u: u8,
    pub budget_left: Option<usize>,
    pub obs: Vec<f64>,
    pub date: Option<chrono::NaiveDate>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Advice {
    scenario: &'static str,
    day: usize,
    state: usize,
    metric: f64,
    threshold: Option<f64>,
    decision: u8,
    budget_left: Option<usize>,
    reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_events: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    next_alpha: Option<Vec<f64>>,
}

/// Shutoff rules fire on ties; the critical-peak rule does not.
fn reason(decision: u8, fires_on_tie: bool) -> String {
    match (decision == 1, fires_on_tie) {
        (true, true) => "metric at or above threshold",
        (false, true) => "metric below threshold",
        (true, false) => "metric above threshold",
        (false, false) => "metric at or below threshold",
    }
    .into()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn advise(config: &RunConfig, out: &Path, args: &AdviseArgs) -> Outcome<String> {
    let t = config.horizon;
    if !(1..=t).contains(&args.day) {
        return Err(Failure::usage(format!("--day {} outside 1..={t}", args.day)));
    }
    if args.prev_u > 1 {
        return Err(Failure::usage("--prev-u must be 0 or 1"));
    }
    let model = load_model(out, config)?;
    let day_type = match (model.space.day_types(), args.date) {
        (None, _) => None,
        (Some(_), Some(date)) => Some(day_type(date)),
        (Some(_), None) => {
            return Err(Failure::usage("this state space has day types; pass --date of the observation"))
        }
    };
    let state = model
        .space
        .discretize(&args.obs, day_type)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let need_k = |limit: usize| -> Outcome<usize> {
        let k = args
            .budget_left
            .ok_or_else(|| Failure::usage("--budget-left is required for this scenario"))?;
        if k > limit {
            return Err(Failure::usage(format!("--budget-left {k} outside 0..={limit}")));
        }
        Ok(k)
    };
    let advice = match config.scenario {
        Scenario::S1 => {
            let StoredTable::Budget(table) = load_table(out)? else {
                return Err(Failure::data("table.bin does not hold a scenario 1 table"));
            };
            let k = need_k(table.budget())?;
            let d = t + 1 - args.day;
            let decision = table.decide(d, k, args.prev_u, state);
            Advice {
                scenario: "s1",
                day: args.day,
                state,
                metric: table.wrp()[state],
                threshold: finite(table.threshold(d, k, args.prev_u, state)),
                decision,
                budget_left: Some(k),
                reason: if k == 0 { "budget depleted".into() } else { reason(decision, true) },
                expected_events: None,
                next_alpha: None,
            }
        }
        Scenario::S2 => {
            let StoredTable::Adjustment(table) = load_table(out)? else {
                return Err(Failure::data("table.bin does not hold a scenario 2 table"));
            };
            let d = t + 1 - args.day;
            let decision = table.decide(d, args.prev_u, state);
            Advice {
                scenario: "s2",
                day: args.day,
                state,
                metric: table.wrp()[state],
                threshold: finite(table.threshold(d, args.prev_u, state)),
                decision,
                budget_left: None,
                reason: reason(decision, true),
                expected_events: None,
                next_alpha: None,
            }
        }
        Scenario::S3 => {
            let tensor = build_tensor(config, &model)?;
            let alpha = args.alpha.unwrap_or(tensor.alpha_bar());
            let step = tensor.decide(args.day, state, alpha, args.prev_u)?;
            Advice {
                scenario: "s3",
                day: args.day,
                state,
                metric: tensor.wrp()[state],
                threshold: Some(alpha),
                decision: step.u,
                budget_left: None,
                reason: "fewest expected events within the cost cap".into(),
                expected_events: Some(step.expected_count),
                next_alpha: Some(step.next_alpha),
            }
        }
        Scenario::Cpp => {
            let StoredTable::Cpp(table) = load_table(out)? else {
                return Err(Failure::data("table.bin does not hold a cpp table"));
            };
            let k = need_k(table.budget())?;
            let (decision, threshold) = if k == 0 {
                (0, None)
            } else {
                (table.decide(args.day, k, state)?, finite(table.threshold(args.day, k, state)?))
            };
            Advice {
                scenario: "cpp",
                day: args.day,
                state,
                metric: table.mean_demand()[state],
                threshold,
                decision,
                budget_left: Some(k),
                reason: if k == 0 { "budget depleted".into() } else { reason(decision, false) },
                expected_events: None,
                next_alpha: None,
            }
        }
    };
    serde_json::to_string(&advice).map_err(|e| Failure::data(e.to_string()))
}

/// Scenario 3 policy carrying the per-state cost thresholds between days.
struct CapPolicy<'a> {
    tensor: &'a ValueTensor,
    next: RefCell<Option<Vec<f64>>>,
}

impl Policy for CapPolicy<'_> {
    fn decide(&self, ctx: &DecisionContext) -> shutoff_core::Result<Step> {
        let alpha = if ctx.day == 1 {
            self.tensor.alpha_bar()
        } else {
            self.next
                .borrow()
                .as_ref()
                .map_or(self.tensor.alpha_bar(), |v| v[ctx.state])
        };
        let d = self.tensor.decide(ctx.day, ctx.state, alpha, ctx.u_prev)?;
        *self.next.borrow_mut() = Some(d.next_alpha);
        Ok(Step {
            u: d.u,
            signal: self.tensor.wrp()[ctx.state],
            threshold: alpha,
        })
    }
}

fn cap_episodes(
    config: &RunConfig,
    model: &ModelArtifact,
    tensor: &ValueTensor,
    paths: &[Vec<usize>],
) -> Outcome<Vec<EpisodeResult>> {
    let (costs, indicator) = psps_inputs(config, model)?;
    let cost = PspsCost::new(&costs, &model.transitions, &indicator);
    paths
        .iter()
        .map(|p| {
            tensor.check_feasible(p[0])?;
            let policy = CapPolicy {
                tensor,
                next: RefCell::new(None),
            };
            Ok(run_policy(p, config.horizon, BudgetRule::Unlimited, &cost, &policy)?)
        })
        .collect()
}

fn psps_run(config: &RunConfig, model: &ModelArtifact, train: &WeatherFrame, paths: &[Vec<usize>]) -> Outcome<PspsRun> {
    let budget = config.event_budget()?;
    let (costs, indicator) = psps_inputs(config, model)?;
    let setup = PspsSetup {
        horizon: config.horizon,
        budget,
        costs: &costs,
        model: &model.transitions,
        indicator: &indicator,
    };
    let training = train.transition_paths(&model.space)?;
    let threshold = psps_historical_threshold(&setup, &training)?;
    Ok(psps_experiment(&setup, paths, threshold)?)
}

fn cpp_run(config: &RunConfig, model: &ModelArtifact, train: &WeatherFrame, paths: &[Vec<usize>]) -> Outcome<CppRun> {
    let (params, quad) = config.cpp_costs()?;
    let demand = demand_of(model)?;
    let setup = CppSetup {
        horizon: config.horizon,
        params: &params,
        quad: &quad,
        model: &model.transitions,
        demand: &demand,
    };
    let training = train.transition_paths(&model.space)?;
    let threshold = cpp_historical_threshold(&setup, &training)?;
    Ok(cpp_experiment(&setup, paths, threshold)?)
}

/// Named episode lists produced by one run, in report order.
struct Outcomes {
    policies: Vec<(&'static str, Vec<EpisodeResult>)>,
    historical_threshold: Option<f64>,
    savings: Option<(Vec<f64>, Vec<f64>)>,
    scale: f64,
    unit: &'static str,
}

fn run_all(config: &RunConfig, model: &ModelArtifact, train: &WeatherFrame, paths: &[Vec<usize>]) -> Outcome<Outcomes> {
    Ok(match config.scenario {
        Scenario::S1 | Scenario::S2 => {
            let run = psps_run(config, model, train, paths)?;
            Outcomes {
                policies: vec![("P1", run.p1), ("P2", run.p2), ("Historical", run.historical)],
                historical_threshold: Some(run.historical_threshold),
                savings: None,
                scale: 1e9,
                unit: "B$",
            }
        }
        Scenario::S3 => {
            let tensor = build_tensor(config, model)?;
            Outcomes {
                policies: vec![("P3", cap_episodes(config, model, &tensor, paths)?)],
                historical_threshold: None,
                savings: None,
                scale: 1e9,
                unit: "B$",
            }
        }
        Scenario::Cpp => {
            let run = cpp_run(config, model, train, paths)?;
            Outcomes {
                policies: vec![
                    ("Policy", run.policy),
                    ("Historical", run.historical),
                    ("Hindsight", run.hindsight),
                    ("No events", run.no_events),
                ],
                historical_threshold: Some(run.historical_threshold),
                savings: Some((run.policy_savings, run.historical_savings)),
                scale: 1e6,
                unit: "M$",
            }
        }
    })
}

fn slug(name: &str) -> String {
    name.to_lowercase().replace(' ', "_")
}

pub fn simulate(config: &RunConfig, out: &Path, years: usize, seed: u64, traces: usize) -> Outcome<()> {
    if years == 0 {
        return Err(Failure::usage("--years must be at least 1"));
    }
    let model = load_model(out, config)?;
    let data = load_data(config)?;
    let paths = simulate_paths(&model.transitions, config.horizon, years, seed)?;
    let outcomes = run_all(config, &model, &data.train, &paths)?;
    let summaries: Vec<PolicySummary> = outcomes
        .policies
        .iter()
        .map(|(name, eps)| PolicySummary::of(name, eps))
        .collect();
    let mut summary = json!({
        "scenario": config.scenario.tag(),
        "horizon": config.horizon,
        "years": years,
        "seed": seed,
        "historical_threshold": outcomes.historical_threshold,
        "policies": summaries,
    });
    if let Some((policy, historical)) = &outcomes.savings {
        let wins = policy.iter().zip(historical).filter(|(p, h)| p > h).count();
        summary["savings_vs_hindsight"] = json!({
            "policy": Stat::of(policy),
            "historical": Stat::of(historical),
            "policy_wins": wins,
        });
    }
    let dir = out.join("simulate");
    write_json(&dir.join("summary.json"), &summary)?;
    let table = summary_table(&summaries, outcomes.scale, outcomes.unit);
    write_file(&dir.join("summary.txt"), table.as_bytes())?;
    for (name, eps) in &outcomes.policies {
        for (i, e) in eps.iter().take(traces).enumerate() {
            write_trace(&dir.join("traces").join(format!("{}_year{:03}.csv", slug(name), i + 1)), e)?;
        }
    }
    say_raw!("{table}");
    if let Some(s) = summary.get("savings_vs_hindsight") {
        say!("savings vs hindsight: {s}");
    }
    say!("wrote {}", dir.display());
    Ok(())
}

/// One row of the per-year report.
#[derive(Debug, Serialize)]
struct YearRow {
    year: i32,
    policy: String,
    events: usize,
    expected_cost: f64,
    realized_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    savings_vs_hindsight: Option<f64>,
}

pub fn report(config: &RunConfig, out: &Path) -> Outcome<()> {
    let model = load_model(out, config)?;
    let data = load_data(config)?;
    if config.data.test_years.is_empty() {
        return Err(Failure::usage("the config lists no test_years"));
    }
    let t = config.horizon;
    let mut paths = Vec::new();
    for &year in &config.data.test_years {
        let season = data
            .test
            .season(year)
            .ok_or_else(|| Failure::data(format!("test season {year} is not in the data")))?;
        let mut path = data.test.season_path(&model.space, season)?;
        if path.len() < t + 2 {
            return Err(Failure::data(format!(
                "test season {year} has {} days, the run needs {t}",
                path.len() - 2
            )));
        }
        path.truncate(t + 2);
        paths.push(path);
    }
    let outcomes = run_all(config, &model, &data.train, &paths)?;
    let mut rows = Vec::new();
    for (name, eps) in &outcomes.policies {
        for (i, e) in eps.iter().enumerate() {
            let savings = outcomes.savings.as_ref().and_then(|(p, h)| match *name {
                "Policy" => Some(p[i]),
                "Historical" => Some(h[i]),
                _ => None,
            });
            rows.push(YearRow {
                year: config.data.test_years[i],
                policy: name.to_string(),
                events: e.count(),
                expected_cost: e.total_expected(),
                realized_cost: e.total_realized(),
                savings_vs_hindsight: savings,
            });
        }
    }
    let dir = out.join("report");
    write_json(
        &dir.join("report.json"),
        &json!({
            "scenario": config.scenario.tag(),
            "horizon": t,
            "historical_threshold": outcomes.historical_threshold,
            "rows": rows,
        }),
    )?;
    let mut text = format!(
        "{:<12} {:>6} {:>8} {:>22}\n",
        "Policy",
        "Year",
        "Events",
        format!("Expected cost [{}]", outcomes.unit)
    );
    for r in &rows {
        text.push_str(&format!(
            "{:<12} {:>6} {:>8} {:>22.3}\n",
            r.policy,
            r.year,
            r.events,
            r.expected_cost / outcomes.scale
        ));
    }
    write_file(&dir.join("report.txt"), text.as_bytes())?;
    for (name, eps) in &outcomes.policies {
        for (i, e) in eps.iter().enumerate() {
            let year = config.data.test_years[i];
            write_trace(&dir.join("traces").join(format!("{}_{year}.csv", slug(name))), e)?;
        }
    }
    say_raw!("{text}");
    say!("wrote {}", dir.display());
    Ok(())
}

/// Output directory: the `--out` override or the config's `output`.
pub fn output_dir(config: &RunConfig, over: Option<PathBuf>) -> PathBuf {
    over.unwrap_or_else(|| config.output.clone())
}
