//! The bundled synthetic seasons, fitted the same way the CLI fits them.
//! Falls back to regenerating the CSVs when the bundled files are missing.

use std::path::{Path, PathBuf};

use shutoff_core::cpp_sched::{CppParams, QuadCost};
use shutoff_core::ingest::{fit_bins, fit_demand, load_csv, ColumnSpec, LoadOptions, MonthDay, Schema, SeasonWindow};
use shutoff_core::markov_model::{estimate_transitions, StateSpace, TransitionModel};
use shutoff_core::risk_cost::{CostSchedule, Criterion, RiskRule};
use shutoff_core::synthetic::{summer_fixture, winter_fixture, write_days, SummerClimate, WinterClimate};

pub const FIXTURE_SEED: u64 = 11;
pub const MC_SEED: u64 = 2024;

pub struct PspsFixture {
    pub horizon: usize,
    pub budget: usize,
    pub costs: CostSchedule,
    pub space: StateSpace,
    pub model: TransitionModel,
    pub indicator: Vec<f64>,
    pub training: Vec<Vec<usize>>,
}

pub struct CppFixture {
    pub horizon: usize,
    pub params: CppParams,
    pub quad: QuadCost,
    pub space: StateSpace,
    pub model: TransitionModel,
    pub demand: Vec<f64>,
    pub training: Vec<Vec<usize>>,
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Bundled file if present, else a regenerated copy in `scratch`.
fn data_file(name: &str, scratch: &Path, generate: impl FnOnce(&Path)) -> PathBuf {
    let path = bundled(name);
    if path.is_file() {
        return path;
    }
    let path = scratch.join(name);
    generate(&path);
    path
}

pub fn psps() -> PspsFixture {
    let scratch = tempfile::tempdir().unwrap();
    let path = data_file("summer_weather.csv", scratch.path(), |p| {
        let days = summer_fixture(&SummerClimate::default(), &(2011..=2020).collect::<Vec<_>>(), FIXTURE_SEED);
        write_days(p, &["temp_c", "rh_pct", "wind_kmh", "gust_kmh"], &days).unwrap();
    });
    let schema = Schema {
        columns: vec![
            ColumnSpec::new("temp", "c"),
            ColumnSpec::new("rh", "pct"),
            ColumnSpec::new("wind", "kmh"),
            ColumnSpec::new("gust", "kmh"),
        ],
        demand: false,
        window: SeasonWindow::new(MonthDay::new(6, 1).unwrap(), MonthDay::new(9, 30).unwrap()),
    };
    let frame = load_csv(&path, &schema, LoadOptions::default()).unwrap();
    let (train, _) = frame.split(&(2011..=2018).collect::<Vec<_>>(), &[2019, 2020]).unwrap();
    let space = fit_bins(&train, &[8, 8, 8, 8], false).unwrap();
    let training = train.transition_paths(&space).unwrap();
    let model = estimate_transitions(&training, space.cardinality(), 3e-4).unwrap();
    let rule = RiskRule::new(vec![
        RiskRule::term("temp", Criterion::AtLeast(30.0)),
        RiskRule::term("rh", Criterion::AtMost(20.0)),
        RiskRule::term("wind", Criterion::AtLeast(25.0)),
        RiskRule::term("gust", Criterion::AtLeast(40.0)),
    ]);
    let indicator = rule.indicator(&space).unwrap();
    let horizon = 122;
    let costs = CostSchedule::new(horizon, 1e9, 2e5, 2e6, 2e6)
        .unwrap()
        .with_penalty(1e8)
        .unwrap()
        .with_adjustment(40.5e6)
        .unwrap();
    PspsFixture {
        horizon,
        budget: 10,
        costs,
        space,
        model,
        indicator,
        training,
    }
}

pub fn cpp() -> CppFixture {
    let scratch = tempfile::tempdir().unwrap();
    let path = data_file("winter_demand.csv", scratch.path(), |p| {
        let days = winter_fixture(&WinterClimate::default(), &(2008..=2019).collect::<Vec<_>>(), FIXTURE_SEED);
        write_days(p, &["temp_c", "precip_mm"], &days).unwrap();
    });
    let schema = Schema {
        columns: vec![ColumnSpec::new("temp", "c"), ColumnSpec::new("precip", "mm")],
        demand: true,
        window: SeasonWindow::new(MonthDay::new(12, 1).unwrap(), MonthDay::new(3, 31).unwrap()),
    };
    let frame = load_csv(&path, &schema, LoadOptions::default()).unwrap();
    let (train, _) = frame.split(&(2008..=2017).collect::<Vec<_>>(), &[2018, 2019]).unwrap();
    let space = fit_bins(&train, &[12, 7], true).unwrap();
    let training = train.transition_paths(&space).unwrap();
    let model = estimate_transitions(&training, space.cardinality(), 0.01).unwrap();
    let demand = fit_demand(&train, &space).unwrap().model.per_state(&space).unwrap();
    let horizon = 121;
    CppFixture {
        horizon,
        params: CppParams::new(horizon, 25, 100.0, 15_000.0).unwrap(),
        quad: QuadCost::new(horizon, 0.00245, 45.5, 8e5).unwrap(),
        space,
        model,
        demand,
        training,
    }
}
