//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shutoff_core::cpp_sched::{CppParams, QuadCost};
use shutoff_core::ingest::{ColumnSpec, LoadOptions, Schema, SeasonWindow};
use shutoff_core::risk_cost::{CostSchedule, PerDay, RiskRule};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    S1,
    S2,
    S3,
    Cpp,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
            Scenario::Cpp => "cpp",
        }
    }
}

/// Weather (and demand) input of a run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub demand: bool,
    pub window: SeasonWindow,
    pub train_years: Vec<i32>,
    #[serde(default)]
    pub test_years: Vec<i32>,
    #[serde(default)]
    pub carry_forward: bool,
}

impl DataConfig {
    pub fn schema(&self) -> Schema {
        Schema {
            columns: self.columns.clone(),
            demand: self.demand,
            window: self.window,
        }
    }

    pub fn options(&self) -> LoadOptions {
        LoadOptions {
            carry_forward: self.carry_forward,
        }
    }
}

/// Supply-side cost file of a CPP run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CppCostFile {
    /// Load shed per event, MW.
    pub curtailment: f64,
    pub revenue_loss: PerDay,
    pub quadratic: PerDay,
    pub linear: PerDay,
    pub constant: PerDay,
}

fn default_seed() -> u64 {
    7
}

fn default_years() -> usize {
    100
}

fn default_intervals() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Scenario,
    horizon: usize,
    #[serde(default)]
    budget: Option<serde_json::Number>,
    costs: PathBuf,
    data: DataConfig,
    bins: Vec<usize>,
    #[serde(default)]
    day_types: bool,
    #[serde(default)]
    smoothing: f64,
    #[serde(default)]
    risk_rule: Option<RiskRule>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_years")]
    years: usize,
    #[serde(default = "default_intervals")]
    grid_intervals: usize,
    output: PathBuf,
}

/// Budget of a run, typed by scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Event budget `N` of scenarios 1 and 2 or `M` of CPP.
    Events(usize),
    /// Expected-cost cap of scenario 3.
    CostCap(f64),
    None,
}

/// A validated run configuration with paths resolved against the file's
/// directory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub horizon: usize,
    pub budget: Budget,
    pub costs: PathBuf,
    pub data: DataConfig,
    pub bins: Vec<usize>,
    pub day_types: bool,
    pub smoothing: f64,
    pub risk_rule: RiskRule,
    pub seed: u64,
    pub years: usize,
    pub grid_intervals: usize,
    pub output: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require_file(p: &Path, what: &str) -> Outcome<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::data(format!("{what} file not found: {}", p.display())))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let raw: RawConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut data = raw.data;
        data.path = resolve(base, &data.path);
        let config = Self {
            scenario: raw.scenario,
            horizon: raw.horizon,
            budget: parse_budget(raw.scenario, raw.budget.as_ref())?,
            costs: resolve(base, &raw.costs),
            data,
            bins: raw.bins,
            day_types: raw.day_types,
            smoothing: raw.smoothing,
            risk_rule: raw.risk_rule.unwrap_or_default(),
            seed: raw.seed,
            years: raw.years,
            grid_intervals: raw.grid_intervals,
            output: resolve(base, &raw.output),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Outcome<()> {
        if self.horizon == 0 {
            return Err(Failure::usage("horizon must be at least 1"));
        }
        if self.bins.len() != self.data.columns.len() {
            return Err(Failure::usage(format!(
                "{} bin counts for {} columns",
                self.bins.len(),
                self.data.columns.len()
            )));
        }
        if self.data.train_years.is_empty() {
            return Err(Failure::usage("train_years must not be empty"));
        }
        match self.scenario {
            Scenario::Cpp if !self.data.demand => {
                return Err(Failure::usage("a cpp run needs `data.demand: true`"))
            }
            Scenario::S1 | Scenario::S2 | Scenario::S3 if self.risk_rule.terms.is_empty() => {
                return Err(Failure::usage("a shutoff run needs a non-empty `risk_rule`"))
            }
            _ => {}
        }
        require_file(&self.costs, "cost")?;
        require_file(&self.data.path, "data")?;
        Ok(())
    }

    /// Event budget; a usage error when the scenario has none.
    pub fn event_budget(&self) -> Outcome<usize> {
        match self.budget {
            Budget::Events(n) => Ok(n),
            _ => Err(Failure::usage(format!(
                "scenario {} needs an integer event `budget` here",
                self.scenario.tag()
            ))),
        }
    }

    pub fn cost_cap(&self) -> Outcome<f64> {
        match self.budget {
            Budget::CostCap(a) => Ok(a),
            _ => Err(Failure::usage("scenario s3 needs a cost cap `budget`")),
        }
    }

    /// Shutoff cost schedule cut to the run horizon.
    pub fn cost_schedule(&self) -> Outcome<CostSchedule> {
        let text = std::fs::read_to_string(&self.costs)
            .map_err(|e| Failure::data(format!("{}: {e}", self.costs.display())))?;
        let costs = CostSchedule::from_json(&text).map_err(|e| {
            Failure::usage(format!("{}: {e}", self.costs.display()))
        })?;
        if costs.horizon() < self.horizon {
            return Err(Failure::usage(format!(
                "{}: cost schedule covers {} days, the run needs {}",
                self.costs.display(),
                costs.horizon(),
                self.horizon
            )));
        }
        Ok(costs.truncate(self.horizon)?)
    }

    pub fn cpp_costs(&self) -> Outcome<(CppParams, QuadCost)> {
        let text = std::fs::read_to_string(&self.costs)
            .map_err(|e| Failure::data(format!("{}: {e}", self.costs.display())))?;
        let file: CppCostFile = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("{}: {e}", self.costs.display())))?;
        let params = CppParams::new(self.horizon, self.event_budget()?, file.curtailment, file.revenue_loss)?;
        let quad = QuadCost::new(self.horizon, file.quadratic, file.linear, file.constant)?;
        Ok((params, quad))
    }
}

fn parse_budget(scenario: Scenario, value: Option<&serde_json::Number>) -> Outcome<Budget> {
    let Some(v) = value else {
        return match scenario {
            Scenario::S2 => Ok(Budget::None),
            s => Err(Failure::usage(format!("scenario {} needs a `budget`", s.tag()))),
        };
    };
    match scenario {
        Scenario::S3 => match v.as_f64() {
            Some(a) if a.is_finite() => Ok(Budget::CostCap(a)),
            _ => Err(Failure::usage(format!("cost cap {v} is not a finite number"))),
        },
        s => match v.as_u64() {
            Some(n) => Ok(Budget::Events(n as usize)),
            None => Err(Failure::usage(format!(
                "scenario {} needs a nonnegative integer event budget, got {v}",
                s.tag()
            ))),
        },
    }
}
