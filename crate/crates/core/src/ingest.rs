//! Weather and demand CSV loading, season windows, year splits, quantile
//! binning and the demand regression.
//!
//! Files have a `date` column (`YYYY-MM-DD`), one `<name>_<unit>` column per
//! phenomenon and, when requested, a `demand_mw` column.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cpp_sched::DemandModel;
use crate::error::{invalid, Error, Result};
use crate::markov_model::{Phenomenon, StateSpace};

/// Header of the optional demand column.
pub const DEMAND_COLUMN: &str = "demand_mw";

/// Day-type levels used when a state space carries a day-type factor.
pub const DAY_TYPES: [&str; 2] = ["weekday", "weekend"];

/// Index into [`DAY_TYPES`] for `date`.
pub fn day_type(date: NaiveDate) -> usize {
    usize::from(matches!(date.weekday(), Weekday::Sat | Weekday::Sun))
}

/// A calendar day without a year, written `MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self> {
        if NaiveDate::from_ymd_opt(2000, month, day).is_none() {
            return Err(invalid("season", format!("{month:02}-{day:02} is not a calendar day")));
        }
        Ok(Self { month, day })
    }

    fn of(date: NaiveDate) -> Self {
        Self {
            month: date.month(),
            day: date.day(),
        }
    }

    /// This day in `year`; February 29 falls back to the 28th in common years.
    fn in_year(self, year: i32) -> NaiveDate {
        NaiveDate::from_ymd_opt(year, self.month, self.day)
            .or_else(|| NaiveDate::from_ymd_opt(year, self.month, self.day - 1))
            .expect("validated month and day")
    }
}

impl FromStr for MonthDay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("season", format!("`{s}` is not MM-DD"));
        let (m, d) = s.split_once('-').ok_or_else(bad)?;
        Self::new(m.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for MonthDay {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthDay> for String {
    fn from(md: MonthDay) -> Self {
        md.to_string()
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

/// Inclusive window of days kept from every year. A window whose end
/// precedes its start wraps into the next year; seasons are labelled by the
/// year they start in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl SeasonWindow {
    pub fn new(start: MonthDay, end: MonthDay) -> Self {
        Self { start, end }
    }

    pub fn wraps(&self) -> bool {
        self.end < self.start
    }

    /// Season containing `date`, if any.
    pub fn label_of(&self, date: NaiveDate) -> Option<i32> {
        let md = MonthDay::of(date);
        if !self.wraps() {
            (self.start <= md && md <= self.end).then_some(date.year())
        } else if md >= self.start {
            Some(date.year())
        } else if md <= self.end {
            Some(date.year() - 1)
        } else {
            None
        }
    }

    /// First and last day of season `label`.
    pub fn bounds(&self, label: i32) -> (NaiveDate, NaiveDate) {
        let end_year = label + i32::from(self.wraps());
        (self.start.in_year(label), self.end.in_year(end_year))
    }
}

/// A phenomenon column: header `<name>_<unit>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub unit: String,
}

impl ColumnSpec {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }

    pub fn header(&self) -> String {
        format!("{}_{}", self.name, self.unit)
    }
}

/// Expected columns and the season window of a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub demand: bool,
    pub window: SeasonWindow,
}

/// Behaviour switches for [`load_csv`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Fill a single missing day inside a season with the previous day.
    pub carry_forward: bool,
}

/// One dated row of readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub values: Vec<f64>,
    pub demand: Option<f64>,
    /// True when the row was carried forward from the previous day.
    pub filled: bool,
}

/// The days of one season plus the adjacent days when the file has them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Season {
    pub label: i32,
    pub days: Vec<Observation>,
    pub before: Option<Observation>,
    pub after: Option<Observation>,
}

/// Parsed, unit-checked readings grouped into seasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherFrame {
    pub columns: Vec<ColumnSpec>,
    pub has_demand: bool,
    pub seasons: Vec<Season>,
}

fn data_error(path: &Path, row: usize, reason: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        row,
        reason: reason.into(),
    }
}

fn locate(headers: &csv::StringRecord, path: &Path, spec: &ColumnSpec) -> Result<usize> {
    let wanted = spec.header();
    if let Some(i) = headers.iter().position(|h| h == wanted) {
        return Ok(i);
    }
    let prefix = format!("{}_", spec.name);
    if let Some(found) = headers.iter().find(|h| h.starts_with(&prefix)) {
        return Err(Error::Unit {
            path: path.to_path_buf(),
            column: spec.name.clone(),
            expected: spec.unit.clone(),
            found: found[prefix.len()..].to_string(),
        });
    }
    Err(Error::MissingColumn {
        path: path.to_path_buf(),
        column: wanted,
    })
}

fn parse_value(path: &Path, row: usize, column: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| data_error(path, row, format!("column `{column}`: cannot parse `{text}`")))?;
    if !v.is_finite() {
        return Err(data_error(path, row, format!("column `{column}`: non-finite value `{text}`")));
    }
    Ok(v)
}

/// Reads `path`, keeps the season windows and checks daily coverage.
/// Rows are numbered from 1 with the header as row 1.
pub fn load_csv(path: &Path, schema: &Schema, options: LoadOptions) -> Result<WeatherFrame> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let date_col = headers.iter().position(|h| h == "date").ok_or_else(|| Error::MissingColumn {
        path: path.to_path_buf(),
        column: "date".into(),
    })?;
    let cols: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| locate(&headers, path, c))
        .collect::<Result<_>>()?;
    let demand_col = if schema.demand {
        Some(headers.iter().position(|h| h == DEMAND_COLUMN).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: DEMAND_COLUMN.into(),
        })?)
    } else {
        None
    };

    let mut rows: Vec<(usize, Observation)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d")
            .map_err(|_| data_error(path, row, format!("cannot parse date `{}`", field(date_col))))?;
        if let Some((_, prev)) = rows.last() {
            if date == prev.date {
                return Err(data_error(path, row, format!("duplicate date {date}")));
            }
            if date < prev.date {
                return Err(data_error(path, row, format!("date {date} is earlier than {}", prev.date)));
            }
        }
        let values = schema
            .columns
            .iter()
            .zip(&cols)
            .map(|(spec, &c)| parse_value(path, row, &spec.header(), field(c)))
            .collect::<Result<Vec<_>>>()?;
        let demand = demand_col
            .map(|c| parse_value(path, row, DEMAND_COLUMN, field(c)))
            .transpose()?;
        rows.push((row, Observation { date, values, demand, filled: false }));
    }

    let find = |date: NaiveDate| rows.binary_search_by(|(_, o)| o.date.cmp(&date)).ok();
    let labels: BTreeSet<i32> = rows.iter().filter_map(|(_, o)| schema.window.label_of(o.date)).collect();
    let mut seasons = Vec::with_capacity(labels.len());
    for label in labels {
        let (first, last) = schema.window.bounds(label);
        let mut days: Vec<Observation> = Vec::new();
        let mut date = first;
        while date <= last {
            match find(date) {
                Some(i) => days.push(rows[i].1.clone()),
                None => {
                    let next = date + Duration::days(1);
                    let single = find(next).is_some() && !days.is_empty();
                    if options.carry_forward && single && !days.last().is_some_and(|d| d.filled) {
                        let mut copy = days.last().cloned().expect("checked non-empty");
                        copy.date = date;
                        copy.filled = true;
                        days.push(copy);
                    } else {
                        let at = rows
                            .iter()
                            .find(|(_, o)| o.date > date)
                            .map_or(rows.len() + 1, |(r, _)| *r);
                        return Err(data_error(path, at, format!("season {label} is missing {date}")));
                    }
                }
            }
            date += Duration::days(1);
        }
        seasons.push(Season {
            label,
            days,
            before: find(first - Duration::days(1)).map(|i| rows[i].1.clone()),
            after: find(last + Duration::days(1)).map(|i| rows[i].1.clone()),
        });
    }
    Ok(WeatherFrame {
        columns: schema.columns.clone(),
        has_demand: schema.demand,
        seasons,
    })
}

impl WeatherFrame {
    pub fn years(&self) -> Vec<i32> {
        self.seasons.iter().map(|s| s.label).collect()
    }

    pub fn season(&self, label: i32) -> Option<&Season> {
        self.seasons.iter().find(|s| s.label == label)
    }

    /// The seasons labelled by `years`, in the given order.
    pub fn select(&self, years: &[i32]) -> Result<WeatherFrame> {
        let seasons = years
            .iter()
            .map(|&y| {
                self.season(y)
                    .cloned()
                    .ok_or_else(|| invalid("years", format!("no season labelled {y}")))
            })
            .collect::<Result<_>>()?;
        Ok(WeatherFrame {
            columns: self.columns.clone(),
            has_demand: self.has_demand,
            seasons,
        })
    }

    /// Disjoint training and test frames.
    pub fn split(&self, train: &[i32], test: &[i32]) -> Result<(WeatherFrame, WeatherFrame)> {
        if let Some(y) = train.iter().find(|y| test.contains(y)) {
            return Err(invalid("years", format!("{y} is in both the training and test lists")));
        }
        Ok((self.select(train)?, self.select(test)?))
    }

    /// Every season day in order.
    pub fn days(&self) -> impl Iterator<Item = &Observation> {
        self.seasons.iter().flat_map(|s| s.days.iter())
    }

    /// Readings of column `i` over every season day.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.days().map(|o| o.values[i]).collect()
    }

    fn order_for(&self, space: &StateSpace) -> Result<Vec<usize>> {
        space
            .phenomena()
            .iter()
            .map(|p| {
                self.columns
                    .iter()
                    .position(|c| c.name == p.name)
                    .ok_or_else(|| invalid("state_space", format!("frame has no column for `{}`", p.name)))
            })
            .collect()
    }

    /// State of one observation in `space`.
    pub fn state_of(&self, space: &StateSpace, obs: &Observation) -> Result<usize> {
        let order = self.order_for(space)?;
        state_with(space, &order, obs)
    }

    /// States of a season's days.
    pub fn states(&self, space: &StateSpace, season: &Season) -> Result<Vec<usize>> {
        let order = self.order_for(space)?;
        season.days.iter().map(|o| state_with(space, &order, o)).collect()
    }

    /// `x_0, …, x_{T+1}` for replaying a season; needs the adjacent days.
    pub fn season_path(&self, space: &StateSpace, season: &Season) -> Result<Vec<usize>> {
        let (Some(before), Some(after)) = (&season.before, &season.after) else {
            return Err(invalid(
                "season",
                format!("season {} needs the day before and after its window", season.label),
            ));
        };
        let order = self.order_for(space)?;
        let mut path = vec![state_with(space, &order, before)?];
        for o in &season.days {
            path.push(state_with(space, &order, o)?);
        }
        path.push(state_with(space, &order, after)?);
        Ok(path)
    }

    /// One state sequence per season, including adjacent days when present.
    pub fn transition_paths(&self, space: &StateSpace) -> Result<Vec<Vec<usize>>> {
        let order = self.order_for(space)?;
        self.seasons
            .iter()
            .map(|s| {
                s.before
                    .iter()
                    .chain(&s.days)
                    .chain(&s.after)
                    .map(|o| state_with(space, &order, o))
                    .collect()
            })
            .collect()
    }
}

fn state_with(space: &StateSpace, order: &[usize], obs: &Observation) -> Result<usize> {
    let raw: Vec<f64> = order.iter().map(|&i| obs.values[i]).collect();
    let dt = space.day_types().map(|_| day_type(obs.date));
    space.discretize(&raw, dt)
}

/// Empirical quantile edges splitting `values` into `bins` bins.
pub fn quantile_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(invalid("bins", "need at least 2 bins"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < bins {
        return Err(invalid(
            "bins",
            format!("{} distinct values cannot fill {bins} bins", sorted.len()),
        ));
    }
    let mut all = values.to_vec();
    all.sort_by(f64::total_cmp);
    let n = all.len();
    let edges: Vec<f64> = (1..bins)
        .map(|i| {
            let pos = (n - 1) as f64 * i as f64 / bins as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if lo + 1 < n {
                all[lo] + frac * (all[lo + 1] - all[lo])
            } else {
                all[lo]
            }
        })
        .collect();
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(
            "bins",
            format!("ties leave fewer than {bins} distinct quantiles"),
        ));
    }
    Ok(edges)
}

/// Quantile bins for each column (`counts` in column order) on the frame's
/// season days, with an optional weekday/weekend factor.
pub fn fit_bins(frame: &WeatherFrame, counts: &[usize], day_types: bool) -> Result<StateSpace> {
    if counts.len() != frame.columns.len() {
        return Err(invalid(
            "bins",
            format!("{} counts for {} columns", counts.len(), frame.columns.len()),
        ));
    }
    let phenomena = frame
        .columns
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (spec, &bins))| {
            let edges = quantile_edges(&frame.column(i), bins)?;
            Phenomenon::new(spec.name.clone(), spec.unit.clone(), edges)
        })
        .collect::<Result<Vec<_>>>()?;
    let types = day_types.then(|| DAY_TYPES.iter().map(|s| s.to_string()).collect());
    StateSpace::new(phenomena, types)
}

/// Coefficients of the least-squares fit of `y` on `design`.
fn least_squares(design: DMatrix<f64>, y: DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if rows < cols {
        return Err(Error::RankDeficient { rank: rows, columns: cols });
    }
    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    let tol = largest * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.rank(tol);
    if rank < cols {
        return Err(Error::RankDeficient { rank, columns: cols });
    }
    svd.solve(&y, tol).map_err(|e| Error::Format(e.to_string()))
}

/// A fitted demand regression with its in-sample error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandFit {
    pub model: DemandModel,
    pub rmse: f64,
    pub rows: usize,
}

fn design_rows(frame: &WeatherFrame, space: &StateSpace, days: &[&Observation]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let order = frame.order_for(space)?;
    let mut features = Vec::with_capacity(days.len());
    let mut target = Vec::with_capacity(days.len());
    for o in days {
        let demand = o
            .demand
            .ok_or_else(|| invalid("demand", format!("no demand reading on {}", o.date)))?;
        let state = state_with(space, &order, o)?;
        let mut row = vec![1.0];
        row.extend(DemandModel::features(space, state)?);
        features.push(row);
        target.push(demand);
    }
    let cols = features.first().map_or(1, Vec::len);
    let design = DMatrix::from_fn(features.len(), cols, |r, c| features[r][c]);
    Ok((design, DVector::from_vec(target)))
}

/// Ordinary least squares of demand on bin representatives plus day-type
/// indicators.
pub fn fit_demand(frame: &WeatherFrame, space: &StateSpace) -> Result<DemandFit> {
    if !frame.has_demand {
        return Err(invalid("demand", "frame has no demand column"));
    }
    let days: Vec<&Observation> = frame.days().collect();
    let (design, target) = design_rows(frame, space, &days)?;
    let coef = least_squares(design.clone(), target.clone())?;
    let resid = &design * &coef - &target;
    let rows = days.len();
    Ok(DemandFit {
        model: DemandModel::from_coefficients(space, coef.as_slice())?,
        rmse: (resid.norm_squared() / rows as f64).sqrt(),
        rows,
    })
}

/// Fold layout for [`cross_validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Folds {
    K(usize),
    LeaveOneOut,
}

impl Default for Folds {
    fn default() -> Self {
        Folds::K(10)
    }
}

/// Held-out error of one candidate bin layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub bins: Vec<usize>,
    /// Root mean squared held-out error; infinite when some fold cannot be fitted.
    pub rmse: f64,
}

/// Scores each candidate bin layout by refitting bins and the demand
/// regression on every training fold. Row `i` belongs to fold `i mod k`.
pub fn cross_validate(
    frame: &WeatherFrame,
    candidates: &[Vec<usize>],
    folds: Folds,
    day_types: bool,
) -> Result<Vec<CvScore>> {
    if !frame.has_demand {
        return Err(invalid("demand", "frame has no demand column"));
    }
    let days: Vec<&Observation> = frame.days().collect();
    let k = match folds {
        Folds::K(k) => k,
        Folds::LeaveOneOut => days.len(),
    };
    if k < 2 || k > days.len() {
        return Err(invalid("folds", format!("{k} folds for {} rows", days.len())));
    }
    candidates
        .iter()
        .map(|bins| {
            let mut sse = 0.0;
            for fold in 0..k {
                let (held, kept): (Vec<_>, Vec<_>) =
                    days.iter().enumerate().partition(|(i, _)| i % k == fold);
                let train = WeatherFrame {
                    columns: frame.columns.clone(),
                    has_demand: true,
                    seasons: vec![Season {
                        label: 0,
                        days: kept.iter().map(|(_, o)| (**o).clone()).collect(),
                        before: None,
                        after: None,
                    }],
                };
                let fitted = fit_bins(&train, bins, day_types).and_then(|space| {
                    let fit = fit_demand(&train, &space)?;
                    Ok((space, fit))
                });
                let (space, fit) = match fitted {
                    Ok(v) => v,
                    Err(Error::RankDeficient { .. } | Error::InvalidParameter { .. }) => {
                        sse = f64::INFINITY;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let held: Vec<&Observation> = held.iter().map(|(_, o)| **o).collect();
                let (design, target) = design_rows(&train, &space, &held)?;
                let coef: Vec<f64> = std::iter::once(fit.model.intercept)
                    .chain(fit.model.phenomena.iter().copied())
                    .chain(fit.model.day_types.iter().copied())
                    .collect();
                sse += (design * DVector::from_vec(coef) - target).norm_squared();
            }
            Ok(CvScore {
                bins: bins.clone(),
                rmse: (sse / days.len() as f64).sqrt(),
            })
        })
        .collect()
}

/// The candidate with the smallest held-out error; earlier candidates win ties.
pub fn select_bins(scores: &[CvScore]) -> Option<&CvScore> {
    scores
        .iter()
        .fold(None, |best: Option<&CvScore>, s| match best {
            Some(b) if b.rmse <= s.rmse => Some(b),
            _ => Some(s),
        })
        .filter(|s| s.rmse.is_finite())
}
