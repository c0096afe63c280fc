//! Seeded synthetic weather and demand series with the CSV layout read by
//! [`ingest`](crate::ingest): a hot, dry, windy summer climate for shutoff
//! studies and a cold winter climate with peak demand for CPP studies.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines_sim::year_seed;
use crate::error::{Error, Result};

/// Knobs of the summer generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummerClimate {
    /// Mean daily maximum temperature at mid-season, °C.
    pub temp_mean: f64,
    /// Seasonal swing of the temperature mean, °C.
    pub temp_swing: f64,
    pub temp_persistence: f64,
    pub temp_noise: f64,
    /// Chance per day that a dry offshore wind episode starts.
    pub wind_onset: f64,
    /// Chance that an episode continues to the next day.
    pub wind_persistence: f64,
    /// Log-normal spread of a season's episode rate around `wind_onset`.
    pub wind_year_spread: f64,
    /// Typical sustained wind outside episodes, km/h.
    pub wind_base: f64,
    /// Extra sustained wind during an episode, km/h.
    pub wind_surge: f64,
    pub wind_noise: f64,
}

impl Default for SummerClimate {
    fn default() -> Self {
        Self {
            temp_mean: 31.0,
            temp_swing: 4.0,
            temp_persistence: 0.8,
            temp_noise: 2.5,
            wind_onset: 0.12,
            wind_persistence: 0.6,
            wind_year_spread: 0.6,
            wind_base: 13.0,
            wind_surge: 17.0,
            wind_noise: 4.0,
        }
    }
}

/// Knobs of the winter generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinterClimate {
    /// Mid-winter mean temperature, °C.
    pub temp_mean: f64,
    pub temp_swing: f64,
    pub temp_persistence: f64,
    pub temp_noise: f64,
    /// Demand at the mean temperature on a weekday, MW.
    pub base_demand: f64,
    /// Extra demand per degree below the mean, MW.
    pub heating_slope: f64,
    pub precip_slope: f64,
    pub weekend_drop: f64,
    pub demand_noise: f64,
}

impl Default for WinterClimate {
    fn default() -> Self {
        Self {
            temp_mean: -9.0,
            temp_swing: 5.0,
            temp_persistence: 0.85,
            temp_noise: 3.5,
            base_demand: 31_000.0,
            heating_slope: 420.0,
            precip_slope: 150.0,
            weekend_drop: 1_800.0,
            demand_noise: 500.0,
        }
    }
}

/// One generated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDay {
    pub date: NaiveDate,
    pub values: Vec<f64>,
    pub demand: Option<f64>,
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite positive spread")
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Days `first..=last` of a summer with `temp_c, rh_pct, wind_kmh, gust_kmh`.
pub fn summer_days(climate: &SummerClimate, first: NaiveDate, last: NaiveDate, seed: u64) -> Vec<SyntheticDay> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = (climate.wind_onset * normal(climate.wind_year_spread).sample(&mut rng).exp()).min(0.9);
    let (temp_eps, rh_eps, wind_eps, gust_eps) = (normal(climate.temp_noise), normal(6.0), normal(climate.wind_noise), normal(3.0));
    let total = (last - first).num_days().max(1) as f64;
    let mut heat = 0.0;
    let mut damp = 0.0;
    let mut breeze = 0.0;
    let mut episode = false;
    let mut out = Vec::new();
    let mut date = first;
    while date <= last {
        let phase = (date - first).num_days() as f64 / total;
        episode = if episode {
            rng.random::<f64>() < climate.wind_persistence
        } else {
            rng.random::<f64>() < rate
        };
        let e = f64::from(u8::from(episode));
        heat = climate.temp_persistence * heat + temp_eps.sample(&mut rng);
        damp = 0.6 * damp + rh_eps.sample(&mut rng);
        breeze = 0.5 * breeze + wind_eps.sample(&mut rng);
        let temp = climate.temp_mean + climate.temp_swing * (std::f64::consts::PI * phase).sin() + heat + 2.0 * e;
        let rh = (38.0 - 2.0 * (temp - climate.temp_mean) - 16.0 * e + damp).clamp(4.0, 95.0);
        let wind = (climate.wind_base + climate.wind_surge * e + breeze).max(0.0);
        let gust = (1.45 * wind + 6.0 + gust_eps.sample(&mut rng)).max(wind);
        out.push(SyntheticDay {
            date,
            values: vec![round1(temp), round1(rh), round1(wind), round1(gust)],
            demand: None,
        });
        date += Duration::days(1);
    }
    out
}

/// Days `first..=last` of a winter with `temp_c, precip_mm` and `demand_mw`.
pub fn winter_days(climate: &WinterClimate, first: NaiveDate, last: NaiveDate, seed: u64) -> Vec<SyntheticDay> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let temp_eps = normal(climate.temp_noise);
    let demand_eps = normal(climate.demand_noise);
    let precip_eps = normal(1.0);
    let total = (last - first).num_days().max(1) as f64;
    let mut cold = 0.0;
    let mut out = Vec::new();
    let mut date = first;
    while date <= last {
        let phase = (date - first).num_days() as f64 / total;
        cold = climate.temp_persistence * cold + temp_eps.sample(&mut rng);
        let temp = climate.temp_mean - climate.temp_swing * (std::f64::consts::PI * phase).sin() + cold;
        let precip = (0.6 * precip_eps.sample(&mut rng)).exp() * 2.0;
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let demand = climate.base_demand + climate.heating_slope * (climate.temp_mean - temp)
            + climate.precip_slope * precip
            - if weekend { climate.weekend_drop } else { 0.0 }
            + demand_eps.sample(&mut rng);
        out.push(SyntheticDay {
            date,
            values: vec![round1(temp), round1(precip)],
            demand: Some(demand.round()),
        });
        date += Duration::days(1);
    }
    out
}

/// Summer seasons `years` with one extra day on each side of June–September.
pub fn summer_fixture(climate: &SummerClimate, years: &[i32], seed: u64) -> Vec<SyntheticDay> {
    years
        .iter()
        .flat_map(|&y| {
            let first = NaiveDate::from_ymd_opt(y, 5, 31).expect("valid date");
            let last = NaiveDate::from_ymd_opt(y, 10, 1).expect("valid date");
            summer_days(climate, first, last, year_seed(seed, y as u64))
        })
        .collect()
}

/// Winters starting in `years` with one extra day on each side of
/// December–March.
pub fn winter_fixture(climate: &WinterClimate, years: &[i32], seed: u64) -> Vec<SyntheticDay> {
    years
        .iter()
        .flat_map(|&y| {
            let first = NaiveDate::from_ymd_opt(y, 11, 30).expect("valid date");
            let last = NaiveDate::from_ymd_opt(y + 1, 4, 1).expect("valid date");
            winter_days(climate, first, last, year_seed(seed, y as u64))
        })
        .collect()
}

/// Writes days as CSV with the given phenomenon headers.
pub fn write_days(path: &Path, headers: &[&str], days: &[SyntheticDay]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let with_demand = days.first().is_some_and(|d| d.demand.is_some());
    let mut head = vec!["date"];
    head.extend_from_slice(headers);
    if with_demand {
        head.push(crate::ingest::DEMAND_COLUMN);
    }
    w.write_record(&head)?;
    for d in days {
        let mut row = vec![d.date.to_string()];
        row.extend(d.values.iter().map(f64::to_string));
        if let Some(q) = d.demand {
            row.push(q.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(io)?;
    w.into_inner()
        .map_err(|e| io(e.into_error()))?
        .flush()
        .map_err(io)
}
