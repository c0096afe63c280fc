//! Random desk-scale instances shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use shutoff_core::markov_model::TransitionModel;
use shutoff_core::risk_cost::CostSchedule;

pub struct Instance {
    pub horizon: usize,
    pub model: TransitionModel,
    pub costs: CostSchedule,
    pub indicator: Vec<f64>,
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Row-stochastic matrix; roughly one entry in five is zeroed out.
pub fn random_chain(rng: &mut StdRng, n: usize) -> TransitionModel {
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() + 0.05 })
                .collect();
            if row.iter().all(|v| *v == 0.0) {
                row[rng.random_range(0..n)] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect();
    TransitionModel::from_dense(rows).unwrap()
}

/// At least one risky and, when possible, one safe state.
pub fn random_indicator(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let mut f: Vec<f64> = (0..n).map(|_| f64::from(rng.random::<bool>() as u8)).collect();
    f[rng.random_range(0..n)] = 1.0;
    if n > 1 && f.iter().all(|v| *v == 1.0) {
        f[rng.random_range(0..n)] = 0.0;
    }
    f
}

/// Positive per-day costs: wildfire costs dominate revenue loss on average.
pub fn random_costs(rng: &mut StdRng, horizon: usize) -> CostSchedule {
    let mut series = |lo: f64, hi: f64| -> Vec<f64> {
        (0..=horizon).map(|_| rng.random_range(lo..hi)).collect()
    };
    let wildfire = series(5.0, 20.0);
    let revenue = series(1.0, 6.0);
    let s1 = series(0.1, 2.0);
    let s2 = series(0.1, 2.0);
    CostSchedule::new(horizon, wildfire, revenue, s1, s2).unwrap()
}

pub fn random_instance(rng: &mut StdRng, max_horizon: usize, max_states: usize) -> Instance {
    let horizon = rng.random_range(1..=max_horizon);
    let n = rng.random_range(1..=max_states);
    Instance {
        horizon,
        model: random_chain(rng, n),
        costs: random_costs(rng, horizon),
        indicator: random_indicator(rng, n),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
pub mod enumerate;
pub mod fixture;
pub mod criteria;
