//! Brute-force reference for the constrained scenario: bounds by
//! enumerating every fixed decision sequence, values by enumerating every
//! grid-valued successor-threshold assignment.

use shutoff_core::risk_cost::CostSchedule;
use shutoff_core::scenario3::{AlphaGrid, ValueTensor};

const TOL: f64 = 1e-9;

pub struct Enumerated {
    /// `[τ][u_prev][x]`.
    pub bounds: Vec<[Vec<f64>; 2]>,
    /// `[τ][u_prev][x]` → `(α, V)` at `b` and every grid point above it.
    pub values: Vec<[Vec<Vec<(f64, f64)>>; 2]>,
}

fn day(horizon: usize, tau: usize) -> usize {
    horizon - tau + 1
}

fn expected_cost(costs: &CostSchedule, day: usize, u_prev: u8, u: u8, risk: f64) -> f64 {
    costs.stage_cost(day - 1, u_prev, u, risk)
}

/// Cost of `τ` fixed decisions followed by the forced terminal day.
fn sequence_cost(
    horizon: usize,
    costs: &CostSchedule,
    rows: &[Vec<f64>],
    wrp: &[f64],
    tau: usize,
    u_prev: u8,
    x: usize,
    seq: &[u8],
) -> f64 {
    let n = rows.len();
    let mut dist = vec![0.0; n];
    dist[x] = 1.0;
    let mut prev = u_prev;
    let mut total = 0.0;
    for step in 0..=tau {
        let stage = tau - step;
        let u = if stage == 0 { 0 } else { seq[step] };
        let risk: f64 = dist.iter().zip(wrp).map(|(d, w)| d * w).sum();
        total += expected_cost(costs, day(horizon, stage), prev, u, risk);
        prev = u;
        let mut next = vec![0.0; n];
        for (i, d) in dist.iter().enumerate() {
            for (j, p) in rows[i].iter().enumerate() {
                next[j] += d * p;
            }
        }
        dist = next;
    }
    total
}

pub fn enumerate(
    horizon: usize,
    costs: &CostSchedule,
    rows: &[Vec<f64>],
    indicator: &[f64],
    grid: &AlphaGrid,
) -> Enumerated {
    let n = rows.len();
    let wrp: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(indicator).map(|(p, f)| p * f).sum())
        .collect();
    let mut bounds = Vec::new();
    for tau in 0..=horizon {
        let layer = [0u8, 1].map(|u_prev| {
            (0..n)
                .map(|x| {
                    (0u32..1 << tau)
                        .map(|bits| {
                            let seq: Vec<u8> = (0..tau).map(|i| ((bits >> i) & 1) as u8).collect();
                            sequence_cost(horizon, costs, rows, &wrp, tau, u_prev, x, &seq)
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect::<Vec<f64>>()
        });
        bounds.push(layer);
    }

    let candidates = |b: f64| -> Vec<f64> {
        let mut out = vec![b];
        out.extend(grid.points().into_iter().filter(|&a| a > b));
        out
    };

    let mut values: Vec<[Vec<Vec<(f64, f64)>>; 2]> = Vec::new();
    values.push([0usize, 1].map(|u| (0..n).map(|x| candidates(bounds[0][u][x]).into_iter().map(|a| (a, 0.0)).collect()).collect()));

    for tau in 1..=horizon {
        // For each (u, x): every assignment's (expected threshold, expected value),
        // sorted by cost with a running minimum of the value.
        let mut tables: [Vec<Vec<(f64, f64)>>; 2] = [Vec::new(), Vec::new()];
        for u in 0..2usize {
            for x in 0..n {
                let succ: Vec<(usize, f64)> =
                    rows[x].iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
                let mut pairs = vec![(0.0f64, 0.0f64)];
                for &(s, p) in &succ {
                    let opts = &values[tau - 1][u][s];
                    let mut next = Vec::with_capacity(pairs.len() * opts.len());
                    for &(c, v) in &pairs {
                        for &(a, w) in opts {
                            if w >= (horizon + 1) as f64 {
                                continue;
                            }
                            next.push((c + p * a, v + p * w));
                        }
                    }
                    pairs = next;
                }
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut best = f64::INFINITY;
                for pr in pairs.iter_mut() {
                    best = best.min(pr.1);
                    pr.1 = best;
                }
                tables[u].push(pairs);
            }
        }
        let layer = [0u8, 1].map(|u_prev| {
            (0..n)
                .map(|x| {
                    let b = bounds[tau][usize::from(u_prev)][x];
                    candidates(b)
                        .into_iter()
                        .map(|alpha| {
                            let mut v = (horizon + 1) as f64;
                            for u in 0..2u8 {
                                let c = expected_cost(costs, day(horizon, tau), u_prev, u, wrp[x]);
                                let budget = alpha - c;
                                let limit = budget + TOL * budget.abs().max(1.0);
                                let table = &tables[usize::from(u)][x];
                                let k = table.partition_point(|pr| pr.0 <= limit);
                                if k > 0 {
                                    v = v.min(f64::from(u) + table[k - 1].1);
                                }
                            }
                            (alpha, v)
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        });
        values.push(layer);
    }
    Enumerated { bounds, values }
}

/// Expected realized cost and event count of the tensor's policy from
/// `(day, x, α, u_prev)`, summed over the full scenario tree.
#[allow(clippy::too_many_arguments)]
pub fn rollout(
    tensor: &ValueTensor,
    horizon: usize,
    costs: &CostSchedule,
    rows: &[Vec<f64>],
    indicator: &[f64],
    day: usize,
    x: usize,
    alpha: f64,
    u_prev: u8,
) -> (f64, f64) {
    if day > horizon {
        let c = rows[x]
            .iter()
            .enumerate()
            .map(|(s, p)| p * costs.stage_cost(day - 1, u_prev, 0, indicator[s]))
            .sum();
        return (c, 0.0);
    }
    let d = tensor.decide(day, x, alpha, u_prev).unwrap();
    let mut cost = 0.0;
    let mut count = f64::from(d.u);
    for (s, p) in rows[x].iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let (c, k) = rollout(tensor, horizon, costs, rows, indicator, day + 1, s, d.next_alpha[s], d.u);
        cost += p * (costs.stage_cost(day - 1, u_prev, d.u, indicator[s]) + c);
        count += p * k;
    }
    (cost, count)
}
