//! Discrete weather states and the Markov chain that drives every scenario.
//!
//! Raw observation vectors are binned per phenomenon and combined into a
//! joint state index by mixed-radix encoding: phenomena in declaration order
//! (first is most significant), the optional day-type factor last.
//!
//! Transition matrices are stored row by row as a sparse part plus a
//! constant `base` added to every entry of the row. Count estimates with
//! additive smoothing and unvisited (uniform) rows both fit this form
//! exactly, so matrix-vector products cost `O(nnz + n)` even for joint
//! spaces with thousands of states.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row sums must match 1 within this tolerance on construction.
const ROW_SUM_TOL: f64 = 1e-9;

/// Direct linear solve is used for the stationary vector up to this size.
const DIRECT_STATIONARY_MAX: usize = 512;

/// One binned observation channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phenomenon {
    pub name: String,
    pub unit: String,
    /// Strictly ascending interior edges. `edges.len() + 1` bins; the outer
    /// bins are open-ended.
    pub edges: Vec<f64>,
}

impl Phenomenon {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, edges: Vec<f64>) -> Result<Self> {
        let p = Self {
            name: name.into(),
            unit: unit.into(),
            edges,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::InvalidStateSpace(format!(
                "phenomenon `{}` needs at least one bin edge",
                self.name
            )));
        }
        if self.edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidStateSpace(format!(
                "phenomenon `{}` has a non-finite edge",
                self.name
            )));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStateSpace(format!(
                "edges of `{}` are not strictly ascending",
                self.name
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    /// Bin `i` covers `[edges[i-1], edges[i])`.
    pub fn bin_of(&self, value: f64) -> usize {
        self.edges.partition_point(|&e| e <= value)
    }

    /// Midpoint of an interior bin; outer bins use their finite edge.
    pub fn representative(&self, bin: usize) -> f64 {
        let last = self.edges.len();
        match bin {
            0 => self.edges[0],
            b if b >= last => self.edges[last - 1],
            b => 0.5 * (self.edges[b - 1] + self.edges[b]),
        }
    }
}

/// Finite joint state space: product of per-phenomenon bins, optionally
/// times a categorical day-type factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    phenomena: Vec<Phenomenon>,
    /// Labels of the day-type categories, e.g. `["weekday", "weekend"]`.
    day_types: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(phenomena: Vec<Phenomenon>, day_types: Option<Vec<String>>) -> Result<Self> {
        if phenomena.is_empty() {
            return Err(Error::InvalidStateSpace("no phenomena declared".into()));
        }
        for p in &phenomena {
            p.validate()?;
        }
        if let Some(d) = &day_types {
            if d.len() < 2 {
                return Err(Error::InvalidStateSpace(
                    "a day-type factor needs at least two categories".into(),
                ));
            }
        }
        let space = Self {
            phenomena,
            day_types,
        };
        space
            .radices()
            .try_fold(1usize, |acc, r| acc.checked_mul(r))
            .ok_or_else(|| Error::InvalidStateSpace("cardinality overflows".into()))?;
        Ok(space)
    }

    pub fn phenomena(&self) -> &[Phenomenon] {
        &self.phenomena
    }

    pub fn day_types(&self) -> Option<&[String]> {
        self.day_types.as_deref()
    }

    fn radices(&self) -> impl Iterator<Item = usize> + '_ {
        self.phenomena
            .iter()
            .map(Phenomenon::n_bins)
            .chain(self.day_types.iter().map(Vec::len))
    }

    pub fn cardinality(&self) -> usize {
        self.radices().product()
    }

    /// Mixed-radix encoding of per-factor bins (day type last).
    pub fn encode(&self, bins: &[usize]) -> Result<usize> {
        let radices: Vec<usize> = self.radices().collect();
        if bins.len() != radices.len() {
            return Err(Error::ObservationArity {
                expected: radices.len(),
                got: bins.len(),
            });
        }
        let mut index = 0usize;
        for (&b, &r) in bins.iter().zip(&radices) {
            if b >= r {
                return Err(Error::StateOutOfRange {
                    state: b,
                    cardinality: r,
                });
            }
            index = index * r + b;
        }
        Ok(index)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, state: usize) -> Result<Vec<usize>> {
        let n = self.cardinality();
        if state >= n {
            return Err(Error::StateOutOfRange {
                state,
                cardinality: n,
            });
        }
        let radices: Vec<usize> = self.radices().collect();
        let mut bins = vec![0; radices.len()];
        let mut rest = state;
        for (slot, &r) in bins.iter_mut().zip(&radices).rev() {
            *slot = rest % r;
            rest /= r;
        }
        Ok(bins)
    }

    /// Maps raw readings (one per phenomenon, declaration order) and an
    /// optional day-type category to a joint state.
    pub fn discretize(&self, raw: &[f64], day_type: Option<usize>) -> Result<usize> {
        if raw.len() != self.phenomena.len() {
            return Err(Error::ObservationArity {
                expected: self.phenomena.len(),
                got: raw.len(),
            });
        }
        let mut bins = Vec::with_capacity(raw.len() + 1);
        for (p, &v) in self.phenomena.iter().zip(raw) {
            if v.is_nan() {
                return Err(Error::NanObservation {
                    phenomenon: p.name.clone(),
                });
            }
            bins.push(p.bin_of(v));
        }
        match (&self.day_types, day_type) {
            (Some(_), Some(d)) => bins.push(d),
            (Some(_), None) => {
                return Err(Error::InvalidStateSpace(
                    "state space has a day-type factor but none was given".into(),
                ))
            }
            (None, _) => {}
        }
        self.encode(&bins)
    }

    /// Bin representatives of every phenomenon for `state`, plus its
    /// day-type category when the factor is present.
    pub fn representatives(&self, state: usize) -> Result<(Vec<f64>, Option<usize>)> {
        let bins = self.decode(state)?;
        let reps = self
            .phenomena
            .iter()
            .zip(&bins)
            .map(|(p, &b)| p.representative(b))
            .collect();
        let day = self.day_types.as_ref().map(|_| bins[bins.len() - 1]);
        Ok((reps, day))
    }

    /// Position of a phenomenon by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.phenomena.iter().position(|p| p.name == name)
    }
}

/// One row of a transition matrix: `P[i][j] = base + sparse(j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    base: f64,
    cols: Vec<usize>,
    probs: Vec<f64>,
}

impl Row {
    fn sparse_get(&self, j: usize) -> f64 {
        match self.cols.binary_search(&j) {
            Ok(pos) => self.probs[pos],
            Err(_) => 0.0,
        }
    }

    fn sum(&self, n: usize) -> f64 {
        self.base * n as f64 + self.probs.iter().sum::<f64>()
    }
}

/// Row-stochastic transition matrix over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    n: usize,
    smoothing: f64,
    rows: Vec<Row>,
}

impl TransitionModel {
    /// Builds a model from dense rows. Rows are renormalized after the
    /// stochasticity check so sums hold to machine precision.
    pub fn from_dense(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        let mut out = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotStochastic(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            let mut cols = Vec::new();
            let mut probs = Vec::new();
            for (j, p) in row.into_iter().enumerate() {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::NotStochastic(format!("P[{i}][{j}] = {p}")));
                }
                if p > 0.0 {
                    cols.push(j);
                    probs.push(p);
                }
            }
            out.push(Row {
                base: 0.0,
                cols,
                probs,
            });
        }
        let mut model = Self {
            n,
            smoothing: 0.0,
            rows: out,
        };
        model.validate()?;
        model.renormalize();
        Ok(model)
    }

    /// Checks every row sums to one.
    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.n {
            return Err(Error::NotStochastic("row count mismatch".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.base.is_finite() || r.base < 0.0 {
                return Err(Error::NotStochastic(format!("row {i} has base {}", r.base)));
            }
            if r.cols.iter().any(|&j| j >= self.n) || r.cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::NotStochastic(format!("row {i} has bad column indices")));
            }
            if r.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::NotStochastic(format!("row {i} has a negative entry")));
            }
            let s = r.sum(self.n);
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    fn renormalize(&mut self) {
        let n = self.n;
        for r in &mut self.rows {
            let s = r.sum(n);
            r.base /= s;
            r.probs.iter_mut().for_each(|p| *p /= s);
        }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        let r = &self.rows[i];
        r.base + r.sparse_get(j)
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let r = &self.rows[i];
        let mut out = vec![r.base; self.n];
        for (&j, &p) in r.cols.iter().zip(&r.probs) {
            out[j] += p;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.dense_row(i)).collect()
    }

    /// `Σ_j P[i][j] v[j]`.
    pub fn expect_row(&self, i: usize, v: &[f64]) -> f64 {
        let r = &self.rows[i];
        let mut acc = 0.0;
        for (&j, &p) in r.cols.iter().zip(&r.probs) {
            acc += p * v[j];
        }
        if r.base != 0.0 {
            acc += r.base * v.iter().sum::<f64>();
        }
        acc
    }

    /// `P v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match the state count");
        let total: f64 = v.iter().sum();
        self.rows
            .iter()
            .map(|r| {
                let mut acc = r.base * total;
                for (&j, &p) in r.cols.iter().zip(&r.probs) {
                    acc += p * v[j];
                }
                acc
            })
            .collect()
    }

    /// `s P` for a row vector `s`.
    pub fn propagate(&self, s: &[f64]) -> Vec<f64> {
        assert_eq!(s.len(), self.n, "vector length must match the state count");
        let mut out = vec![0.0; self.n];
        let mut spread = 0.0;
        for (r, &w) in self.rows.iter().zip(s) {
            if w == 0.0 {
                continue;
            }
            spread += w * r.base;
            for (&j, &p) in r.cols.iter().zip(&r.probs) {
                out[j] += w * p;
            }
        }
        if spread != 0.0 {
            out.iter_mut().for_each(|o| *o += spread);
        }
        out
    }

    /// Successors with positive probability, in state-index order.
    pub fn support(&self, i: usize) -> Vec<(usize, f64)> {
        let r = &self.rows[i];
        if r.base > 0.0 {
            self.dense_row(i).into_iter().enumerate().collect()
        } else {
            r.cols.iter().copied().zip(r.probs.iter().copied()).collect()
        }
    }

    /// `P^n` by repeated squaring; `n = 0` gives the identity.
    pub fn n_step(&self, n: u32) -> Vec<Vec<f64>> {
        let size = self.n;
        let mut result: Vec<Vec<f64>> = (0..size)
            .map(|i| {
                let mut row = vec![0.0; size];
                row[i] = 1.0;
                row
            })
            .collect();
        let mut base = self.to_dense();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = dense_mul(&result, &base);
            }
            e >>= 1;
            if e > 0 {
                base = dense_mul(&base, &base);
            }
        }
        result
    }

    /// Irreducible and aperiodic support graph.
    pub fn check_ergodic(&self) -> Result<()> {
        let n = self.n;
        let universal: Vec<usize> = (0..n).filter(|&i| self.rows[i].base > 0.0).collect();

        // Forward reachability from 0, recording BFS levels for the period.
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let next_level = level[i] + 1;
            let mut visit = |j: usize| {
                if level[j] == usize::MAX {
                    level[j] = next_level;
                    queue.push_back(j);
                }
            };
            if self.rows[i].base > 0.0 {
                (0..n).for_each(&mut visit);
            } else {
                self.rows[i].cols.iter().copied().for_each(&mut visit);
            }
        }
        if let Some(j) = level.iter().position(|&l| l == usize::MAX) {
            return Err(Error::NotErgodic(format!("state {j} is unreachable from state 0")));
        }

        // Reverse reachability: every state must reach 0.
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, r) in self.rows.iter().enumerate() {
            if r.base == 0.0 {
                for &j in &r.cols {
                    preds[j].push(i);
                }
            }
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut universal_done = false;
        while let Some(j) = queue.pop_front() {
            for &i in &preds[j] {
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
            if !universal_done {
                universal_done = true;
                for &i in &universal {
                    if !seen[i] {
                        seen[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::NotErgodic(format!("state 0 is unreachable from state {i}")));
        }

        // Period = gcd over edges of (level[i] + 1 - level[j]).
        let mut g: u64 = 0;
        'outer: for (i, r) in self.rows.iter().enumerate() {
            let mut edge = |j: usize| {
                let diff = (level[i] as i64 + 1 - level[j] as i64).unsigned_abs();
                g = gcd(g, diff);
            };
            if r.base > 0.0 {
                (0..n).for_each(&mut edge);
            } else {
                r.cols.iter().copied().for_each(&mut edge);
            }
            if g == 1 {
                break 'outer;
            }
        }
        if g != 1 {
            return Err(Error::NotErgodic(format!("chain is periodic with period {g}")));
        }
        Ok(())
    }

    /// Unique stationary distribution of an ergodic chain, with
    /// `‖sP − s‖∞ ≤ tol`.
    pub fn stationary(&self, tol: f64) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        self.check_ergodic()?;
        let n = self.n;
        let mut s = if n <= DIRECT_STATIONARY_MAX {
            self.stationary_direct()?
        } else {
            vec![1.0 / n as f64; n]
        };
        for _ in 0..1_000_000 {
            let next = self.propagate(&s);
            let resid = next
                .iter()
                .zip(&s)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if resid <= tol {
                return Ok(s);
            }
            s = next;
        }
        Err(Error::NotErgodic(format!(
            "power iteration did not reach tolerance {tol}"
        )))
    }

    fn stationary_direct(&self) -> Result<Vec<f64>> {
        let n = self.n;
        // Rows of (P^T - I), with the last equation replaced by Σs = 1.
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for (j, p) in self.dense_row(i).into_iter().enumerate() {
                a[(j, i)] += p;
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::NotErgodic("balance equations are singular".into()))?;
        let mut s: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= total);
        Ok(s)
    }

    /// Inverse-CDF draw from row `i` given `u ∈ [0, 1)`.
    pub fn sample_next(&self, i: usize, u: f64) -> usize {
        let r = &self.rows[i];
        if r.base == 0.0 {
            let mut cum = 0.0;
            for (&j, &p) in r.cols.iter().zip(&r.probs) {
                cum += p;
                if cum > u {
                    return j;
                }
            }
            return *r.cols.last().expect("row has positive mass");
        }
        let mut cum = 0.0;
        let mut next_sparse = 0;
        for j in 0..self.n {
            cum += r.base;
            if next_sparse < r.cols.len() && r.cols[next_sparse] == j {
                cum += r.probs[next_sparse];
                next_sparse += 1;
            }
            if cum > u {
                return j;
            }
        }
        self.n - 1
    }

    /// Path `x0, x1, …, xT` drawn with a ChaCha stream seeded by `seed`.
    pub fn sample_path(&self, x0: usize, horizon: usize, seed: u64) -> Vec<usize> {
        assert!(x0 < self.n, "initial state out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut path = Vec::with_capacity(horizon + 1);
        path.push(x0);
        let mut x = x0;
        for _ in 0..horizon {
            x = self.sample_next(x, rng.random::<f64>());
            path.push(x);
        }
        path
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_from(dist: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        cum += p;
        if cum > u {
            return j;
        }
    }
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Frequency estimate with additive smoothing. Rows with no observed
/// transitions and zero smoothing become uniform.
pub fn estimate_transitions(
    paths: &[Vec<usize>],
    n_states: usize,
    smoothing: f64,
) -> Result<TransitionModel> {
    if paths.is_empty() {
        return Err(Error::EmptyPaths);
    }
    if n_states == 0 {
        return Err(invalid("n_states", "must be positive"));
    }
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(invalid("smoothing", "must be a finite nonnegative pseudo-count"));
    }
    let mut counts: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n_states];
    let mut observed = 0usize;
    for path in paths {
        if let Some(&bad) = path.iter().find(|&&s| s >= n_states) {
            return Err(Error::StateOutOfRange {
                state: bad,
                cardinality: n_states,
            });
        }
        for w in path.windows(2) {
            *counts[w[0]].entry(w[1]).or_insert(0.0) += 1.0;
            observed += 1;
        }
    }
    if observed == 0 && smoothing == 0.0 {
        return Err(invalid(
            "smoothing",
            "no transitions observed; a positive pseudo-count is required",
        ));
    }
    let n = n_states as f64;
    let rows = counts
        .into_iter()
        .map(|c| {
            let total: f64 = c.values().sum();
            let denom = total + smoothing * n;
            if denom == 0.0 {
                return Row {
                    base: 1.0 / n,
                    cols: Vec::new(),
                    probs: Vec::new(),
                };
            }
            let (cols, probs) = c.into_iter().map(|(j, k)| (j, k / denom)).unzip();
            Row {
                base: smoothing / denom,
                cols,
                probs,
            }
        })
        .collect();
    let model = TransitionModel {
        n: n_states,
        smoothing,
        rows,
    };
    model.validate()?;
    Ok(model)
}

fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_factor(edges: Vec<f64>) -> StateSpace {
        StateSpace::new(vec![Phenomenon::new("temp", "c", edges).unwrap()], None).unwrap()
    }

    #[test]
    fn interval_membership() {
        let s = one_factor(vec![15.0, 30.0]);
        assert_eq!(s.discretize(&[20.0], None).unwrap(), 1);
        assert_eq!(s.discretize(&[-40.0], None).unwrap(), 0);
        assert_eq!(s.discretize(&[15.0], None).unwrap(), 1);
        assert_eq!(s.discretize(&[99.0], None).unwrap(), 2);
        assert_eq!(s.discretize(&[f64::INFINITY], None).unwrap(), 2);
    }

    #[test]
    fn mixed_radix_order() {
        let s = StateSpace::new(
            vec![
                Phenomenon::new("a", "u", vec![1.0, 2.0]).unwrap(),
                Phenomenon::new("b", "u", vec![0.0]).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(s.cardinality(), 6);
        assert_eq!(s.encode(&[2, 1]).unwrap(), 5);
        assert_eq!(s.decode(5).unwrap(), vec![2, 1]);
    }

    #[test]
    fn day_type_is_least_significant() {
        let s = StateSpace::new(
            vec![Phenomenon::new("t", "c", vec![0.0]).unwrap()],
            Some(vec!["weekday".into(), "weekend".into()]),
        )
        .unwrap();
        assert_eq!(s.cardinality(), 4);
        assert_eq!(s.discretize(&[5.0], Some(1)).unwrap(), 3);
        assert!(s.discretize(&[5.0], None).is_err());
    }

    #[test]
    fn nan_names_the_phenomenon() {
        let s = one_factor(vec![0.0]);
        let err = s.discretize(&[f64::NAN], None).unwrap_err();
        assert!(err.to_string().contains("temp"), "{err}");
    }

    #[test]
    fn edges_must_ascend() {
        assert!(Phenomenon::new("x", "u", vec![1.0, 1.0]).is_err());
        assert!(Phenomenon::new("x", "u", vec![]).is_err());
    }

    #[test]
    fn representatives_use_finite_edges_outside() {
        let p = Phenomenon::new("x", "u", vec![10.0, 20.0, 40.0]).unwrap();
        assert_eq!(p.representative(0), 10.0);
        assert_eq!(p.representative(1), 15.0);
        assert_eq!(p.representative(2), 30.0);
        assert_eq!(p.representative(3), 40.0);
    }

    #[test]
    fn frequency_counts() {
        let m = estimate_transitions(&[vec![0, 1, 0, 1, 0]], 2, 0.0).unwrap();
        assert_eq!(m.to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn pseudo_counts_only() {
        let m = estimate_transitions(&[vec![0]], 2, 1.0).unwrap();
        assert_eq!(m.to_dense(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(estimate_transitions(&[vec![0]], 2, 0.0).is_err());
        assert!(matches!(
            estimate_transitions(&[], 2, 1.0),
            Err(Error::EmptyPaths)
        ));
    }

    #[test]
    fn unvisited_row_is_uniform() {
        let m = estimate_transitions(&[vec![0, 0, 0]], 2, 0.0).unwrap();
        assert_eq!(m.dense_row(0), vec![1.0, 0.0]);
        assert_eq!(m.dense_row(1), vec![0.5, 0.5]);
    }

    #[test]
    fn smoothing_formula() {
        let m = estimate_transitions(&[vec![0, 1, 1, 0, 1]], 2, 0.5).unwrap();
        // row 0: counts (0, 2) -> (0.5, 2.5)/3
        assert!((m.prob(0, 0) - 0.5 / 3.0).abs() < 1e-15);
        assert!((m.prob(0, 1) - 2.5 / 3.0).abs() < 1e-15);
        // row 1: counts (1, 1) -> (1.5, 1.5)/3
        assert!((m.prob(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn n_step_small_cases() {
        let swap = TransitionModel::from_dense(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(swap.n_step(0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(swap.n_step(1), swap.to_dense());
        assert_eq!(swap.n_step(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn stationary_two_state() {
        let m = TransitionModel::from_dense(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let s = m.stationary(1e-12).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-10);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-10);

        let u = TransitionModel::from_dense(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = u.stationary(1e-12).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_and_periodic_chains_are_rejected() {
        let id = TransitionModel::from_dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(id.stationary(1e-10), Err(Error::NotErgodic(_))));
        let swap = TransitionModel::from_dense(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(swap.stationary(1e-10), Err(Error::NotErgodic(_))));
    }

    #[test]
    fn uniform_rows_make_large_chains_ergodic() {
        let m = estimate_transitions(&[vec![0, 1, 2]], 50, 0.0).unwrap();
        let s = m.stationary(1e-12).unwrap();
        let total: f64 = s.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_and_trivial_paths() {
        let id = TransitionModel::from_dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id.sample_path(0, 10, 3), vec![0; 11]);
        assert_eq!(id.sample_path(1, 0, 3), vec![1]);
        let m = TransitionModel::from_dense(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert_eq!(m.sample_path(0, 200, 42), m.sample_path(0, 200, 42));
    }

    #[test]
    fn non_stochastic_rows_are_rejected() {
        assert!(TransitionModel::from_dense(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionModel::from_dense(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn sparse_sampling_matches_dense_walk() {
        let m = estimate_transitions(&[vec![0, 2, 1, 2, 2, 0, 3]], 5, 0.3).unwrap();
        for i in 0..5 {
            let row = m.dense_row(i);
            for k in 0..200 {
                let u = k as f64 / 200.0;
                assert_eq!(m.sample_next(i, u), sample_from(&row, u), "row {i}, u {u}");
            }
        }
    }
}
