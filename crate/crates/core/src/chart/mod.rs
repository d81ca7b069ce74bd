//! Distribution-free multivariate EWMA chart on pooled ranks of spectrum coordinates.
//!
//! After `n` Phase-II parts the pool holds `N = m0 + n` spectra. Each coordinate `j` is ranked
//! across the pool (mid-ranks for ties), and the window of the last `w` parts gives
//!
//! ```text
//! T_jn = (Σ_i c_i R_jni − E) / √V,   c_i = (1 − λ)^(n − i),   T_n = Σ_j T_jn²
//! ```
//!
//! with `E` and `V` the moments of the weighted rank sum under exchangeability. The p-value of
//! `T_n` comes from reassigning the pooled parts to the window positions at random (or
//! exhaustively when there are few arrangements); the chart signals when it falls below `α`.

pub mod runlength;

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

pub use runlength::{
    run_length_simulation, FnSource, PooledSource, RunLengthConfig, RunLengthReport,
    SpectrumSource,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartParams {
    /// Phase-I part count.
    pub m0: usize,
    pub w_min: usize,
    pub w_max: usize,
    /// EWMA weight, `0 < λ ≤ 1`.
    pub lambda: f64,
    /// Per-step false-alarm rate.
    pub alpha: f64,
    /// Number of leading eigenvalues monitored.
    pub p: usize,
    /// Random reassignments per p-value.
    pub permutations: usize,
    /// Window arrangements up to this count are enumerated exactly instead of sampled.
    pub exact_limit: usize,
    /// Previous steps whose no-signal outcome the p-value is conditioned on. With full
    /// conditioning every step has false-alarm probability `α` given no earlier alarm, so the
    /// in-control run length is geometric with mean `1/α`; 0 gives unconditional p-values.
    pub history: usize,
    /// Seed of the per-step permutation streams.
    pub seed: u64,
}

impl Default for ChartParams {
    fn default() -> Self {
        Self {
            m0: 100,
            w_min: 1,
            w_max: 10,
            lambda: 0.01,
            alpha: 0.005,
            p: 15,
            permutations: 2000,
            exact_limit: 50_000,
            history: 10,
            seed: 0,
        }
    }
}

impl ChartParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.w_min < 1 || self.w_min > self.w_max {
            return bad(format!(
                "window bounds must satisfy 1 ≤ w_min ≤ w_max, got {}..{}",
                self.w_min, self.w_max
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.m0 < self.p {
            return bad(format!("m0 = {} must be at least p = {}", self.m0, self.p));
        }
        if self.permutations == 0 {
            return bad("permutations must be at least 1".into());
        }
        Ok(())
    }

    /// Window size after `n` Phase-II parts.
    pub fn window(&self, n: usize) -> usize {
        n.max(self.w_min).min(self.w_max)
    }
}

/// Mid-ranks (1-based) of `values`; tied values share the average of their ranks.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Ranks of coordinate `column` for every pooled part: baseline rows first, then the stream.
pub fn pooled_ranks(column: usize, baseline: &[Vec<f64>], stream: &[Vec<f64>]) -> Vec<f64> {
    let values: Vec<f64> = baseline
        .iter()
        .chain(stream)
        .map(|row| row[column])
        .collect();
    mid_ranks(&values)
}

/// Mean and variance of `Σ c_i R_i` when `R` is drawn without replacement from `{1..N}`.
pub fn weighted_rank_moments(n_pool: usize, weights: &[f64]) -> (f64, f64) {
    let n = n_pool as f64;
    let s1: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|c| c * c).sum();
    let mean = (n + 1.0) / 2.0 * s1;
    let var = (n + 1.0) / 12.0 * (n * s2 - s1 * s1);
    (mean, var.max(0.0))
}

/// Weights `(1 − λ)^(w−1−t)` for window positions `t = 0..w`, oldest first.
pub fn ewma_weights(lambda: f64, w: usize) -> Vec<f64> {
    (0..w)
        .map(|t| (1.0 - lambda).powi((w - 1 - t) as i32))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    /// Phase-II parts seen, including this one.
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub signal: bool,
}

/// Ranks of the pool, row-major by part, with the moments of the current window.
struct RankTable {
    p: usize,
    ranks: Vec<f64>,
    /// Coordinates whose pooled values are all tied.
    degenerate: Vec<bool>,
    weights: Vec<f64>,
    mean: f64,
    var: f64,
}

impl RankTable {
    fn new(baseline: &[Vec<f64>], stream: &[Vec<f64>], p: usize, weights: Vec<f64>) -> Self {
        let n = baseline.len() + stream.len();
        let mut ranks = vec![0.0; n * p];
        let mut degenerate = vec![false; p];
        for (j, deg) in degenerate.iter_mut().enumerate() {
            let col = pooled_ranks(j, baseline, stream);
            *deg = col.iter().all(|&r| r == col[0]);
            for (i, r) in col.into_iter().enumerate() {
                ranks[i * p + j] = r;
            }
        }
        let (mean, var) = weighted_rank_moments(n, &weights);
        Self {
            p,
            ranks,
            degenerate,
            weights,
            mean,
            var,
        }
    }

    fn pool_size(&self) -> usize {
        self.ranks.len() / self.p
    }

    /// Adds to `corr[t·p + j]` the weight of `later` ranking below `parts[t]` in coordinate `j`
    /// (ties count half): the drop in mid-rank when `later` leaves the pool.
    fn count_below(&self, later: usize, parts: &[usize], corr: &mut [f64]) {
        let p = self.p;
        let lr = &self.ranks[later * p..(later + 1) * p];
        for (t, &part) in parts.iter().enumerate() {
            let row = &self.ranks[part * p..(part + 1) * p];
            for ((c, &r), &q) in corr[t * p..(t + 1) * p].iter_mut().zip(row).zip(lr) {
                *c += if q < r {
                    1.0
                } else if q == r {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }

    /// `T` for the parts `window[t]` placed at window positions `t`.
    fn statistic(&self, window: &[usize], acc: &mut [f64]) -> f64 {
        if !(self.var > 0.0) {
            return 0.0;
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (&part, &c) in window.iter().zip(&self.weights) {
            let row = &self.ranks[part * self.p..(part + 1) * self.p];
            for (a, r) in acc.iter_mut().zip(row) {
                *a += c * r;
            }
        }
        acc.iter()
            .zip(&self.degenerate)
            .filter(|(_, &d)| !d)
            .map(|(a, _)| (a - self.mean).powi(2) / self.var)
            .sum()
    }
}

/// Number of ordered `w`-subsets of `n` items, saturating at `limit + 1`.
fn arrangements(n: usize, w: usize, limit: usize) -> usize {
    let mut total: usize = 1;
    for i in 0..w {
        total = total.saturating_mul(n - i);
        if total > limit {
            return limit + 1;
        }
    }
    total
}

/// Calls `f` on every ordered `w`-subset of `0..n`.
fn for_each_arrangement(n: usize, w: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(n: usize, w: usize, cur: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
        if cur.len() == w {
            f(cur);
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, w, cur, used, f);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, w, &mut Vec::with_capacity(w), &mut vec![false; n], f);
}

/// Phase-I baseline plus the Phase-II stream observed so far.
#[derive(Debug, Clone)]
pub struct ChartState {
    params: ChartParams,
    baseline: Vec<Vec<f64>>,
    stream: Vec<Vec<f64>>,
    /// Critical value of every step so far, `+∞` where no signal was attainable.
    limits: Vec<f64>,
    /// Most recent step that signalled, 0 if none.
    last_alarm: usize,
    last: Option<StepResult>,
}

impl ChartState {
    /// Uses the first `p` entries of each baseline spectrum.
    pub fn new(params: ChartParams, baseline: Vec<Vec<f64>>) -> Result<Self> {
        params.validate()?;
        if baseline.len() != params.m0 {
            return Err(Error::DimensionMismatch(format!(
                "baseline has {} parts, m0 = {}",
                baseline.len(),
                params.m0
            )));
        }
        let baseline = baseline
            .into_iter()
            .map(|row| truncate(row, params.p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            baseline,
            stream: Vec::new(),
            limits: Vec::new(),
            last_alarm: 0,
            last: None,
        })
    }

    pub fn params(&self) -> &ChartParams {
        &self.params
    }

    pub fn baseline(&self) -> &[Vec<f64>] {
        &self.baseline
    }

    pub fn stream(&self) -> &[Vec<f64>] {
        &self.stream
    }

    /// Phase-II parts observed.
    pub fn n(&self) -> usize {
        self.stream.len()
    }

    pub fn last(&self) -> Option<StepResult> {
        self.last
    }

    fn table(&self) -> (RankTable, Vec<usize>) {
        let pool = self.baseline.len() + self.stream.len();
        let w = self.params.window(self.n()).min(pool);
        let table = RankTable::new(
            &self.baseline,
            &self.stream,
            self.params.p,
            ewma_weights(self.params.lambda, w),
        );
        let window: Vec<usize> = (pool - w..pool).collect();
        (table, window)
    }

    /// `T_n` for the current pool and window.
    pub fn statistic(&self) -> Result<f64> {
        if self.n() == 0 {
            return Err(Error::InvalidArgument(
                "statistic needs at least one Phase-II part".into(),
            ));
        }
        let (table, window) = self.table();
        let t = table.statistic(&window, &mut vec![0.0; self.params.p]);
        Ok(t)
    }

    /// Adds one Phase-II spectrum, then tests the updated window.
    ///
    /// The reference distribution reassigns pooled parts to the most recent time positions,
    /// keeping only reassignments under which the chart would not have signalled at any of the
    /// previous `history` steps.
    pub fn step(&mut self, spectrum: Vec<f64>) -> Result<StepResult> {
        self.stream.push(truncate(spectrum, self.params.p)?);
        let n = self.n();
        let (table, window) = self.table();
        if let Some(j) = table.degenerate.iter().position(|&d| d) {
            log::warn!("coordinate {j} is tied across the whole pool and is ignored");
        }
        let mut acc = vec![0.0; self.params.p];
        let observed = table.statistic(&window, &mut acc);
        // equal statistics can differ in the last bits when summed in another order
        let threshold = observed - 1e-12 * observed.abs().max(1.0);
        let pool = table.pool_size();
        let w = window.len();
        let past = self.past_steps(n);
        // arrangements fill the last `span` time positions
        let span = past
            .iter()
            .map(|c| c.lag + c.weights.len())
            .max()
            .unwrap_or(0)
            .max(w);
        let mut reference = Vec::new();
        let mut arr_acc = vec![0.0; self.params.p];
        // corr[t·p + j]: later parts ranked below arrangement entry t in coordinate j
        let mut corr = vec![0.0; span * self.params.p];
        let mut consider = |arr: &[usize], reference: &mut Vec<f64>| {
            corr.iter_mut().for_each(|c| *c = 0.0);
            let mut applied = 0;
            // past steps come in increasing lag, so each adds the parts between it and the last
            for c in &past {
                while applied < c.lag {
                    applied += 1;
                    table.count_below(arr[span - applied], &arr[..span - applied], &mut corr);
                }
                let start = span - c.lag - c.weights.len();
                if c.statistic(&table, &arr[start..span - c.lag], &corr[start * table.p..], &mut arr_acc)
                    > c.limit + 1e-12 * c.limit.abs().max(1.0)
                {
                    return;
                }
            }
            reference.push(table.statistic(&arr[span - w..], &mut arr_acc));
        };
        let total = arrangements(pool, span, self.params.exact_limit);
        let exact = total <= self.params.exact_limit;
        if exact {
            for_each_arrangement(pool, span, &mut |arr| consider(arr, &mut reference));
        } else {
            let mut rng = seeded(derive_seed(self.params.seed, &[n as u64]));
            let mut perm: Vec<usize> = (0..pool).collect();
            let max_draws = 20 * self.params.permutations;
            let mut draws = 0;
            while reference.len() < self.params.permutations && draws < max_draws {
                for t in 0..span {
                    let r = rng.random_range(t..pool);
                    perm.swap(t, r);
                }
                consider(&perm[..span], &mut reference);
                draws += 1;
            }
            if reference.len() < self.params.permutations {
                log::warn!(
                    "only {} of {draws} reassignments satisfy the no-alarm history",
                    reference.len()
                );
            }
        }
        let hits = reference.iter().filter(|&&t| t >= threshold).count();
        let p_value = if exact {
            // the observed arrangement is always among the survivors
            hits.max(1) as f64 / reference.len().max(1) as f64
        } else {
            (1 + hits) as f64 / (1 + reference.len()) as f64
        };
        self.limits
            .push(critical_value(reference, self.params.alpha, exact));
        let result = StepResult {
            n,
            statistic: observed,
            p_value,
            signal: p_value < self.params.alpha,
        };
        if result.signal {
            self.last_alarm = n;
        }
        self.last = Some(result);
        Ok(result)
    }

    /// Earlier steps that could have signalled, within the conditioning horizon.
    fn past_steps(&self, n: usize) -> Vec<PastStep> {
        let m0 = self.baseline.len();
        // conditioning restarts after an alarm the caller chose to continue past
        let start = n
            .saturating_sub(self.params.history)
            .max(self.last_alarm + 1)
            .max(1);
        (start..n)
            .rev()
            .filter(|&k| self.limits[k - 1].is_finite())
            .map(|k| {
                let weights = ewma_weights(self.params.lambda, self.params.window(k).min(m0 + k));
                let (mean, var) = weighted_rank_moments(m0 + k, &weights);
                PastStep {
                    lag: n - k,
                    weights,
                    mean,
                    var,
                    limit: self.limits[k - 1],
                }
            })
            .collect()
    }
}

/// A previous step replayed under a reassignment: its window ends `lag` positions before the
/// newest part, and the chart did not signal there iff `T ≤ limit`.
struct PastStep {
    lag: usize,
    weights: Vec<f64>,
    mean: f64,
    var: f64,
    limit: f64,
}

impl PastStep {
    /// `T` of this step for the parts `window`, whose ranks within the smaller pool are the
    /// full-pool mid-ranks minus `corr` (row-major, one row per window entry).
    fn statistic(&self, table: &RankTable, window: &[usize], corr: &[f64], acc: &mut [f64]) -> f64 {
        if !(self.var > 0.0) {
            return 0.0;
        }
        let p = table.p;
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (t, (&part, &c)) in window.iter().zip(&self.weights).enumerate() {
            let row = &table.ranks[part * p..(part + 1) * p];
            let below = &corr[t * p..(t + 1) * p];
            for ((a, r), b) in acc.iter_mut().zip(row).zip(below) {
                *a += c * (r - b);
            }
        }
        acc.iter()
            .zip(&table.degenerate)
            .filter(|(_, &d)| !d)
            .map(|(a, _)| (a - self.mean).powi(2) / self.var)
            .sum()
    }
}

/// Largest statistic that does not signal against `reference`; `+∞` when no value can signal.
fn critical_value(mut reference: Vec<f64>, alpha: f64, exact: bool) -> f64 {
    let s = reference.len() as f64;
    // a value signals iff fewer than `bound` reference statistics reach it
    let bound = if exact { alpha * s } else { alpha * (1.0 + s) - 1.0 };
    if !(bound > 0.0) {
        return f64::INFINITY;
    }
    let allowed = bound.ceil() as usize - 1;
    if allowed >= reference.len() {
        return f64::NEG_INFINITY;
    }
    reference.sort_by(|a, b| b.total_cmp(a));
    reference[allowed]
}

fn truncate(mut row: Vec<f64>, p: usize) -> Result<Vec<f64>> {
    if row.len() < p {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} values, chart monitors p = {p}",
            row.len()
        )));
    }
    if let Some(v) = row[..p].iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite eigenvalue {v}")));
    }
    row.truncate(p);
    Ok(row)
}

/// Reads a baseline registry: one spectrum per row, comma separated. A first row that does not
/// parse as numbers is taken as a header.
pub fn read_baseline_csv<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(_) => return Err(Error::parse(i + 1, "non-numeric field")),
        }
    }
    if let Some(first) = rows.first() {
        let len = first.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != len) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} values, expected {len}",
                i + 1,
                r.len()
            )));
        }
    }
    Ok(rows)
}

/// Writes one spectrum per row with full precision.
pub fn write_baseline_csv<W: Write>(rows: &[Vec<f64>], mut out: W) -> Result<()> {
    for r in rows {
        let fields: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn mid_rank_examples() {
        assert_eq!(mid_ranks(&[1.0, 2.0, 3.0])[2], 3.0);
        assert_eq!(mid_ranks(&[5.0, 5.0, 1.0]), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn ranks_are_a_permutation_without_ties() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..57).map(|_| rng.random()).collect();
        let mut r = mid_ranks(&v);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, (1..=57).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn moment_examples() {
        let (m, v) = weighted_rank_moments(3, &[1.0]);
        assert!((m - 2.0).abs() < 1e-15 && (v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(weighted_rank_moments(7, &[0.0, 0.0]), (0.0, 0.0));
    }

    #[test]
    fn moments_match_permutation_sampling() {
        let n = 10;
        let c = [1.0, 0.99];
        let (mean, var) = weighted_rank_moments(n, &c);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut perm: Vec<usize> = (1..=n).collect();
        let reps = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..reps {
            for t in 0..2 {
                let r = rng.random_range(t..n);
                perm.swap(t, r);
            }
            let x = c[0] * perm[0] as f64 + c[1] * perm[1] as f64;
            s += x;
            s2 += x * x;
        }
        let m_hat = s / reps as f64;
        let v_hat = s2 / reps as f64 - m_hat * m_hat;
        assert!((m_hat - mean).abs() < 3.0 * (var / reps as f64).sqrt());
        // variance of the sample variance ≈ 2σ⁴/n for near-normal sums; use a generous bound
        assert!((v_hat - var).abs() < 3.0 * var * (2.0 / reps as f64).sqrt() * 2.0);
    }

    fn params(p: usize, m0: usize) -> ChartParams {
        ChartParams {
            p,
            m0,
            ..ChartParams::default()
        }
    }

    #[test]
    fn single_rank_specialisation() {
        let baseline: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let mut st = ChartState::new(params(1, 9), baseline).unwrap();
        st.step(vec![6.5]).unwrap();
        let n: f64 = 10.0;
        let r = 8.0;
        let want = (r - (n + 1.0) / 2.0).powi(2) / ((n * n - 1.0) / 12.0);
        assert!((st.statistic().unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn first_part_cannot_signal_at_small_alpha() {
        let baseline: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64; 3]).collect();
        let mut st = ChartState::new(params(3, 100), baseline).unwrap();
        let r = st.step(vec![1e9; 3]).unwrap();
        // ranks 101 and 1 are equally extreme among the 101 arrangements
        assert!((r.p_value - 2.0 / 101.0).abs() < 1e-15);
        assert!(!r.signal);
        let r = st.step(vec![2e9; 3]).unwrap();
        assert!(r.signal, "{r:?}");
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut draw = || -> Vec<f64> { (0..4).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let baseline: Vec<Vec<f64>> = (0..30).map(|_| draw()).collect();
        let stream: Vec<Vec<f64>> = (0..6).map(|_| draw()).collect();
        let f = |v: &Vec<f64>| v.iter().map(|x: &f64| x.exp() * 3.0 + 1.0).collect::<Vec<_>>();
        let mut a = ChartState::new(params(4, 30), baseline.clone()).unwrap();
        let mut b = ChartState::new(params(4, 30), baseline.iter().map(f).collect()).unwrap();
        for s in &stream {
            let ra = a.step(s.clone()).unwrap();
            let rb = b.step(f(s)).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn tied_coordinate_contributes_nothing() {
        let baseline: Vec<Vec<f64>> = (0..5).map(|i| vec![0.0, i as f64]).collect();
        let mut st = ChartState::new(params(2, 5), baseline).unwrap();
        st.step(vec![0.0, 2.0]).unwrap();
        // coordinate 1: rank 3.5 of 6 → centred exactly
        assert!(st.statistic().unwrap().abs() < 1e-15);
    }

    #[test]
    fn window_rule() {
        let p = ChartParams::default();
        assert_eq!(p.window(1), 1);
        assert_eq!(p.window(7), 7);
        assert_eq!(p.window(40), 10);
        let q = ChartParams { w_min: 3, ..p };
        assert_eq!(q.window(1), 3);
    }

    #[test]
    fn parameter_validation() {
        assert!(ChartParams { w_min: 0, ..Default::default() }.validate().is_err());
        assert!(ChartParams { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(ChartParams { m0: 10, ..Default::default() }.validate().is_err());
        assert!(ChartParams::default().validate().is_ok());
        let st = ChartState::new(params(2, 3), vec![vec![1.0, 2.0]; 2]);
        assert!(st.is_err());
    }

    #[test]
    fn arrangement_enumeration() {
        let mut seen = Vec::new();
        for_each_arrangement(4, 2, &mut |a| seen.push(a.to_vec()));
        assert_eq!(seen.len(), 12);
        assert_eq!(arrangements(4, 2, 100), 12);
        assert_eq!(arrangements(101, 3, 50_000), 50_001);
    }

    #[test]
    fn baseline_csv_header_detection() {
        let with = "l1,l2\n1,2\n3,4\n";
        let without = "1,2\n3,4\n";
        assert_eq!(read_baseline_csv(with.as_bytes()).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(read_baseline_csv(without.as_bytes()).unwrap().len(), 2);
        assert!(read_baseline_csv("1,2\n3\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_baseline_csv(&[vec![0.1, 1e-20]], &mut buf).unwrap();
        assert_eq!(read_baseline_csv(&buf[..]).unwrap(), vec![vec![0.1, 1e-20]]);
    }

    #[test]
    fn critical_value_matches_p_value_rule() {
        let reference: Vec<f64> = (1..=99).map(f64::from).collect();
        // random reference: signal iff (1 + #{r ≥ t}) / 100 < 0.05, i.e. at most 3 reach t
        let c = critical_value(reference.clone(), 0.05, false);
        assert_eq!(c, 96.0);
        for t in [95.5, 96.0, 96.5, 99.5] {
            let p = (1 + reference.iter().filter(|&&r| r >= t).count()) as f64 / 100.0;
            assert_eq!(p < 0.05, t > c, "t = {t}");
        }
        assert_eq!(critical_value(reference.clone(), 0.005, false), f64::INFINITY);
        // exact reference of 99: signal iff #{r ≥ t} < 4.95
        assert_eq!(critical_value(reference, 0.05, true), 95.0);
    }

    #[test]
    fn replayed_history_reproduces_past_statistics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut draw = |shift: f64| -> Vec<f64> {
            (0..4)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    // coarse values so that ties occur
                    (2.0 * (z + shift)).round()
                })
                .collect()
        };
        let baseline: Vec<Vec<f64>> = (0..30).map(|_| draw(0.0)).collect();
        let mut st = ChartState::new(
            ChartParams {
                alpha: 0.5,
                w_max: 4,
                lambda: 0.2,
                permutations: 50,
                ..params(4, 30)
            },
            baseline,
        )
        .unwrap();
        let mut recorded = Vec::new();
        for i in 0..9 {
            recorded.push(st.step(draw(0.1 * i as f64)).unwrap().statistic);
        }
        st.last_alarm = 0;
        st.limits.iter_mut().for_each(|l| *l = 0.0);
        let n = st.n();
        let past = st.past_steps(n);
        assert_eq!(past.len(), 8);
        let (table, _) = st.table();
        let pool = table.pool_size();
        let span = 12;
        let arr: Vec<usize> = (pool - span..pool).collect();
        let mut corr = vec![0.0; span * 4];
        let mut applied = 0;
        let mut acc = vec![0.0; 4];
        for c in &past {
            while applied < c.lag {
                applied += 1;
                table.count_below(arr[span - applied], &arr[..span - applied], &mut corr);
            }
            let start = span - c.lag - c.weights.len();
            let t = c.statistic(&table, &arr[start..span - c.lag], &corr[start * 4..], &mut acc);
            let want = recorded[n - c.lag - 1];
            assert!((t - want).abs() < 1e-9 * want.max(1.0), "lag {}: {t} vs {want}", c.lag);
        }
    }
}
