//! Sample-based rate estimators built on return times.
//!
//! Each estimator evaluates one independent cell per (sample, n, eps),
//! in parallel, and sorts the records before aggregating them, so the
//! output does not depend on the worker count.

use rayon::prelude::*;

use crate::dynamics::{lebesgue_point, IntervalMap, MeasureSpec, SymbolicSystem};
use crate::error::{Error, Result};
use crate::mistake::{sup_birkhoff_with_budget, MistakeFunction};
use crate::recurrence::{
    first_return_streaming, first_return_with_budget, min_return_sft, ReturnOutcome,
};
use crate::thermo::{log_ball_measure_bernoulli, Potential};

/// Search horizon for orbit-witness minimal returns on interval maps.
pub const INTERVAL_HORIZON: usize = 1 << 18;

const INITIAL_STREAM: usize = 1 << 14;

/// Seed of sample `index` under `master`: one SplitMix64 step applied to
/// the pair.
pub fn sample_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Where sample points come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Symbolic { system: SymbolicSystem, measure: MeasureSpec },
    /// Lebesgue-random starting points of a β-map; the orbit is followed
    /// in floating point.
    Interval { map: IntervalMap },
}

impl Source {
    pub fn symbolic(system: SymbolicSystem, measure: MeasureSpec) -> Result<Self> {
        measure.validate_against(&system)?;
        Ok(Source::Symbolic { system, measure })
    }

    /// Rejects maps whose floating-point orbits collapse onto 0 (integer
    /// slopes shift out one bit per step).
    pub fn interval(map: IntervalMap) -> Result<Self> {
        let slope = map.slope();
        if slope.fract() == 0.0 {
            return Err(Error::Unsupported(format!(
                "integer slope {slope}: floating-point orbits reach 0 after ~53 steps; use the symbolic full shift"
            )));
        }
        Ok(Source::Interval { map })
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Source::Symbolic { .. })
    }
}

/// One (sample, n, eps) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnRecord {
    pub sample_index: usize,
    pub seed: u64,
    pub n: usize,
    pub epsilon: f64,
    pub r_n: Option<u64>,
    pub s_n: Option<u64>,
    pub rate: Option<f64>,
    pub censored: bool,
}

impl ReturnRecord {
    pub fn empty(sample_index: usize, seed: u64, n: usize, epsilon: f64) -> Self {
        ReturnRecord { sample_index, seed, n, epsilon, r_n: None, s_n: None, rate: None, censored: false }
    }

    fn key(&self) -> (usize, u64, usize) {
        (self.n, self.epsilon.to_bits(), self.sample_index)
    }
}

/// Aggregate over samples for one (n, eps).
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub epsilon: f64,
    pub g_spec: String,
    pub sample_count: usize,
    pub censored_count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Median over samples of the largest rate on the upper half of the
    /// n-grid (same eps).
    pub limsup_proxy: Option<f64>,
    pub liminf_proxy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Sorted by (n, eps, sample_index).
    pub records: Vec<ReturnRecord>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) })
}

impl RateTable {
    pub fn from_records(mut records: Vec<ReturnRecord>, g_spec: &str) -> Self {
        records.sort_by(|a, b| a.key().cmp(&b.key()).then(a.epsilon.total_cmp(&b.epsilon)));
        let mut n_grid: Vec<usize> = records.iter().map(|r| r.n).collect();
        n_grid.dedup();
        let upper: &[usize] = &n_grid[n_grid.len() / 2..];
        let mut rows = Vec::new();
        let mut start = 0;
        while start < records.len() {
            let (n, eps) = (records[start].n, records[start].epsilon);
            let end = start + records[start..].iter().take_while(|r| r.n == n && r.epsilon == eps).count();
            let cell = &records[start..end];
            let rates: Vec<f64> = cell.iter().filter_map(|r| r.rate).collect();
            let (limsup_proxy, liminf_proxy) = Self::proxies(&records, upper, eps);
            rows.push(RateRow {
                n,
                epsilon: eps,
                g_spec: g_spec.to_string(),
                sample_count: cell.len(),
                censored_count: cell.iter().filter(|r| r.censored).count(),
                mean: (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64),
                median: median(&rates),
                limsup_proxy,
                liminf_proxy,
            });
            start = end;
        }
        RateTable { rows, records }
    }

    fn proxies(records: &[ReturnRecord], upper: &[usize], eps: f64) -> (Option<f64>, Option<f64>) {
        let mut per_sample: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
        for r in records.iter().filter(|r| r.epsilon == eps && upper.contains(&r.n)) {
            if let Some(rate) = r.rate {
                let entry = per_sample.entry(r.sample_index).or_insert((f64::NEG_INFINITY, f64::INFINITY));
                entry.0 = entry.0.max(rate);
                entry.1 = entry.1.min(rate);
            }
        }
        let highs: Vec<f64> = per_sample.values().map(|v| v.0).collect();
        let lows: Vec<f64> = per_sample.values().map(|v| v.1).collect();
        (median(&highs), median(&lows))
    }

    pub fn row(&self, n: usize, epsilon: f64) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.n == n && r.epsilon == epsilon)
    }

    pub fn censoring_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.censored).count() as f64 / self.records.len() as f64
    }
}

pub(crate) fn check_grids(n_grid: &[usize], eps_grid: &[f64], samples: usize) -> Result<()> {
    if n_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidArgument("n and eps grids must be nonempty".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n grid must be positive and strictly increasing".into()));
    }
    if eps_grid.iter().any(|e| !e.is_finite() || *e < 0.0) || eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("eps grid must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

fn cells(samples: usize, n_grid: &[usize], eps_grid: &[f64]) -> Vec<(usize, usize, f64)> {
    (0..samples)
        .flat_map(|s| n_grid.iter().flat_map(move |&n| eps_grid.iter().map(move |&e| (s, n, e))))
        .collect()
}

fn run_cells<F>(samples: usize, master_seed: u64, n_grid: &[usize], eps_grid: &[f64], g_spec: &str, cell: F) -> Result<RateTable>
where
    F: Fn(ReturnRecord) -> Result<ReturnRecord> + Sync,
{
    check_grids(n_grid, eps_grid, samples)?;
    let records = cells(samples, n_grid, eps_grid)
        .into_par_iter()
        .map(|(index, n, eps)| cell(ReturnRecord::empty(index, sample_seed(master_seed, index), n, eps)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::from_records(records, g_spec))
}

/// First return of the sample stream for `seed`, generated lazily.
pub fn sample_first_return(source: &Source, seed: u64, n: usize, eps: f64, budget: usize, k_max: u64) -> Result<ReturnOutcome> {
    match source {
        Source::Symbolic { measure, .. } => first_return_streaming(measure.stream(seed)?, n, 0.0, budget, k_max),
        Source::Interval { map } => first_return_streaming(map.orbit(lebesgue_point(seed))?, n, eps, budget, k_max),
    }
}

/// Per cell: `rate = (1/n) log R_n(g; x, eps)`.
#[allow(clippy::too_many_arguments)]
pub fn entropy_via_return(
    source: &Source,
    g: &MistakeFunction,
    n_grid: &[usize],
    eps_grid: &[f64],
    samples: usize,
    master_seed: u64,
    k_max: u64,
) -> Result<RateTable> {
    run_cells(samples, master_seed, n_grid, eps_grid, &g.to_string(), |mut rec| {
        let outcome = sample_first_return(source, rec.seed, rec.n, rec.epsilon, g.budget(rec.n, rec.epsilon), k_max)?;
        rec.r_n = outcome.value();
        rec.censored = outcome.is_censored();
        rec.rate = outcome.value().map(|r| (r as f64).ln() / rec.n as f64);
        Ok(rec)
    })
}

/// Per cell: `log R_n / (-log mu(B_n(g; x)))` for a Bernoulli measure on
/// a full shift, comparing return times with exact ball measures.
pub fn kac_normalized_rates(
    source: &Source,
    g: &MistakeFunction,
    n_grid: &[usize],
    samples: usize,
    master_seed: u64,
    k_max: u64,
) -> Result<RateTable> {
    let p = match source {
        Source::Symbolic { system, measure: MeasureSpec::Bernoulli { p } } if system.is_full_shift() => p.clone(),
        _ => return Err(Error::Unsupported("ball measures are exact only for Bernoulli full shifts".into())),
    };
    run_cells(samples, master_seed, n_grid, &[0.0], &g.to_string(), |mut rec| {
        let budget = g.symbolic_budget(rec.n);
        let outcome = sample_first_return(source, rec.seed, rec.n, 0.0, budget, k_max)?;
        rec.r_n = outcome.value();
        rec.censored = outcome.is_censored();
        if let Some(r) = outcome.value() {
            let Source::Symbolic { measure, .. } = source else { unreachable!() };
            let x: Vec<u8> = measure.stream(rec.seed)?.take(rec.n).collect();
            let log_ball = log_ball_measure_bernoulli(&p, &x, rec.n, budget)?;
            rec.rate = Some(if log_ball < 0.0 { (r as f64).ln() / -log_ball } else { f64::NAN });
        }
        Ok(rec)
    })
}

/// Per cell: `S_n(g; x) / n` on a symbolic source.
pub fn minreturn_linear_rate(
    source: &Source,
    g: &MistakeFunction,
    n_grid: &[usize],
    samples: usize,
    master_seed: u64,
) -> Result<RateTable> {
    let Source::Symbolic { system, measure } = source else {
        return Err(Error::Unsupported("minimal return times are exact only on symbolic systems".into()));
    };
    run_cells(samples, master_seed, n_grid, &[0.0], &g.to_string(), |mut rec| {
        let x: Vec<u8> = measure.stream(rec.seed)?.take(rec.n).collect();
        let s = min_return_sft(&x, g.symbolic_budget(rec.n), system)?;
        rec.s_n = Some(s as u64);
        rec.rate = Some(s as f64 / rec.n as f64);
        Ok(rec)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    First,
    Minimal,
}

/// `log sum_{j=0}^{T} exp(S_n phi(sigma^j x))` from prefix sums.
fn log_weighted_sum(x: &[u8], phi: &Potential, n: usize, last: usize) -> Result<f64> {
    let needed = last + n + phi.lookahead();
    if x.len() < needed {
        return Err(Error::LengthShortfall { needed, available: x.len() });
    }
    let mut prefix = Vec::with_capacity(last + n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for i in 0..last + n {
        acc += phi.value(x[i], x.get(i + 1).copied().unwrap_or(0));
        prefix.push(acc);
    }
    let sums: Vec<f64> = (0..=last).map(|j| prefix[j + n] - prefix[j]).collect();
    let top = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + sums.iter().map(|s| (s - top).exp()).sum::<f64>().ln())
}

/// `(1/n) log sum_{j=0}^{T} exp(S_n phi(sigma^j x))` with `T` the first or
/// minimal return time of `x` under `g`. `x` must extend `n + lookahead`
/// symbols past the return.
pub fn weighted_return_rate(
    x: &[u8],
    phi: &Potential,
    n: usize,
    g: &MistakeFunction,
    k_max: u64,
    which: ReturnKind,
    system: &SymbolicSystem,
) -> Result<f64> {
    phi.check_against(system)?;
    let t = return_time(x, n, g.symbolic_budget(n), k_max, which, system)?;
    Ok(log_weighted_sum(x, phi, n, t)? / n as f64)
}

fn return_time(x: &[u8], n: usize, budget: usize, k_max: u64, which: ReturnKind, system: &SymbolicSystem) -> Result<usize> {
    match which {
        ReturnKind::First => match first_return_with_budget(x, n, 0.0, budget, k_max)? {
            ReturnOutcome::Returned(k) => Ok(k as usize),
            ReturnOutcome::Censored(k) => Err(Error::Censored(k)),
        },
        ReturnKind::Minimal => {
            if x.len() < n {
                return Err(Error::LengthShortfall { needed: n, available: x.len() });
            }
            min_return_sft(&x[..n], budget, system)
        }
    }
}

/// Materializes the sample stream far enough to cover the first return
/// (searched up to `k_max`) plus `extra` symbols beyond its window.
fn stream_past_first_return(
    measure: &MeasureSpec,
    seed: u64,
    n: usize,
    budget: usize,
    k_max: u64,
    extra: usize,
) -> Result<(Vec<u8>, ReturnOutcome)> {
    let mut stream = measure.stream(seed)?;
    let cap = n + extra + k_max as usize;
    let mut x: Vec<u8> = stream.by_ref().take((n + extra + INITIAL_STREAM).min(cap)).collect();
    loop {
        let reach = ((x.len() - n - extra) as u64).min(k_max);
        let outcome = first_return_with_budget(&x, n, 0.0, budget, reach)?;
        if !outcome.is_censored() || reach == k_max {
            return Ok((x, outcome));
        }
        let grow = x.len().min(cap - x.len());
        x.extend(stream.by_ref().take(grow));
    }
}

/// Weighted return rates over samples of a symbolic source.
#[allow(clippy::too_many_arguments)]
pub fn weighted_rate_table(
    source: &Source,
    phi: &Potential,
    g: &MistakeFunction,
    n_grid: &[usize],
    samples: usize,
    master_seed: u64,
    k_max: u64,
    which: ReturnKind,
) -> Result<RateTable> {
    let Source::Symbolic { system, measure } = source else {
        return Err(Error::Unsupported("weighted rates need a symbolic source".into()));
    };
    phi.check_against(system)?;
    run_cells(samples, master_seed, n_grid, &[0.0], &g.to_string(), |mut rec| {
        let n = rec.n;
        let budget = g.symbolic_budget(n);
        let extra = n + phi.lookahead();
        let (x, first) = stream_past_first_return(measure, rec.seed, n, budget, k_max, extra)?;
        rec.r_n = first.value();
        let s = min_return_sft(&x[..n], budget, system)?;
        rec.s_n = Some(s as u64);
        let t = match which {
            ReturnKind::First => match first {
                ReturnOutcome::Returned(k) => k as usize,
                ReturnOutcome::Censored(_) => {
                    rec.censored = true;
                    return Ok(rec);
                }
            },
            ReturnKind::Minimal => s,
        };
        rec.rate = Some(log_weighted_sum(&x, phi, n, t)? / n as f64);
        Ok(rec)
    })
}

/// `(1/n) [sup_{B_n(g; x)} S_n phi + log R_n(g; x)]` for a depth-1
/// potential on a full shift.
pub fn pressure_via_recurrence(x: &[u8], phi: &Potential, n: usize, g: &MistakeFunction, k_max: u64) -> Result<f64> {
    let budget = g.symbolic_budget(n);
    let r = match first_return_with_budget(x, n, 0.0, budget, k_max)? {
        ReturnOutcome::Returned(k) => k,
        ReturnOutcome::Censored(k) => return Err(Error::Censored(k)),
    };
    Ok((sup_birkhoff_with_budget(x, n, budget, phi)? + (r as f64).ln()) / n as f64)
}

/// [`pressure_via_recurrence`] over samples of a symbolic full-shift
/// source.
pub fn pressure_rate_table(
    source: &Source,
    phi: &Potential,
    g: &MistakeFunction,
    n_grid: &[usize],
    samples: usize,
    master_seed: u64,
    k_max: u64,
) -> Result<RateTable> {
    let Source::Symbolic { system, measure } = source else {
        return Err(Error::Unsupported("pressure via recurrence needs a symbolic source".into()));
    };
    if !system.is_full_shift() {
        return Err(Error::Unsupported("ball suprema are exact only on full shifts".into()));
    }
    phi.check_against(system)?;
    run_cells(samples, master_seed, n_grid, &[0.0], &g.to_string(), |mut rec| {
        let n = rec.n;
        let budget = g.symbolic_budget(n);
        let outcome = sample_first_return(source, rec.seed, n, 0.0, budget, k_max)?;
        rec.r_n = outcome.value();
        rec.censored = outcome.is_censored();
        if let Some(r) = outcome.value() {
            let x: Vec<u8> = measure.stream(rec.seed)?.take(n).collect();
            rec.rate = Some((sup_birkhoff_with_budget(&x, n, budget, phi)? + (r as f64).ln()) / n as f64);
        }
        Ok(rec)
    })
}
