//! First and minimal return times to mistake dynamical balls.
//!
//! `R_n(g; x) = min { k >= 1 : sigma^k x in B_n(g; x) }` is found by a plain
//! scan over `k`, each candidate window compared with early exit once the
//! mismatch count exceeds the budget.
//!
//! `S_n(g; x) = min { k >= 1 : sigma^{-k} B ∩ B != ∅ }` asks for a witness
//! word `w` of length `n + k` whose windows `w[0..n]` and `w[k..k+n]` both
//! lie in the ball. On a full shift every overlap position where
//! `x_i != x_{i-k}` forces exactly one mismatch, charged to either window,
//! and all other positions are free, so a witness exists iff
//!
//! ```text
//! D_k = #{ i in [k, n) : x_i != x_{i-k} } <= 2 G.
//! ```
//!
//! On a general subshift of finite type the witness must also be
//! admissible, which is decided by a dynamic program over (position, last
//! symbol, mismatches charged to each window).

use std::ops::RangeInclusive;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{sft_admissible, SymbolicSystem};
use crate::error::{Error, Result};
use crate::mistake::{within_budget, Coord, MistakeFunction};

const STREAM_CHUNK: usize = 1 << 16;
const EXHAUSTIVE_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnOutcome {
    Returned(u64),
    /// No return within the search bound `k_max`.
    Censored(u64),
}

impl ReturnOutcome {
    pub fn value(&self) -> Option<u64> {
        match *self {
            ReturnOutcome::Returned(k) => Some(k),
            ReturnOutcome::Censored(_) => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, ReturnOutcome::Censored(_))
    }
}

fn check_window(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("window length n must be positive".into()));
    }
    Ok(())
}

/// `R_n(g; x, eps)` searched over `k in [1, k_max]`.
pub fn first_return<C: Coord>(
    stream: &[C],
    n: usize,
    eps: f64,
    g: &MistakeFunction,
    k_max: u64,
) -> Result<ReturnOutcome> {
    first_return_with_budget(stream, n, eps, g.budget(n, eps), k_max)
}

/// [`first_return`] with an explicit integer budget. The stream only needs
/// to be long enough to reach the returning window; running off its end
/// before a return or `k_max` is an error.
pub fn first_return_with_budget<C: Coord>(
    stream: &[C],
    n: usize,
    eps: f64,
    budget: usize,
    k_max: u64,
) -> Result<ReturnOutcome> {
    check_window(n)?;
    if stream.len() < n {
        return Err(Error::LengthShortfall { needed: n, available: stream.len() });
    }
    let center = &stream[..n];
    for k in 1..=k_max as usize {
        let end = k + n;
        if end > stream.len() {
            return Err(Error::LengthShortfall { needed: end, available: stream.len() });
        }
        if within_budget(center, &stream[k..end], eps, budget) {
            return Ok(ReturnOutcome::Returned(k as u64));
        }
    }
    Ok(ReturnOutcome::Censored(k_max))
}

/// [`first_return_with_budget`] over a lazily generated stream, holding
/// only a sliding chunk in memory. Suitable for return times far beyond
/// what fits in a materialized orbit.
pub fn first_return_streaming<C, I>(
    stream: I,
    n: usize,
    eps: f64,
    budget: usize,
    k_max: u64,
) -> Result<ReturnOutcome>
where
    C: Coord,
    I: IntoIterator<Item = C>,
{
    check_window(n)?;
    let mut source = stream.into_iter();
    let center: Vec<C> = source.by_ref().take(n).collect();
    if center.len() < n {
        return Err(Error::LengthShortfall { needed: n, available: center.len() });
    }
    // buffer holds stream positions [base, base + buffer.len())
    let mut buffer = center.clone();
    let mut base = 0usize;
    for k in 1..=k_max as usize {
        let end = k + n;
        if end > base + buffer.len() {
            buffer.drain(..k - base);
            base = k;
            buffer.extend(source.by_ref().take(STREAM_CHUNK.max(n)));
            if end > base + buffer.len() {
                return Err(Error::LengthShortfall { needed: end, available: base + buffer.len() });
            }
        }
        if within_budget(&center, &buffer[k - base..end - base], eps, budget) {
            return Ok(ReturnOutcome::Returned(k as u64));
        }
    }
    Ok(ReturnOutcome::Censored(k_max))
}

/// Overlap disagreement count `D_k`, stopping once it exceeds `cap`.
#[inline]
fn overlap_mismatches(x: &[u8], k: usize, cap: usize) -> usize {
    let mut count = 0;
    for (a, b) in x[k..].iter().zip(x) {
        if a != b {
            count += 1;
            if count > cap {
                break;
            }
        }
    }
    count
}

/// Exact `S_n(G; x)` on a full shift, `n = x.len()`: the least `k >= 1`
/// with `D_k <= 2 G`. Always at most `n`.
pub fn min_return_full_shift(x: &[u8], budget: usize) -> Result<usize> {
    let n = x.len();
    check_window(n)?;
    let cap = budget.saturating_mul(2);
    Ok((1..n).find(|&k| overlap_mismatches(x, k, cap) <= cap).unwrap_or(n))
}

/// Whether a witness of length `n + k` exists on `system`.
///
/// `best[s][a]` is the least number of window-B mismatches over admissible
/// prefixes ending in symbol `s` with `a` window-A mismatches; states with
/// either count above the budget are dropped.
fn witness_exists(x: &[u8], k: usize, budget: usize, system: &SymbolicSystem) -> bool {
    const NONE: usize = usize::MAX;
    let n = x.len();
    let m = system.alphabet_size();
    let width = budget + 1;
    let mut best = vec![NONE; m * width];
    let mut next = vec![NONE; m * width];
    let cost = |j: usize, s: u8| -> (usize, usize) {
        let a = usize::from(j < n && s != x[j]);
        let b = usize::from(j >= k && s != x[j - k]);
        (a, b)
    };
    for s in 0..m as u8 {
        let (a, b) = cost(0, s);
        if a <= budget && b <= budget {
            best[usize::from(s) * width + a] = b;
        }
    }
    for j in 1..n + k {
        next.fill(NONE);
        let mut alive = false;
        for prev in 0..m as u8 {
            let row = &best[usize::from(prev) * width..(usize::from(prev) + 1) * width];
            if row.iter().all(|&b| b == NONE) {
                continue;
            }
            for s in system.successors(prev) {
                let (ca, cb) = cost(j, s);
                for (a, &b) in row.iter().enumerate() {
                    if b == NONE {
                        continue;
                    }
                    let (na, nb) = (a + ca, b + cb);
                    if na <= budget && nb <= budget {
                        let slot = &mut next[usize::from(s) * width + na];
                        if nb < *slot {
                            *slot = nb;
                            alive = true;
                        }
                    }
                }
            }
        }
        if !alive {
            return false;
        }
        std::mem::swap(&mut best, &mut next);
    }
    best.iter().any(|&b| b != NONE)
}

/// Exact `S_n(G; x)` on a subshift of finite type, `n = x.len()`.
///
/// Searches `k = 1, 2, ...` up to `n + diameter + 1`; some closing witness
/// always exists by then because the transition graph is strongly
/// connected.
pub fn min_return_sft(x: &[u8], budget: usize, system: &SymbolicSystem) -> Result<usize> {
    let n = x.len();
    check_window(n)?;
    if !sft_admissible(x, system) {
        return Err(Error::Inadmissible);
    }
    if system.is_full_shift() {
        return min_return_full_shift(x, budget);
    }
    let bound = n + system.diameter() + 1;
    (1..=bound)
        .find(|&k| witness_exists(x, k, budget, system))
        .ok_or_else(|| Error::Unsupported(format!("no witness up to k = {bound}")))
}

/// Same as [`min_return_sft`] but always runs the dynamic program, even on
/// full shifts (used to cross-check the `D_k` reduction).
pub fn min_return_sft_dp(x: &[u8], budget: usize, system: &SymbolicSystem) -> Result<usize> {
    let n = x.len();
    check_window(n)?;
    if !sft_admissible(x, system) {
        return Err(Error::Inadmissible);
    }
    let bound = n + system.diameter() + 1;
    (1..=bound)
        .find(|&k| witness_exists(x, k, budget, system))
        .ok_or_else(|| Error::Unsupported(format!("no witness up to k = {bound}")))
}

/// Witness-based upper bound for the minimal return time on an orbit.
///
/// Every orbit point `z = f^j x` (`j <= horizon`) that lies in the ball and
/// later re-enters it after `k` steps certifies `S_n <= k`; the least such
/// `k` is returned. `Censored(horizon)` when no orbit point qualifies.
pub fn min_return_metric_upper<C: Coord>(
    orbit: &[C],
    n: usize,
    eps: f64,
    g: &MistakeFunction,
    horizon: usize,
) -> Result<ReturnOutcome> {
    min_return_upper_with_budget(orbit, n, eps, g.budget(n, eps), horizon)
}

pub fn min_return_upper_with_budget<C: Coord>(
    orbit: &[C],
    n: usize,
    eps: f64,
    budget: usize,
    horizon: usize,
) -> Result<ReturnOutcome> {
    check_window(n)?;
    let needed = horizon + n;
    if orbit.len() < needed {
        return Err(Error::LengthShortfall { needed, available: orbit.len() });
    }
    let center = &orbit[..n];
    let starts = orbit.len() - n + 1;
    let mut best: Option<usize> = None;
    let mut previous_member: Option<usize> = None;
    for i in 0..starts {
        if !within_budget(center, &orbit[i..i + n], eps, budget) {
            continue;
        }
        if let Some(j) = previous_member {
            let gap = i - j;
            if best.is_none_or(|b| gap < b) {
                best = Some(gap);
                if gap == 1 {
                    break;
                }
            }
        }
        if i > horizon {
            break;
        }
        previous_member = Some(i);
    }
    Ok(match best {
        Some(k) => ReturnOutcome::Returned(k as u64),
        None => ReturnOutcome::Censored(horizon as u64),
    })
}

/// All admissible words of length `n`, in lexicographic order.
pub fn admissible_words(system: &SymbolicSystem, n: usize) -> Vec<Vec<u8>> {
    let m = system.alphabet_size() as u8;
    let mut words: Vec<Vec<u8>> = if n == 0 { vec![Vec::new()] } else { (0..m).map(|s| vec![s]).collect() };
    for _ in 1..n {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().expect("nonempty");
                system.successors(last).map(move |s| {
                    let mut extended = w.clone();
                    extended.push(s);
                    extended
                })
            })
            .collect();
    }
    words
}

/// Number of admissible words of length `n`, saturating at `usize::MAX`.
pub fn count_admissible(system: &SymbolicSystem, n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let m = system.alphabet_size();
    let mut ending = vec![1usize; m];
    for _ in 1..n {
        ending = (0..m as u8)
            .map(|s| {
                (0..m as u8)
                    .filter(|&prev| system.allowed(prev, s))
                    .fold(0usize, |acc, prev| acc.saturating_add(ending[usize::from(prev)]))
            })
            .collect();
    }
    ending.into_iter().fold(0, usize::saturating_add)
}

/// Random admissible word: uniform first symbol, then uniform among allowed
/// successors.
pub fn random_admissible_word(system: &SymbolicSystem, n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let m = system.alphabet_size() as u64;
    let mut word = Vec::with_capacity(n);
    if n == 0 {
        return word;
    }
    word.push((rng.next_u64() % m) as u8);
    while word.len() < n {
        let last = *word.last().expect("nonempty");
        let choices: Vec<u8> = system.successors(last).collect();
        word.push(choices[(rng.next_u64() % choices.len() as u64) as usize]);
    }
    word
}

/// Whether some admissible word of length `m + n` starts inside
/// `B_m(y)` (budget `budget_y`) and continues inside `B_n(x)` (budget
/// `budget_x`): the gluing required by g-almost specification.
pub fn concatenation_feasible(
    system: &SymbolicSystem,
    y: &[u8],
    budget_y: usize,
    x: &[u8],
    budget_x: usize,
) -> bool {
    const NONE: usize = usize::MAX;
    let m = system.alphabet_size();
    let target: Vec<(u8, usize)> = y
        .iter()
        .map(|&s| (s, budget_y))
        .chain(x.iter().map(|&s| (s, budget_x)))
        .collect();
    let boundary = y.len();
    // cost[s] = least mismatches in the current segment for prefixes ending in s
    let mut cost = vec![NONE; m];
    let mut next = vec![NONE; m];
    for (j, &(want, budget)) in target.iter().enumerate() {
        next.fill(NONE);
        for s in 0..m as u8 {
            let step = usize::from(s != want);
            let incoming = if j == 0 {
                0
            } else {
                let reset = j == boundary;
                let mut least = NONE;
                for prev in 0..m as u8 {
                    let c = cost[usize::from(prev)];
                    if c != NONE && system.allowed(prev, s) {
                        least = least.min(if reset { 0 } else { c });
                    }
                }
                least
            };
            if incoming != NONE && incoming + step <= budget {
                next[usize::from(s)] = incoming + step;
            }
        }
        std::mem::swap(&mut cost, &mut next);
        if cost.iter().all(|&c| c == NONE) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecCheckMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFailure {
    pub n: usize,
    pub m: usize,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthPairStats {
    pub n: usize,
    pub m: usize,
    pub tested: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecReport {
    pub pairs_tested: usize,
    pub failures: Vec<SpecFailure>,
    pub per_length: Vec<LengthPairStats>,
    /// Least tested `N` such that every tested pair with `n, m >= N`
    /// concatenated successfully.
    pub smallest_feasible: Option<usize>,
}

/// Empirical g-almost specification check: for words `x` of length `n` and
/// `y` of length `m`, is `B_m(g; y) ∩ sigma^{-m} B_n(g; x)` nonempty?
pub fn almost_spec_check(
    system: &SymbolicSystem,
    g: &MistakeFunction,
    n_range: RangeInclusive<usize>,
    m_range: RangeInclusive<usize>,
    mode: SpecCheckMode,
) -> Result<SpecReport> {
    if n_range.is_empty() || m_range.is_empty() || *n_range.start() == 0 || *m_range.start() == 0 {
        return Err(Error::InvalidArgument("length ranges must be nonempty and start at 1 or more".into()));
    }
    let mut rng = match mode {
        SpecCheckMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        SpecCheckMode::Exhaustive => None,
    };
    let mut report = SpecReport { pairs_tested: 0, failures: Vec::new(), per_length: Vec::new(), smallest_feasible: None };
    for n in n_range.clone() {
        for m in m_range.clone() {
            let pairs: Vec<(Vec<u8>, Vec<u8>)> = match (&mode, rng.as_mut()) {
                (SpecCheckMode::Exhaustive, _) => {
                    let candidates = count_admissible(system, n).saturating_mul(count_admissible(system, m));
                    if candidates > EXHAUSTIVE_LIMIT {
                        return Err(Error::InvalidArgument(format!(
                            "exhaustive check at (n={n}, m={m}) needs {candidates} pairs, limit {EXHAUSTIVE_LIMIT}"
                        )));
                    }
                    let xs = admissible_words(system, n);
                    let ys = admissible_words(system, m);
                    xs.iter().flat_map(|x| ys.iter().map(move |y| (x.clone(), y.clone()))).collect()
                }
                (SpecCheckMode::Sampled { count, .. }, Some(rng)) => (0..*count)
                    .map(|_| (random_admissible_word(system, n, rng), random_admissible_word(system, m, rng)))
                    .collect(),
                (SpecCheckMode::Sampled { .. }, None) => unreachable!("rng exists in sampled mode"),
            };
            let (bx, by) = (g.symbolic_budget(n), g.symbolic_budget(m));
            let mut failed = 0;
            for (x, y) in &pairs {
                if !concatenation_feasible(system, y, by, x, bx) {
                    failed += 1;
                    report.failures.push(SpecFailure { n, m, x: x.clone(), y: y.clone() });
                }
            }
            report.pairs_tested += pairs.len();
            report.per_length.push(LengthPairStats { n, m, tested: pairs.len(), failed });
        }
    }
    let lengths: Vec<usize> = {
        let mut all: Vec<usize> = n_range.clone().chain(m_range.clone()).collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    report.smallest_feasible = lengths.into_iter().find(|&big_n| {
        let relevant: Vec<&LengthPairStats> =
            report.per_length.iter().filter(|s| s.n >= big_n && s.m >= big_n).collect();
        !relevant.is_empty() && relevant.iter().all(|s| s.failed == 0)
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{beta_orbit, code_orbit, sample_word, IntervalMap, MeasureSpec};
    use crate::oracle;

    #[test]
    fn fixed_point_returns_immediately() {
        let x = vec![0u8; 40];
        for n in 1..20 {
            for g in [MistakeFunction::zero(), MistakeFunction::constant(3)] {
                assert_eq!(first_return(&x, n, 0.0, &g, 10).unwrap(), ReturnOutcome::Returned(1));
            }
        }
    }

    #[test]
    fn period_two_returns_at_two() {
        let x: Vec<u8> = (0..60).map(|i| (i % 2) as u8).collect();
        for n in 1..30 {
            assert_eq!(first_return(&x, n, 0.0, &MistakeFunction::zero(), 20).unwrap(), ReturnOutcome::Returned(2));
        }
    }

    #[test]
    fn first_return_matches_naive_window_scan() {
        let mu = MeasureSpec::uniform(2);
        for seed in 0..200 {
            let x = sample_word(&mu, 20_000, seed).unwrap();
            let naive = (1..=10_000).find(|&k| x[k..k + 10] == x[..10]).map(|k| k as u64);
            let fast = first_return(&x, 10, 0.0, &MistakeFunction::zero(), 10_000).unwrap();
            assert_eq!(fast.value(), naive);
        }
    }

    #[test]
    fn streaming_agrees_with_slices() {
        let mu = MeasureSpec::bernoulli(vec![0.3, 0.7]).unwrap();
        for seed in 0..50 {
            let x = sample_word(&mu, 400_000, seed).unwrap();
            for (n, budget) in [(12, 0), (16, 1), (20, 2)] {
                let a = first_return_with_budget(&x, n, 0.0, budget, 300_000);
                let b = first_return_streaming(mu.stream(seed).unwrap(), n, 0.0, budget, 300_000);
                assert_eq!(a, b, "seed {seed} n {n}");
            }
        }
    }

    #[test]
    fn censoring_and_shortfall() {
        let x: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let mut y = x.clone();
        y[0] = 1;
        // y = 1,1,0,1,0,... never returns to its first window "11"
        assert_eq!(first_return(&y, 2, 0.0, &MistakeFunction::zero(), 5).unwrap(), ReturnOutcome::Censored(5));
        assert!(matches!(
            first_return(&y, 2, 0.0, &MistakeFunction::zero(), 50),
            Err(Error::LengthShortfall { .. })
        ));
        assert!(first_return_streaming(y.clone(), 2, 0.0, 0, 50).is_err());
        assert!(first_return(&y, 0, 0.0, &MistakeFunction::zero(), 5).is_err());
    }

    #[test]
    fn metric_first_return() {
        let map = IntervalMap::beta(1.618_033_988_7).unwrap();
        let orbit = beta_orbit(&map, 0.123_456, 200_000).unwrap();
        let r = first_return(&orbit, 5, 0.05, &MistakeFunction::zero(), 100_000).unwrap();
        let k = r.value().unwrap() as usize;
        assert!((0..5).all(|i| (orbit[i] - orbit[k + i]).abs() < 0.05));
        assert!((1..k).all(|j| (0..5).any(|i| (orbit[i] - orbit[j + i]).abs() >= 0.05)));
    }

    #[test]
    fn full_shift_minimal_return_examples() {
        assert_eq!(min_return_full_shift(&[0; 9], 0).unwrap(), 1);
        let alt: Vec<u8> = (0..9).map(|i| (i % 2) as u8).collect();
        assert_eq!(min_return_full_shift(&alt, 0).unwrap(), 2);
        assert_eq!(min_return_full_shift(&[0, 1, 1], 0).unwrap(), 3);
        assert_eq!(min_return_full_shift(&[0, 1, 1], 1).unwrap(), 1);
    }

    #[test]
    fn full_shift_matches_witness_search() {
        let full = SymbolicSystem::full_shift(2).unwrap();
        for n in 1..=8 {
            for x in oracle::all_words(2, n) {
                for budget in 0..=2 {
                    let expected = oracle::min_return_by_witness_search(&x, budget, &full);
                    assert_eq!(min_return_full_shift(&x, budget).unwrap(), expected, "{x:?} G={budget}");
                    assert_eq!(min_return_sft_dp(&x, budget, &full).unwrap(), expected);
                }
            }
        }
    }

    #[test]
    fn golden_mean_matches_witness_search() {
        let golden = SymbolicSystem::golden_mean();
        for n in 1..=8 {
            for x in admissible_words(&golden, n) {
                for budget in 0..=2 {
                    let expected = oracle::min_return_by_witness_search(&x, budget, &golden);
                    assert_eq!(min_return_sft(&x, budget, &golden).unwrap(), expected, "{x:?} G={budget}");
                }
            }
        }
    }

    #[test]
    fn dp_agrees_with_reduction_on_random_inputs() {
        let full3 = SymbolicSystem::full_shift(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10_000 {
            let n = 1 + (rng.next_u64() % 16) as usize;
            let budget = (rng.next_u64() % 4) as usize;
            let x: Vec<u8> = (0..n).map(|_| (rng.next_u64() % 3) as u8).collect();
            assert_eq!(min_return_full_shift(&x, budget).unwrap(), min_return_sft_dp(&x, budget, &full3).unwrap());
        }
    }

    #[test]
    fn sft_rejects_inadmissible_center() {
        assert_eq!(min_return_sft(&[0, 1, 1], 0, &SymbolicSystem::golden_mean()), Err(Error::Inadmissible));
    }

    #[test]
    fn large_budget_returns_at_one() {
        let golden = SymbolicSystem::golden_mean();
        for x in admissible_words(&golden, 6) {
            assert_eq!(min_return_sft(&x, 6, &golden).unwrap(), 1);
        }
    }

    #[test]
    fn minimal_return_bounded_by_first_return() {
        let mu = MeasureSpec::uniform(2);
        for seed in 0..100 {
            let x = sample_word(&mu, 50_000, seed).unwrap();
            for budget in 0..3 {
                let s = min_return_full_shift(&x[..12], budget).unwrap() as u64;
                let r = first_return_with_budget(&x, 12, 0.0, budget, 45_000).unwrap().value().unwrap();
                assert!(s <= r && s <= 12);
            }
        }
    }

    #[test]
    fn orbit_witness_bounds() {
        let mu = MeasureSpec::uniform(2);
        for seed in 0..30 {
            let x = sample_word(&mu, 4_000, seed).unwrap();
            let r = first_return_with_budget(&x, 8, 0.0, 1, 3_000).unwrap().value().unwrap();
            let upper = min_return_upper_with_budget(&x, 8, 0.0, 1, 3_000).unwrap().value().unwrap();
            assert!(upper <= r);
            assert!(upper as usize >= min_return_full_shift(&x[..8], 1).unwrap());
        }
        let orbit = beta_orbit(&IntervalMap::beta(2.5).unwrap(), 0.3, 100).unwrap();
        assert_eq!(
            min_return_metric_upper(&orbit, 10, 1.0, &MistakeFunction::zero(), 50).unwrap(),
            ReturnOutcome::Returned(1)
        );
        assert!(min_return_upper_with_budget(&orbit, 10, 0.1, 0, 95).is_err());
    }

    #[test]
    fn doubling_coding_cross_check() {
        // the witness bound on the coded doubling orbit dominates the exact
        // symbolic minimal return of the coding
        for i in 0..200 {
            let x0 = (i as f64 + 0.5) / 200.0;
            let orbit = beta_orbit(&IntervalMap::Doubling, x0, 50).unwrap();
            let code = code_orbit(&IntervalMap::Doubling, &orbit);
            for budget in 0..2 {
                let exact = min_return_full_shift(&code[..6], budget).unwrap() as u64;
                if let Some(upper) = min_return_upper_with_budget(&code, 6, 0.0, budget, 40).unwrap().value() {
                    assert!(upper >= exact);
                }
            }
        }
    }

    #[test]
    fn concatenation_matches_enumeration() {
        let systems = [
            SymbolicSystem::golden_mean(),
            SymbolicSystem::new(&[vec![0, 1], vec![1, 0]]).unwrap(),
            SymbolicSystem::new(&[vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap(),
        ];
        for system in &systems {
            for n in 1..=3 {
                for m in 1..=3 {
                    for x in admissible_words(system, n) {
                        for y in admissible_words(system, m) {
                            for (by, bx) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                                assert_eq!(
                                    concatenation_feasible(system, &y, by, &x, bx),
                                    oracle::concatenation_by_enumeration(system, &y, by, &x, bx)
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn almost_specification_examples() {
        let full = SymbolicSystem::full_shift(2).unwrap();
        let report = almost_spec_check(&full, &MistakeFunction::zero(), 1..=6, 1..=6, SpecCheckMode::Exhaustive).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.smallest_feasible, Some(1));

        let golden = SymbolicSystem::golden_mean();
        let report = almost_spec_check(&golden, &MistakeFunction::zero(), 1..=6, 1..=6, SpecCheckMode::Exhaustive).unwrap();
        // y ending in 1 followed by x starting in 1 cannot be glued exactly
        assert!(!report.failures.is_empty());
        assert!(report.failures.iter().all(|f| f.y.last() == Some(&1) && f.x.first() == Some(&1)));
        let with_mistake =
            almost_spec_check(&golden, &MistakeFunction::constant(1), 1..=6, 1..=6, SpecCheckMode::Exhaustive).unwrap();
        assert!(with_mistake.failures.is_empty());

        let cycle = SymbolicSystem::new(&[vec![0, 1], vec![1, 0]]).unwrap();
        let report = almost_spec_check(&cycle, &MistakeFunction::zero(), 1..=6, 1..=6, SpecCheckMode::Exhaustive).unwrap();
        assert_eq!(report.smallest_feasible, None);
        for stats in &report.per_length {
            // of the four (y, x) pairs exactly the two with y_last == x_first fail
            assert_eq!((stats.tested, stats.failed), (4, 2));
        }
        assert!(report.failures.iter().all(|f| f.y.last() == f.x.first()));

        let sampled = almost_spec_check(
            &golden,
            &MistakeFunction::constant(1),
            4..=12,
            4..=12,
            SpecCheckMode::Sampled { count: 50, seed: 5 },
        )
        .unwrap();
        assert_eq!(sampled.pairs_tested, 81 * 50);
        assert!(sampled.failures.is_empty());
        assert!(almost_spec_check(&full, &MistakeFunction::zero(), 1..=30, 1..=30, SpecCheckMode::Exhaustive).is_err());
    }
}
