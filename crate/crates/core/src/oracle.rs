//! Brute-force reference computations.
//!
//! Everything here is written as directly as possible from the definitions
//! (subset enumeration, exhaustive witness search, summation over all
//! words) and shares no code with the fast paths it checks. Only usable at
//! small sizes.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{sft_admissible, SymbolicSystem};
use crate::error::Result;
use crate::mistake::{in_mistake_ball, Coord, MistakeFunction};
use crate::recurrence::{min_return_full_shift, min_return_sft};
use crate::suspension::{tau_hat_symbolic, Roof};
use crate::thermo::{ball_measure_bernoulli, pressure_transfer, Potential};

/// Every word of length `n` over `{0, .., m-1}`, lexicographic.
pub fn all_words(m: usize, n: usize) -> Vec<Vec<u8>> {
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut w = vec![0u8; n];
            for slot in w.iter_mut().rev() {
                *slot = (code % m) as u8;
                code /= m;
            }
            w
        })
        .collect()
}

/// Admissible words of length `n`, by filtering all words.
pub fn admissible_words(system: &SymbolicSystem, n: usize) -> Vec<Vec<u8>> {
    all_words(system.alphabet_size(), n).into_iter().filter(|w| sft_admissible(w, system)).collect()
}

/// Membership in the mistake ball straight from the definition: some
/// index set `Λ ⊂ [0, n)` with `|Λ| >= n - budget` on which every
/// coordinate is within `eps`. Exponential in `n`.
pub fn in_ball_by_subsets<C: Coord>(x: &[C], y: &[C], n: usize, eps: f64, budget: usize) -> bool {
    assert!(n < 32, "subset enumeration needs n < 32");
    let needed = n.saturating_sub(budget) as u32;
    (0u32..1 << n).filter(|lambda| lambda.count_ones() >= needed).any(|lambda| {
        (0..n).filter(|i| lambda >> i & 1 == 1).all(|i| !x[i].differs(y[i], eps))
    })
}

/// `sup S_n phi(y)` over `y` within Hamming distance `budget` of `x[..n]`,
/// by enumerating every word over an `m`-letter alphabet.
pub fn sup_birkhoff_by_enumeration(x: &[u8], n: usize, budget: usize, phi: &Potential, m: usize) -> f64 {
    let Potential::Depth1(values) = phi else {
        panic!("enumeration oracle takes depth-1 potentials");
    };
    all_words(m, n)
        .into_iter()
        .filter(|y| y.iter().zip(x).filter(|(a, b)| a != b).count() <= budget)
        .map(|y| y.iter().map(|&s| values[usize::from(s)]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn witness_dfs(
    x: &[u8],
    k: usize,
    budget: usize,
    system: &SymbolicSystem,
    w: &mut Vec<u8>,
    used_a: usize,
    used_b: usize,
) -> bool {
    let n = x.len();
    let j = w.len();
    if j == n + k {
        return true;
    }
    for s in 0..system.alphabet_size() as u8 {
        if let Some(&last) = w.last() {
            if !system.allowed(last, s) {
                continue;
            }
        }
        let a = used_a + usize::from(j < n && x[j] != s);
        let b = used_b + usize::from(j >= k && x[j - k] != s);
        if a > budget || b > budget {
            continue;
        }
        w.push(s);
        let found = witness_dfs(x, k, budget, system, w, a, b);
        w.pop();
        if found {
            return true;
        }
    }
    false
}

/// Minimal return time by exhaustive depth-first search over witness words
/// `w` of length `n + k` with `w[0..n]` and `w[k..k+n]` both within
/// Hamming distance `budget` of `x`.
pub fn min_return_by_witness_search(x: &[u8], budget: usize, system: &SymbolicSystem) -> usize {
    let n = x.len();
    let bound = 2 * n + system.alphabet_size() + 2;
    (1..=bound)
        .find(|&k| witness_dfs(x, k, budget, system, &mut Vec::with_capacity(n + k), 0, 0))
        .expect("a witness exists within the search bound")
}

/// Whether some admissible word starts within `budget_y` of `y` and then
/// continues within `budget_x` of `x`, by enumerating all words.
pub fn concatenation_by_enumeration(
    system: &SymbolicSystem,
    y: &[u8],
    budget_y: usize,
    x: &[u8],
    budget_x: usize,
) -> bool {
    let hamming = |a: &[u8], b: &[u8]| a.iter().zip(b).filter(|(p, q)| p != q).count();
    admissible_words(system, y.len() + x.len())
        .iter()
        .any(|w| hamming(&w[..y.len()], y) <= budget_y && hamming(&w[y.len()..], x) <= budget_x)
}

pub fn binomial(n: usize, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernoulli measure of the Hamming ball by summing over every word.
pub fn ball_measure_by_enumeration(p: &[f64], x: &[u8], n: usize, budget: usize) -> f64 {
    ball_measure_profile(p, x, n).iter().take(budget + 1).sum()
}

/// `profile[d]` = Bernoulli mass of words at Hamming distance exactly `d`
/// from `x[..n]`.
pub fn ball_measure_profile(p: &[f64], x: &[u8], n: usize) -> Vec<f64> {
    let mut profile = vec![0.0; n + 1];
    for w in all_words(p.len(), n) {
        let d = w.iter().zip(x).filter(|(a, b)| a != b).count();
        profile[d] += w.iter().map(|&s| p[usize::from(s)]).product::<f64>();
    }
    profile
}

pub fn golden_mean_entropy() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Pressure of `t phi` on the full 2-shift for `phi = (a, b)`.
pub fn two_symbol_pressure(a: f64, b: f64, t: f64) -> f64 {
    ((t * a).exp() + (t * b).exp()).ln()
}

/// Exact `inf` of roof sums `sum_{i<k} roof(u_i)` over witnesses on the
/// full `m`-shift: `u` within `budget` of `x` and `sigma^k` of the witness
/// back within `budget` of `x`. Only `k <= n` can be optimal because the
/// roof is positive and `k = n` always admits a witness.
pub fn tau_inf_by_enumeration(x: &[u8], budget: usize, roof: &[f64], eps: f64) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for u in all_words(roof.len(), n) {
        if u.iter().zip(x).filter(|(a, b)| a != b).count() > budget {
            continue;
        }
        let mut sum = 0.0;
        for k in 1..=n {
            sum += roof[usize::from(u[k - 1])];
            if sum >= best {
                break;
            }
            let overlap = u[k..].iter().zip(x).filter(|(a, b)| a != b).count();
            if overlap <= budget {
                best = sum;
                break;
            }
        }
    }
    best - 2.0 * eps
}

/// Outcome of one brute-force equivalence suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, cases: 0, mismatches: 0, first_mismatch: None }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.mismatches += 1;
            if self.first_mismatch.is_none() {
                self.first_mismatch = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.cases > 0
    }
}

fn bits(code: usize, n: usize, out: &mut [u8]) {
    for (i, slot) in out.iter_mut().take(n).enumerate() {
        *slot = (code >> i & 1) as u8;
    }
}

/// Mistake-ball membership for every pair of binary words with `n <= 12`
/// and budgets `G <= 3`. Membership depends only on the disagreement
/// pattern, so the subset oracle is tabulated per pattern.
pub fn suite_mistake_ball() -> SuiteResult {
    let mut result = SuiteResult::new("mistake-ball-subsets");
    let (mut x, mut y) = ([0u8; 12], [0u8; 12]);
    let zeros = [0u8; 12];
    for n in 1..=12 {
        for budget in 0..=3usize {
            let g = MistakeFunction::constant(budget as u64);
            let table: Vec<bool> = (0..1usize << n)
                .map(|d| {
                    let mut pattern = [0u8; 12];
                    bits(d, n, &mut pattern);
                    in_ball_by_subsets(&zeros[..n], &pattern[..n], n, 0.0, budget)
                })
                .collect();
            for xc in 0..1usize << n {
                bits(xc, n, &mut x);
                for yc in 0..1usize << n {
                    bits(yc, n, &mut y);
                    let fast = in_mistake_ball(&x[..n], &y[..n], n, 0.0, &g).unwrap_or(false);
                    let expected = table[xc ^ yc];
                    result.check(fast == expected, || format!("n={n} G={budget} x={xc:b} y={yc:b}"));
                }
            }
        }
    }
    // metric coordinates: random points, threshold behaviour at |x - y| = eps
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d62);
    let grid = |rng: &mut ChaCha8Rng| (rng.next_u64() % 21) as f64 / 20.0;
    for _ in 0..20_000 {
        let n = 1 + (rng.next_u64() % 10) as usize;
        let budget = (rng.next_u64() % 4) as usize;
        let xs: Vec<f64> = (0..n).map(|_| grid(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| grid(&mut rng)).collect();
        let eps = [0.05, 0.1, 0.25][(rng.next_u64() % 3) as usize];
        let g = MistakeFunction::constant(budget as u64);
        let fast = in_mistake_ball(&xs, &ys, n, eps, &g).unwrap_or(false);
        result.check(fast == in_ball_by_subsets(&xs, &ys, n, eps, budget), || {
            format!("metric n={n} G={budget} eps={eps} x={xs:?} y={ys:?}")
        });
    }
    result
}

/// Exact minimal return times against the witness search, `n <= 8`,
/// `G <= 2`, on the full 2-shift and the golden-mean shift.
pub fn suite_min_return() -> Result<SuiteResult> {
    let mut result = SuiteResult::new("minimal-return-witness");
    let full = SymbolicSystem::full_shift(2)?;
    let golden = SymbolicSystem::golden_mean();
    for n in 1..=8 {
        for budget in 0..=2 {
            for x in all_words(2, n) {
                let expected = min_return_by_witness_search(&x, budget, &full);
                let a = min_return_full_shift(&x, budget)?;
                let b = min_return_sft(&x, budget, &full)?;
                result.check(a == expected && b == expected, || {
                    format!("full shift x={x:?} G={budget}: {a}/{b} vs {expected}")
                });
            }
            for x in admissible_words(&golden, n) {
                let expected = min_return_by_witness_search(&x, budget, &golden);
                let got = min_return_sft(&x, budget, &golden)?;
                result.check(got == expected, || format!("golden x={x:?} G={budget}: {got} vs {expected}"));
            }
        }
    }
    Ok(result)
}

/// Bernoulli ball measures against direct summation, `n <= 12`.
pub fn suite_ball_measure() -> Result<SuiteResult> {
    let mut result = SuiteResult::new("ball-measure-enumeration");
    let cases: [(&[f64], usize); 3] = [(&[0.5, 0.5], 12), (&[0.3, 0.7], 12), (&[0.2, 0.5, 0.3], 7)];
    for (p, max_n) in cases {
        for n in 1..=max_n {
            for x in all_words(p.len(), n) {
                let profile = ball_measure_profile(p, &x, n);
                let mut cumulative = 0.0;
                for (budget, mass) in profile.iter().enumerate() {
                    cumulative += mass;
                    let dp = ball_measure_bernoulli(p, &x, n, budget)?;
                    result.check((dp - cumulative).abs() <= 1e-12 * cumulative.max(f64::MIN_POSITIVE), || {
                        format!("p={p:?} x={x:?} G={budget}: {dp} vs {cumulative}")
                    });
                }
            }
        }
    }
    Ok(result)
}

/// Transfer-operator pressure against closed forms, to `1e-10`.
pub fn suite_pressure() -> Result<SuiteResult> {
    let mut result = SuiteResult::new("pressure-closed-forms");
    let full = SymbolicSystem::full_shift(2)?;
    let levels = [-2.0, -1.0, -0.5, 0.0, 0.3, 1.0, 2.5];
    let times = [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0];
    for &a in &levels {
        for &b in &levels {
            let phi = Potential::depth1(vec![a, b])?;
            for &t in &times {
                let got = pressure_transfer(&full, &phi, t)?.value;
                let expected = two_symbol_pressure(a, b, t);
                result.check((got - expected).abs() <= 1e-10, || format!("a={a} b={b} t={t}: {got} vs {expected}"));
            }
        }
    }
    let golden = pressure_transfer(&SymbolicSystem::golden_mean(), &Potential::zero(2), 1.0)?.value;
    result.check((golden - golden_mean_entropy()).abs() <= 1e-10, || format!("golden mean: {golden}"));
    Ok(result)
}

/// Certified `tau_hat` intervals contain the exhaustive infimum, `n <= 12`.
pub fn suite_tau_hat() -> Result<SuiteResult> {
    let mut result = SuiteResult::new("tau-hat-containment");
    let full2 = SymbolicSystem::full_shift(2)?;
    let full3 = SymbolicSystem::full_shift(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7461);
    let roofs: [(Vec<f64>, &SymbolicSystem, usize); 3] =
        [(vec![1.0, 2.0], &full2, 12), (vec![1.0, 1.0], &full2, 12), (vec![0.5, 1.0, 2.5], &full3, 6)];
    for (values, system, max_n) in &roofs {
        let roof = Roof::symbolic(values.clone())?;
        let m = values.len();
        for n in 1..=*max_n {
            let words: Vec<Vec<u8>> = if m.pow(n as u32) <= 1024 {
                all_words(m, n)
            } else {
                (0..48).map(|_| (0..n).map(|_| (rng.next_u64() % m as u64) as u8).collect()).collect()
            };
            for x in &words {
                for budget in 0..=2u64 {
                    let g = MistakeFunction::constant(budget);
                    let estimate = tau_hat_symbolic(x, n, 0.0, &g, &roof, system)?;
                    let inf = tau_inf_by_enumeration(x, budget as usize, values, 0.0);
                    result.check(estimate.lower <= inf + 1e-12 && inf <= estimate.upper + 1e-12, || {
                        format!("roof={values:?} x={x:?} G={budget}: inf {inf} outside {estimate:?}")
                    });
                }
            }
        }
    }
    Ok(result)
}

/// All equivalence suites, in a fixed order.
pub fn run_equivalence_suites() -> Result<Vec<SuiteResult>> {
    Ok(vec![suite_mistake_ball(), suite_min_return()?, suite_ball_measure()?, suite_pressure()?, suite_tau_hat()?])
}
