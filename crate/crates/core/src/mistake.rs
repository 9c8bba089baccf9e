//! Mistake functions and mistake dynamical balls.
//!
//! `y` belongs to `B_n(g; x, eps)` when there is an index set `L` of at
//! least `n - g(n, eps)` positions in `[0, n)` on which `d(f^i x, f^i y) <
//! eps`. Such an `L` exists exactly when the set of mismatched positions has
//! at most `g(n, eps)` elements, so membership is a mismatch-count threshold
//! and the family of index sets is never materialized.

use std::fmt;

use crate::error::{Error, Result};
use crate::thermo::Potential;

/// Parametric mistake-function families. Each evaluates to a nonnegative
/// integer budget, nondecreasing in `n`, with `g(n) / n -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MistakeFamily {
    Zero,
    Constant(u64),
    /// `floor(scale * n^exponent)` with `exponent` in (0, 1).
    Power { scale: f64, exponent: f64 },
    /// `floor(scale * ln n)`.
    Logarithmic { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MistakeFunction {
    family: MistakeFamily,
    epsilon_cap: f64,
}

impl MistakeFunction {
    pub fn new(family: MistakeFamily, epsilon_cap: f64) -> Result<Self> {
        if !(epsilon_cap.is_finite() && epsilon_cap > 0.0) {
            return Err(Error::InvalidMistake(format!("epsilon cap must be positive, got {epsilon_cap}")));
        }
        match family {
            MistakeFamily::Zero | MistakeFamily::Constant(_) => {}
            MistakeFamily::Power { scale, exponent } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::InvalidMistake(format!("power scale must be > 0, got {scale}")));
                }
                if !(exponent > 0.0 && exponent < 1.0) {
                    return Err(Error::InvalidMistake(format!(
                        "θ must lie in (0,1), got {exponent}"
                    )));
                }
            }
            MistakeFamily::Logarithmic { scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::InvalidMistake(format!(
                        "logarithmic scale must be > 0, got {scale}"
                    )));
                }
            }
        }
        Ok(MistakeFunction { family, epsilon_cap })
    }

    pub fn zero() -> Self {
        MistakeFunction { family: MistakeFamily::Zero, epsilon_cap: 1.0 }
    }

    pub fn constant(c: u64) -> Self {
        MistakeFunction { family: MistakeFamily::Constant(c), epsilon_cap: 1.0 }
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self> {
        Self::new(MistakeFamily::Power { scale, exponent }, 1.0)
    }

    pub fn logarithmic(scale: f64) -> Result<Self> {
        Self::new(MistakeFamily::Logarithmic { scale }, 1.0)
    }

    pub fn family(&self) -> MistakeFamily {
        self.family
    }

    pub fn epsilon_cap(&self) -> f64 {
        self.epsilon_cap
    }

    /// `g(n, eps)`, floored to an integer.
    pub fn budget(&self, n: usize, eps: f64) -> usize {
        // g(n, eps) = g(n, eps0) for eps > eps0; no family here depends on
        // eps below the cap either.
        let _eps = eps.min(self.epsilon_cap);
        let n = n.max(1) as f64;
        let raw = match self.family {
            MistakeFamily::Zero => return 0,
            MistakeFamily::Constant(c) => return c as usize,
            MistakeFamily::Power { scale, exponent } => scale * n.powf(exponent),
            MistakeFamily::Logarithmic { scale } => scale * n.ln(),
        };
        // absorb powf/ln rounding just below an exact integer
        (raw + 1e-9).floor().max(0.0) as usize
    }

    /// Budget for symbolic (partition) balls, where the radius plays no role.
    pub fn symbolic_budget(&self, n: usize) -> usize {
        self.budget(n, self.epsilon_cap)
    }
}

impl fmt::Display for MistakeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            MistakeFamily::Zero => write!(f, "zero"),
            MistakeFamily::Constant(c) => write!(f, "constant({c})"),
            MistakeFamily::Power { scale, exponent } => write!(f, "power({scale},{exponent})"),
            MistakeFamily::Logarithmic { scale } => write!(f, "logarithmic({scale})"),
        }
    }
}

pub fn mistake_budget(g: &MistakeFunction, n: usize, eps: f64) -> usize {
    g.budget(n, eps)
}

/// A coordinate of an orbit: a symbol (compared by equality, the partition
/// metric) or a point of `[0, 1)` (compared by `|x - y| < eps`).
pub trait Coord: Copy + Send + Sync + 'static {
    /// True when the two coordinates are NOT eps-close. Equality at
    /// distance exactly `eps` counts as a mismatch.
    fn differs(self, other: Self, eps: f64) -> bool;
}

impl Coord for u8 {
    #[inline(always)]
    fn differs(self, other: Self, _eps: f64) -> bool {
        self != other
    }
}

impl Coord for f64 {
    #[inline(always)]
    fn differs(self, other: Self, eps: f64) -> bool {
        // NaN compares as a mismatch
        !((self - other).abs() < eps)
    }
}

fn check_lengths<C>(x: &[C], y: &[C], n: usize) -> Result<()> {
    let available = x.len().min(y.len());
    if available < n {
        return Err(Error::LengthShortfall { needed: n, available });
    }
    Ok(())
}

/// Number of positions `i < n` at which `x` and `y` are not eps-close.
pub fn mismatch_count<C: Coord>(x: &[C], y: &[C], n: usize, eps: f64) -> Result<usize> {
    check_lengths(x, y, n)?;
    Ok(x[..n].iter().zip(&y[..n]).filter(|(a, b)| a.differs(**b, eps)).count())
}

/// `mismatch_count(x, y, n, eps) <= budget`, stopping at the first excess
/// mismatch. Callers guarantee both slices have length `>= n`.
#[inline]
pub fn within_budget<C: Coord>(x: &[C], y: &[C], eps: f64, budget: usize) -> bool {
    let mut remaining = budget;
    for (a, b) in x.iter().zip(y) {
        if a.differs(*b, eps) {
            if remaining == 0 {
                return false;
            }
            remaining -= 1;
        }
    }
    true
}

/// `y in B_n(g; x, eps)`.
pub fn in_mistake_ball<C: Coord>(
    x: &[C],
    y: &[C],
    n: usize,
    eps: f64,
    g: &MistakeFunction,
) -> Result<bool> {
    check_lengths(x, y, n)?;
    Ok(within_budget(&x[..n], &y[..n], eps, g.budget(n, eps)))
}

/// Exact `sup { S_n phi(y) : y in B_n(g; x) }` on a full shift for a
/// depth-1 potential.
pub fn sup_birkhoff_over_ball(x: &[u8], n: usize, g: &MistakeFunction, phi: &Potential) -> Result<f64> {
    sup_birkhoff_with_budget(x, n, g.symbolic_budget(n), phi)
}

/// Same as [`sup_birkhoff_over_ball`] for an explicit integer budget: the
/// Birkhoff sum of `x` plus the `budget` largest gains `max phi - phi(x_i)`.
pub fn sup_birkhoff_with_budget(x: &[u8], n: usize, budget: usize, phi: &Potential) -> Result<f64> {
    let Potential::Depth1(values) = phi else {
        return Err(Error::Unsupported("ball suprema are implemented for depth-1 potentials only".into()));
    };
    if x.len() < n {
        return Err(Error::LengthShortfall { needed: n, available: x.len() });
    }
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut base = 0.0;
    let mut gains = Vec::with_capacity(n);
    for &s in &x[..n] {
        let v = *values
            .get(usize::from(s))
            .ok_or_else(|| Error::InvalidWord(format!("symbol {s} has no potential value")))?;
        base += v;
        gains.push(best - v);
    }
    if budget == 0 {
        return Ok(base);
    }
    gains.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(base + gains.iter().take(budget).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn budgets() {
        assert_eq!(MistakeFunction::zero().budget(50, 0.1), 0);
        assert_eq!(MistakeFunction::constant(3).budget(50, 0.1), 3);
        assert_eq!(MistakeFunction::power(1.0, 0.5).unwrap().budget(100, 0.1), 10);
        assert_eq!(MistakeFunction::power(1.0, 0.5).unwrap().budget(10_000, 0.1), 100);
        assert_eq!(MistakeFunction::logarithmic(1.0).unwrap().budget(20, 0.1), 2);
        assert_eq!(MistakeFunction::logarithmic(1.0).unwrap().budget(1, 0.1), 0);
    }

    #[test]
    fn family_validation() {
        let err = MistakeFunction::power(1.0, 1.5).unwrap_err();
        assert!(err.to_string().contains("θ must lie in (0,1)"));
        assert!(MistakeFunction::power(0.0, 0.5).is_err());
        assert!(MistakeFunction::logarithmic(-1.0).is_err());
        assert!(MistakeFunction::new(MistakeFamily::Zero, 0.0).is_err());
    }

    #[test]
    fn epsilon_cap_applies() {
        let g = MistakeFunction::new(MistakeFamily::Power { scale: 2.0, exponent: 0.5 }, 0.1).unwrap();
        for n in 1..200 {
            assert_eq!(g.budget(n, 0.5), g.budget(n, 0.1));
        }
    }

    #[test]
    fn sublinear_along_powers_of_two() {
        let families = [
            (MistakeFunction::constant(2), 0),
            (MistakeFunction::power(1.0, 0.5).unwrap(), 2),
            (MistakeFunction::power(3.0, 0.8).unwrap(), 4),
            (MistakeFunction::logarithmic(1.0).unwrap(), 3),
        ];
        for (g, k0) in families {
            let ratios: Vec<f64> = (k0..40)
                .map(|k| {
                    let n = 1usize << k;
                    g.budget(n, 0.1) as f64 / n as f64
                })
                .collect();
            for pair in ratios.windows(2) {
                assert!(pair[1] <= pair[0], "{g}: {pair:?}");
            }
            assert!(ratios[ratios.len() - 1] < 0.01 * ratios[0], "{g}");
        }
    }

    #[test]
    fn mismatch_counts() {
        let x = [0u8, 0, 0, 0];
        let y = [0u8, 1, 0, 1];
        assert_eq!(mismatch_count(&x, &x, 4, 0.0).unwrap(), 0);
        assert_eq!(mismatch_count(&x, &y, 4, 0.0).unwrap(), 2);
        assert!(mismatch_count(&x, &y, 5, 0.0).is_err());
    }

    #[test]
    fn metric_mismatch_by_direct_comparison() {
        use crate::dynamics::{beta_orbit, IntervalMap};
        let map = IntervalMap::Doubling;
        let a = beta_orbit(&map, 0.25, 3).unwrap();
        let b = beta_orbit(&map, 0.26, 3).unwrap();
        // orbits 0.25, 0.5, 0.0 and 0.26, 0.52, 0.04
        let brute = a.iter().zip(&b).filter(|(p, q)| (*p - *q).abs() >= 0.05).count();
        assert_eq!(brute, 0);
        assert_eq!(mismatch_count(&a, &b, 3, 0.05).unwrap(), brute);
        assert_eq!(mismatch_count(&a, &b, 3, 0.03).unwrap(), 1);
    }

    #[test]
    fn radius_is_strict() {
        assert!(0.5f64.differs(0.75, 0.25));
        assert!(!0.5f64.differs(0.7, 0.25));
        assert!(f64::NAN.differs(0.5, 1.0));
    }

    #[test]
    fn zero_mistakes_is_the_classical_ball() {
        let g = MistakeFunction::zero();
        let x: [f64; 3] = [0.1, 0.2, 0.3];
        let y = [0.12, 0.29, 0.31];
        let classical = x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 0.05);
        assert_eq!(in_mistake_ball(&x, &y, 3, 0.05, &g).unwrap(), classical);
        assert!(!classical);
    }

    #[test]
    fn membership_matches_subset_enumeration() {
        // every pair of binary words of length 10, budget 2
        let n = 10;
        let g = MistakeFunction::constant(2);
        for xb in (0u32..1 << n).step_by(37) {
            let x: Vec<u8> = (0..n).map(|i| ((xb >> i) & 1) as u8).collect();
            for yb in 0u32..1 << n {
                let y: Vec<u8> = (0..n).map(|i| ((yb >> i) & 1) as u8).collect();
                assert_eq!(
                    in_mistake_ball(&x, &y, n, 0.0, &g).unwrap(),
                    oracle::in_ball_by_subsets(&x, &y, n, 0.0, 2)
                );
            }
        }
    }

    #[test]
    fn sup_birkhoff_examples() {
        let phi = Potential::depth1(vec![0.0, -1.0]).unwrap();
        let x = [0u8, 1, 0, 0, 1, 0, 0, 0, 1, 0];
        assert_eq!(sup_birkhoff_with_budget(&x, 10, 0, &phi).unwrap(), -3.0);
        assert_eq!(sup_birkhoff_with_budget(&x, 10, 2, &phi).unwrap(), -1.0);
        assert_eq!(
            sup_birkhoff_with_budget(&x, 10, 2, &phi).unwrap(),
            oracle::sup_birkhoff_by_enumeration(&x, 10, 2, &phi, 2)
        );
        let flat = Potential::depth1(vec![0.7, 0.7]).unwrap();
        for budget in 0..5 {
            assert!((sup_birkhoff_with_budget(&x, 10, budget, &flat).unwrap() - 7.0).abs() < 1e-12);
        }
        let deep = Potential::depth2(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(sup_birkhoff_with_budget(&x, 10, 1, &deep).is_err());
    }

    mod props {
        use super::*;
        use proptest::collection::vec;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn nesting_and_symmetry(x in vec(0u8..3, 12), y in vec(0u8..3, 12), g1 in 0usize..6, extra in 0usize..6) {
                let g2 = g1 + extra;
                let small = within_budget(&x, &y, 0.0, g1);
                prop_assert!(!small || within_budget(&x, &y, 0.0, g2));
                prop_assert_eq!(small, within_budget(&y, &x, 0.0, g1));
            }

            #[test]
            fn classical_members_pass_every_budget(x in vec(0.0f64..1.0, 10), noise in vec(-0.04f64..0.04, 10), c in 0u64..5) {
                let y: Vec<f64> = x.iter().zip(&noise).map(|(a, d)| a + d).collect();
                let classical = x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 0.05);
                prop_assume!(classical);
                prop_assert!(in_mistake_ball(&x, &y, 10, 0.05, &MistakeFunction::constant(c)).unwrap());
            }

            #[test]
            fn sup_birkhoff_bounds(x in vec(0u8..3, 1..12), phi in vec(-2.0f64..2.0, 3), budget in 0usize..5) {
                let n = x.len();
                let pot = Potential::depth1(phi.clone()).unwrap();
                let base = sup_birkhoff_with_budget(&x, n, 0, &pot).unwrap();
                let sup = sup_birkhoff_with_budget(&x, n, budget, &pot).unwrap();
                let more = sup_birkhoff_with_budget(&x, n, budget + 1, &pot).unwrap();
                let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(more >= sup - 1e-12);
                prop_assert!(sup <= n as f64 * top + 1e-9);
                let norm = phi.iter().map(|v| v.abs()).fold(0.0, f64::max);
                prop_assert!((sup - base).abs() <= 2.0 * norm * budget as f64 + 1e-9);
                if n <= 8 {
                    let brute = oracle::sup_birkhoff_by_enumeration(&x, n, budget, &pot, 3);
                    prop_assert!((sup - brute).abs() < 1e-9);
                }
            }
        }
    }
}
