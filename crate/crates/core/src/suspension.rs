//! Suspension flows: roof sums, the flow return quantity over mistake-ball
//! cross-sections, and the Abramov formula.
//!
//! The flow return time of a cross-section `B × (s - eps, s + eps)` is never
//! simulated in continuous time. It is the infimum over `y in B` of the roof
//! sum up to the base return of `y`, minus `2 eps`; [`tau_hat_symbolic`] evaluates
//! that sum at the center and brackets the infimum.

use rayon::prelude::*;

use crate::dynamics::{beta_orbit, IntervalMap, MeasureSpec, SymbolicSystem};
use crate::error::{Error, Result};
use crate::estimators::{sample_seed, Source, RateTable, ReturnRecord, INTERVAL_HORIZON};
use crate::mistake::MistakeFunction;
use crate::recurrence::{first_return_streaming, min_return_sft, min_return_upper_with_budget, ReturnOutcome};

/// Height function of a suspension flow.
#[derive(Debug, Clone, PartialEq)]
pub enum Roof {
    /// `r(x) = values[x_0]` over a symbolic base.
    Symbolic(Vec<f64>),
    /// `r(x) = c + d x` over an interval base.
    Affine { c: f64, d: f64 },
}

impl Roof {
    pub fn symbolic(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidRoof("roof values must be finite and positive".into()));
        }
        Ok(Roof::Symbolic(values))
    }

    pub fn affine(c: f64, d: f64) -> Result<Self> {
        if !c.is_finite() || !d.is_finite() || c <= 0.0 || c + d <= 0.0 {
            return Err(Error::InvalidRoof(format!("c + d x must be positive on [0,1), got c={c}, d={d}")));
        }
        Ok(Roof::Affine { c, d })
    }

    pub fn constant(value: f64, alphabet_size: usize) -> Result<Self> {
        Roof::symbolic(vec![value; alphabet_size])
    }

    /// Positive lower bound of the roof.
    pub fn floor(&self) -> f64 {
        match self {
            Roof::Symbolic(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
            Roof::Affine { c, d } => c.min(c + d),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Roof::Symbolic(v) => v.iter().copied().fold(0.0, f64::max),
            Roof::Affine { c, d } => c.max(c + d),
        }
    }

    /// Oscillation of the roof over a ball of radius `eps`.
    pub fn modulus(&self, eps: f64) -> f64 {
        match self {
            Roof::Symbolic(_) => 0.0,
            Roof::Affine { d, .. } => d.abs() * 2.0 * eps,
        }
    }

    /// Every roof value multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        match self {
            Roof::Symbolic(v) => Roof::symbolic(v.iter().map(|x| x * lambda).collect()),
            Roof::Affine { c, d } => Roof::affine(c * lambda, d * lambda),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Roof::Symbolic(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                format!("roof({})", parts.join(","))
            }
            Roof::Affine { c, d } => format!("roof({c}+{d}x)"),
        }
    }
}

/// Base data along which the roof is summed.
#[derive(Debug, Clone, Copy)]
pub enum BasePoint<'a> {
    Word(&'a [u8]),
    Orbit(&'a [f64]),
}

/// Roof sum over the first `k` base iterates.
pub fn roof_birkhoff(base: BasePoint<'_>, roof: &Roof, k: usize) -> Result<f64> {
    let available = match base {
        BasePoint::Word(w) => w.len(),
        BasePoint::Orbit(o) => o.len(),
    };
    if available < k {
        return Err(Error::LengthShortfall { needed: k, available });
    }
    match (base, roof) {
        (BasePoint::Word(w), Roof::Symbolic(values)) => w[..k]
            .iter()
            .map(|&s| {
                values
                    .get(usize::from(s))
                    .copied()
                    .ok_or_else(|| Error::InvalidRoof(format!("no roof value for symbol {s}")))
            })
            .sum(),
        (BasePoint::Orbit(o), Roof::Affine { c, d }) => Ok(o[..k].iter().map(|x| c + d * x).sum()),
        (BasePoint::Word(_), Roof::Affine { .. }) => {
            Err(Error::InvalidRoof("affine roofs need an interval orbit".into()))
        }
        (BasePoint::Orbit(_), Roof::Symbolic(_)) => {
            Err(Error::InvalidRoof("symbolic roofs need a symbol word".into()))
        }
    }
}

/// Flow return estimate with a certified bracket for the infimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Base return steps the roof was summed over.
    pub steps: u64,
}

fn bracket(sum: f64, steps: usize, eps: f64, budget: usize, roof: &Roof) -> TauEstimate {
    let value = sum - 2.0 * eps;
    let slack = steps as f64 * roof.modulus(eps) + 2.0 * roof.sup() * budget as f64 + 2.0 * eps;
    TauEstimate { value, lower: value - slack, upper: value + slack, steps: steps as u64 }
}

/// `tau_hat` over a symbolic base, using the exact minimal return time of
/// `x[..n]` under the `g2` budget.
pub fn tau_hat_symbolic(
    x: &[u8],
    n: usize,
    eps: f64,
    g2: &MistakeFunction,
    roof: &Roof,
    system: &SymbolicSystem,
) -> Result<TauEstimate> {
    if x.len() < n {
        return Err(Error::LengthShortfall { needed: n, available: x.len() });
    }
    let budget = g2.budget(n, eps);
    let steps = min_return_sft(&x[..n], budget, system)?;
    let sum = roof_birkhoff(BasePoint::Word(x), roof, steps)?;
    Ok(bracket(sum, steps, eps, budget, roof))
}

/// `tau_hat` over an interval base. The return time is the orbit-witness
/// upper bound searched up to `horizon`; the orbit must hold
/// `horizon + n` points.
pub fn tau_hat_interval(
    orbit: &[f64],
    n: usize,
    eps: f64,
    g2: &MistakeFunction,
    roof: &Roof,
    horizon: usize,
) -> Result<TauEstimate> {
    let budget = g2.budget(n, eps);
    let steps = match min_return_upper_with_budget(orbit, n, eps, budget, horizon)? {
        ReturnOutcome::Returned(k) => k as usize,
        ReturnOutcome::Censored(k) => return Err(Error::Censored(k)),
    };
    let sum = roof_birkhoff(BasePoint::Orbit(orbit), roof, steps)?;
    Ok(bracket(sum, steps, eps, budget, roof))
}

/// Flow entropy from the base entropy and the mean roof.
pub fn abramov(h_base: f64, mean_roof: f64) -> Result<f64> {
    if !(mean_roof > 0.0) {
        return Err(Error::InvalidArgument(format!("mean roof must be positive, got {mean_roof}")));
    }
    Ok(h_base / mean_roof)
}

/// `∫ roof dμ` for a symbolic roof under a Bernoulli or Markov measure.
pub fn mean_roof(roof: &Roof, measure: &MeasureSpec) -> Result<f64> {
    let Roof::Symbolic(values) = roof else {
        return Err(Error::InvalidRoof("closed-form mean needs a symbolic roof".into()));
    };
    if measure.alphabet_size() != Some(values.len()) {
        return Err(Error::InvalidRoof("roof and measure alphabets differ".into()));
    }
    Ok(values.iter().enumerate().map(|(i, v)| v * measure.marginal(i)).sum())
}

/// Birkhoff average of an affine roof along an orbit of `length` points.
pub fn mean_roof_birkhoff(roof: &Roof, map: &IntervalMap, x0: f64, length: usize) -> Result<f64> {
    let orbit = beta_orbit(map, x0, length)?;
    Ok(roof_birkhoff(BasePoint::Orbit(&orbit), roof, length)? / length as f64)
}

/// Per sample and `(n, eps)`: `log R_n(g1) / tau_hat(g2).value`.
#[allow(clippy::too_many_arguments)]
pub fn flow_entropy_estimate(
    source: &Source,
    roof: &Roof,
    g1: &MistakeFunction,
    g2: &MistakeFunction,
    n_grid: &[usize],
    eps_grid: &[f64],
    samples: usize,
    master_seed: u64,
    k_max: u64,
) -> Result<RateTable> {
    crate::estimators::check_grids(n_grid, eps_grid, samples)?;
    match (source, roof) {
        (Source::Symbolic { .. }, Roof::Symbolic(_)) | (Source::Interval { .. }, Roof::Affine { .. }) => {}
        _ => return Err(Error::InvalidRoof("roof kind does not match the base".into())),
    }
    let cells: Vec<(usize, usize, f64)> = (0..samples)
        .flat_map(|s| n_grid.iter().flat_map(move |&n| eps_grid.iter().map(move |&e| (s, n, e))))
        .collect();
    let records = cells
        .into_par_iter()
        .map(|(index, n, eps)| {
            let seed = sample_seed(master_seed, index);
            let mut record = ReturnRecord::empty(index, seed, n, eps);
            let budget1 = g1.budget(n, eps);
            let (returned, tau) = match source {
                Source::Symbolic { system, measure } => {
                    let r = first_return_streaming(measure.stream(seed)?, n, eps, budget1, k_max)?;
                    let x: Vec<u8> = measure.stream(seed)?.take(n).collect();
                    (r, tau_hat_symbolic(&x, n, eps, g2, roof, system)?)
                }
                Source::Interval { map } => {
                    let x0 = crate::dynamics::lebesgue_point(seed);
                    let r = first_return_streaming(map.orbit(x0)?, n, eps, budget1, k_max)?;
                    let horizon = INTERVAL_HORIZON.min(k_max as usize);
                    let orbit = beta_orbit(map, x0, horizon + n)?;
                    match tau_hat_interval(&orbit, n, eps, g2, roof, horizon) {
                        Ok(tau) => (r, tau),
                        Err(Error::Censored(_)) => {
                            record.r_n = r.value();
                            record.censored = true;
                            return Ok(record);
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            record.r_n = returned.value();
            record.s_n = Some(tau.steps);
            record.censored = returned.is_censored();
            if let Some(r) = returned.value() {
                record.rate = Some((r as f64).ln() / tau.value);
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::from_records(records, &format!("g1={g1};g2={g2}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sample_word, IntervalMap};
    use crate::oracle;
    use crate::recurrence::min_return_full_shift;
    use proptest::prelude::*;

    fn full2() -> SymbolicSystem {
        SymbolicSystem::full_shift(2).unwrap()
    }

    #[test]
    fn roof_validation() {
        assert!(Roof::symbolic(vec![1.0, 0.0]).is_err());
        assert!(Roof::symbolic(vec![]).is_err());
        assert!(Roof::affine(1.0, -1.0).is_err());
        assert!(Roof::affine(0.0, 1.0).is_err());
        let r = Roof::affine(2.0, -1.5).unwrap();
        assert_eq!((r.floor(), r.sup()), (0.5, 2.0));
    }

    #[test]
    fn roof_sums() {
        let c = Roof::constant(0.75, 2).unwrap();
        assert_eq!(roof_birkhoff(BasePoint::Word(&[0, 1, 1, 0, 1]), &c, 4).unwrap(), 3.0);
        let r = Roof::symbolic(vec![1.0, 2.0]).unwrap();
        assert_eq!(roof_birkhoff(BasePoint::Word(&[0, 1, 0]), &r, 3).unwrap(), 4.0);
        let orbit = beta_orbit(&IntervalMap::Doubling, 0.25, 3).unwrap();
        let affine = Roof::affine(1.0, 1.0).unwrap();
        assert_eq!(roof_birkhoff(BasePoint::Orbit(&orbit), &affine, 3).unwrap(), 3.75);
        assert!(roof_birkhoff(BasePoint::Word(&[0, 1]), &r, 3).is_err());
        assert!(roof_birkhoff(BasePoint::Word(&[0, 1]), &affine, 1).is_err());
        assert!(roof_birkhoff(BasePoint::Orbit(&orbit), &r, 1).is_err());
    }

    #[test]
    fn unit_roof_gives_minimal_return() {
        let unit = Roof::constant(1.0, 2).unwrap();
        let mu = MeasureSpec::uniform(2);
        for seed in 0..50 {
            let x = sample_word(&mu, 16, seed).unwrap();
            let tau = tau_hat_symbolic(&x, 16, 0.0, &MistakeFunction::zero(), &unit, &full2()).unwrap();
            let s = min_return_full_shift(&x, 0).unwrap();
            assert_eq!(tau.value, s as f64);
            assert_eq!((tau.lower, tau.upper), (tau.value, tau.value));
        }
    }

    #[test]
    fn zero_mistakes_leave_only_eps_slack() {
        let r = Roof::symbolic(vec![1.0, 2.0]).unwrap();
        let x = [0, 1, 1, 0, 1, 0, 0, 1];
        let tau = tau_hat_symbolic(&x, 8, 0.05, &MistakeFunction::zero(), &r, &full2()).unwrap();
        assert!((tau.upper - tau.value - 0.1).abs() < 1e-12);
        assert!((tau.value - tau.lower - 0.1).abs() < 1e-12);
    }

    #[test]
    fn interval_tau() {
        let map = IntervalMap::beta((1.0 + 5f64.sqrt()) / 2.0).unwrap();
        let orbit = beta_orbit(&map, 0.3141, 20_000).unwrap();
        let roof = Roof::affine(1.0, 1.0).unwrap();
        let tau = tau_hat_interval(&orbit, 4, 0.05, &MistakeFunction::zero(), &roof, 10_000).unwrap();
        let k = tau.steps as usize;
        assert!((tau.value - (orbit[..k].iter().map(|x| 1.0 + x).sum::<f64>() - 0.1)).abs() < 1e-9);
        assert!((tau.upper - tau.value - (k as f64 * 0.1 + 0.1)).abs() < 1e-9);
        assert!(matches!(
            tau_hat_interval(&orbit[..30], 20, 1e-9, &MistakeFunction::zero(), &roof, 10),
            Err(Error::Censored(10))
        ));
    }

    #[test]
    fn abramov_values() {
        assert_eq!(abramov(2f64.ln(), 1.0).unwrap(), 2f64.ln());
        assert_eq!(abramov(0.0, 3.7).unwrap(), 0.0);
        assert!((abramov(2f64.ln(), 1.5).unwrap() - 0.462098).abs() < 1e-6);
        assert!(abramov(1.0, 0.0).is_err());
        assert!(abramov(1.0, -1.0).is_err());
        let r = Roof::symbolic(vec![1.0, 2.0]).unwrap();
        assert_eq!(mean_roof(&r, &MeasureSpec::uniform(2)).unwrap(), 1.5);
    }

    #[test]
    fn golden_affine_mean_matches_parry_density() {
        // the invariant density of the golden-ratio map is proportional to
        // 1 + 1/β on [0, 1/β) and 1 on [1/β, 1)
        let beta = (1.0 + 5f64.sqrt()) / 2.0;
        let mass = 1.0 + 1.0 / (beta * beta);
        let first_moment = 0.5 + 1.0 / (2.0 * beta.powi(3));
        let expected = 1.0 + first_moment / mass;
        let map = IntervalMap::beta(beta).unwrap();
        let roof = Roof::affine(1.0, 1.0).unwrap();
        let estimate = mean_roof_birkhoff(&roof, &map, 0.2718, 2_000_000).unwrap();
        // orbit standard deviation of x is below 0.3; 5 sigma with generous correlation allowance
        assert!((estimate - expected).abs() < 5.0 * 0.3 * 10.0 / (2e6f64).sqrt(), "{estimate} vs {expected}");
    }

    #[test]
    fn flow_estimate_unit_roof_is_entropy_over_minimal_return() {
        let source = Source::symbolic(full2(), MeasureSpec::uniform(2)).unwrap();
        let unit = Roof::constant(1.0, 2).unwrap();
        let g = MistakeFunction::zero();
        let table = flow_entropy_estimate(&source, &unit, &g, &g, &[10, 12], &[0.0], 16, 3, 1 << 22).unwrap();
        for rec in &table.records {
            let x: Vec<u8> = MeasureSpec::uniform(2).stream(rec.seed).unwrap().take(rec.n).collect();
            let s = min_return_full_shift(&x, 0).unwrap() as f64;
            let expected = (rec.r_n.unwrap() as f64).ln() / s;
            assert_eq!(rec.rate.unwrap(), expected);
        }
        let scaled = flow_entropy_estimate(&source, &unit.scaled(2.0).unwrap(), &g, &g, &[10, 12], &[0.0], 16, 3, 1 << 22)
            .unwrap();
        for (a, b) in table.records.iter().zip(&scaled.records) {
            assert!((a.rate.unwrap() - 2.0 * b.rate.unwrap()).abs() < 1e-12);
        }
        assert!(flow_entropy_estimate(&source, &Roof::affine(1.0, 0.0).unwrap(), &g, &g, &[10], &[0.0], 1, 0, 10).is_err());
    }

    #[test]
    fn tau_suite_small() {
        let r = oracle::suite_tau_hat().unwrap();
        assert!(r.passed(), "{r:?}");
    }

    proptest! {
        #[test]
        fn scaling_is_linear(x in prop::collection::vec(0u8..2, 4..40), budget in 0u64..3, lambda in 0.1f64..10.0) {
            let roof = Roof::symbolic(vec![1.0, 2.0]).unwrap();
            let g = MistakeFunction::constant(budget);
            let n = x.len();
            let base = tau_hat_symbolic(&x, n, 0.0, &g, &roof, &full2()).unwrap();
            let scaled = tau_hat_symbolic(&x, n, 0.0, &g, &roof.scaled(lambda).unwrap(), &full2()).unwrap();
            for (a, b) in [(base.value, scaled.value), (base.lower, scaled.lower), (base.upper, scaled.upper)] {
                prop_assert!((a * lambda - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }

        #[test]
        fn bracket_is_ordered(x in prop::collection::vec(0u8..2, 1..60), budget in 0u64..4, eps in 0.0f64..0.2) {
            let roof = Roof::symbolic(vec![0.5, 3.0]).unwrap();
            let tau = tau_hat_symbolic(&x, x.len(), eps, &MistakeFunction::constant(budget), &roof, &full2()).unwrap();
            prop_assert!(tau.lower <= tau.value && tau.value <= tau.upper);
        }

        #[test]
        fn abramov_inverts(h in 0.0f64..5.0, r in 0.01f64..10.0) {
            prop_assert!((abramov(h, r).unwrap() * r - h).abs() <= 1e-12 * h.max(1.0));
        }
    }
}
