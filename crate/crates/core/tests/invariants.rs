use mistake_recurrence::dynamics::{IntervalMap, MeasureSpec, SymbolicSystem};
use mistake_recurrence::estimators::{entropy_via_return, minreturn_linear_rate, Source};
use mistake_recurrence::mistake::{in_mistake_ball, MistakeFunction};
use mistake_recurrence::oracle::{min_return_by_witness_search, tau_inf_by_enumeration};
use mistake_recurrence::recurrence::{
    almost_spec_check, first_return_with_budget, min_return_full_shift, min_return_sft, SpecCheckMode,
};
use mistake_recurrence::suspension::{tau_hat_symbolic, Roof};
use mistake_recurrence::thermo::{entropy_analytic, equilibrium_markov, integrate, pressure_transfer, Potential};
use proptest::prelude::*;

fn word(n: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, n)
}

fn golden_word(n: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, n).prop_map(|mut w| {
        for i in 1..w.len() {
            if w[i - 1] == 1 {
                w[i] = 0;
            }
        }
        w
    })
}

proptest! {
    #[test]
    fn first_return_shrinks_as_budget_grows(x in word(4096), n in 2usize..10, g1 in 0usize..3, extra in 0usize..3) {
        let a = first_return_with_budget(&x, n, 0.0, g1, 4000).unwrap();
        let b = first_return_with_budget(&x, n, 0.0, g1 + extra, 4000).unwrap();
        prop_assert!(b.value().unwrap_or(u64::MAX) <= a.value().unwrap_or(u64::MAX));
    }

    #[test]
    fn minimal_return_never_exceeds_first(x in word(4096), n in 2usize..10, budget in 0usize..3) {
        let s = min_return_full_shift(&x[..n], budget).unwrap() as u64;
        if let Some(r) = first_return_with_budget(&x, n, 0.0, budget, 4000).unwrap().value() {
            prop_assert!(s <= r);
        }
    }

    #[test]
    fn golden_minimal_return_matches_witness_search(x in golden_word(7), budget in 0usize..3) {
        let system = SymbolicSystem::golden_mean();
        prop_assert_eq!(min_return_sft(&x, budget, &system).unwrap(), min_return_by_witness_search(&x, budget, &system));
    }

    #[test]
    fn ball_membership_is_symmetric(x in word(12), y in word(12), c in 0u64..4) {
        let g = MistakeFunction::constant(c);
        prop_assert_eq!(in_mistake_ball(&x, &y, 12, 0.0, &g).unwrap(), in_mistake_ball(&y, &x, 12, 0.0, &g).unwrap());
    }

    #[test]
    fn tau_hat_brackets_exhaustive_infimum(x in word(10), budget in 0u64..3, r0 in 0.5f64..3.0, r1 in 0.5f64..3.0) {
        let system = SymbolicSystem::full_shift(2).unwrap();
        let roof = Roof::symbolic(vec![r0, r1]).unwrap();
        let g = MistakeFunction::constant(budget);
        let est = tau_hat_symbolic(&x, 10, 0.0, &g, &roof, &system).unwrap();
        let exact = tau_inf_by_enumeration(&x, budget as usize, &[r0, r1], 0.0);
        prop_assert!(est.lower <= exact + 1e-9 && exact <= est.upper + 1e-9);
    }

    #[test]
    fn variational_identity_on_random_depth2(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let system = SymbolicSystem::full_shift(2).unwrap();
        let phi = Potential::depth2(vec![vec![a, b], vec![c, d]]).unwrap();
        let mu = equilibrium_markov(&system, &phi).unwrap();
        let p = pressure_transfer(&system, &phi, 1.0).unwrap().value;
        let lhs = entropy_analytic(&mu).unwrap() + integrate(&mu, &phi).unwrap();
        prop_assert!((lhs - p).abs() < 1e-9);
    }
}

#[test]
fn estimators_are_seed_deterministic() {
    let source = Source::symbolic(SymbolicSystem::full_shift(2).unwrap(), MeasureSpec::uniform(2)).unwrap();
    let g = MistakeFunction::constant(1);
    let a = entropy_via_return(&source, &g, &[6, 10], &[0.0], 12, 77, 1 << 20).unwrap();
    let b = entropy_via_return(&source, &g, &[6, 10], &[0.0], 12, 77, 1 << 20).unwrap();
    assert_eq!(a, b);
    let c = entropy_via_return(&source, &g, &[6, 10], &[0.0], 12, 78, 1 << 20).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn interval_source_estimates_are_finite() {
    let source = Source::interval(IntervalMap::beta(1.618_033_988_749_895).unwrap()).unwrap();
    let table = entropy_via_return(&source, &MistakeFunction::zero(), &[3, 5], &[0.1], 8, 3, 1 << 18).unwrap();
    assert_eq!(table.records.len(), 16);
    assert!(table.records.iter().all(|r| r.rate.is_none_or(f64::is_finite)));
}

#[test]
fn integer_slope_interval_maps_are_rejected() {
    assert!(IntervalMap::beta(2.0).and_then(Source::interval).is_err());
}

#[test]
fn linear_rate_is_one_without_mistakes() {
    let source = Source::symbolic(SymbolicSystem::full_shift(2).unwrap(), MeasureSpec::uniform(2)).unwrap();
    let table = minreturn_linear_rate(&source, &MistakeFunction::zero(), &[400], 16, 5).unwrap();
    // Random words of length 400 almost never have a period below n - 20.
    assert!(table.records.iter().all(|r| r.rate.unwrap() > 0.9));
}

#[test]
fn full_shift_is_almost_specified_with_one_mistake() {
    let system = SymbolicSystem::full_shift(2).unwrap();
    let report = almost_spec_check(&system, &MistakeFunction::constant(1), 1..=5, 1..=5, SpecCheckMode::Exhaustive).unwrap();
    assert!(report.failures.is_empty());
    assert!(report.pairs_tested > 0);
}

#[test]
fn degenerate_windows_are_errors() {
    let x = [0u8, 1, 0];
    assert!(min_return_full_shift(&[], 0).is_err());
    assert!(first_return_with_budget(&x, 5, 0.0, 0, 10).is_err());
}
