//! Return times to mistake dynamical balls.
//!
//! A mistake dynamical ball `B_n(g; x, eps)` contains every point whose
//! orbit eps-shadows the orbit of `x` on all but `g(n, eps)` of the first
//! `n` iterates. This crate computes first and minimal return times to such
//! balls on shifts, subshifts of finite type and beta-transformations, and
//! pairs every recurrence statistic with an exact thermodynamic reference
//! value (entropy, topological pressure, free energy, Abramov flow entropy)
//! so the two can be compared sample by sample.
//!
//! Module map:
//!
//! - [`dynamics`]: symbolic systems, interval maps, measures and sampling.
//! - [`mistake`]: mistake functions, ball membership, Birkhoff suprema.
//! - [`recurrence`]: first/minimal return times and the almost
//!   specification checker.
//! - [`thermo`]: entropy, pressure, free energy, equilibrium states.
//! - [`estimators`]: per-sample rates aggregated into [`estimators::RateTable`]s.
//! - [`suspension`]: roof functions, flow return times, Abramov's formula.
//! - [`oracle`]: brute-force reference implementations used for
//!   cross-checking the fast paths.

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod mistake;
pub mod oracle;
pub mod recurrence;
pub mod suspension;
pub mod thermo;

pub use error::{Error, Result};
