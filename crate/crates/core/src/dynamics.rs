//! Dynamical systems, symbolic coding and measure sampling.
//!
//! Symbolic systems are one-sided subshifts of finite type described by a
//! 0/1 transition matrix; the full shift is the all-ones matrix. Interval
//! maps are the beta-transformations `x -> beta * x mod 1` (the doubling map
//! being `beta = 2`), iterated in ordinary double precision. For expanding
//! maps the computed orbit is a pseudo-orbit: every statistic built on it is
//! a statement about measure-typical behaviour, not about an individual true
//! orbit. Note that the doubling map loses one mantissa bit per step and
//! collapses onto the fixed point 0 after about 53 iterates.

use std::collections::VecDeque;
use std::ops::Deref;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const PROBABILITY_TOLERANCE: f64 = 1e-12;
const STATIONARY_TOLERANCE: f64 = 1e-10;
const STATIONARY_RESIDUAL: f64 = 1e-12;
const STATIONARY_MAX_ITERATIONS: usize = 1_000_000;

/// A subshift of finite type on the alphabet `{0, ..., m-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicSystem {
    alphabet_size: usize,
    // row-major m x m
    transitions: Vec<bool>,
}

impl SymbolicSystem {
    /// Builds a system from a square 0/1 matrix.
    ///
    /// Rejects dead symbols (an all-zero row or column) and transition
    /// graphs that are not strongly connected.
    pub fn new(matrix: &[Vec<u8>]) -> Result<Self> {
        let m = matrix.len();
        if m == 0 {
            return Err(Error::InvalidSystem("empty alphabet".into()));
        }
        if m > usize::from(u8::MAX) + 1 {
            return Err(Error::InvalidSystem(format!("alphabet of size {m} exceeds 256")));
        }
        let mut transitions = Vec::with_capacity(m * m);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidSystem(format!(
                    "row {i} has length {}, expected {m}",
                    row.len()
                )));
            }
            for (j, &entry) in row.iter().enumerate() {
                match entry {
                    0 => transitions.push(false),
                    1 => transitions.push(true),
                    other => {
                        return Err(Error::InvalidSystem(format!(
                            "entry ({i},{j}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        let system = SymbolicSystem { alphabet_size: m, transitions };
        for i in 0..m {
            if !(0..m).any(|j| system.allowed_index(i, j)) {
                return Err(Error::InvalidSystem(format!("symbol {i} has no successor")));
            }
            if !(0..m).any(|j| system.allowed_index(j, i)) {
                return Err(Error::InvalidSystem(format!("symbol {i} has no predecessor")));
            }
        }
        if !system.is_strongly_connected() {
            return Err(Error::InvalidSystem("transition graph is not strongly connected".into()));
        }
        Ok(system)
    }

    /// The full shift on `m` symbols.
    pub fn full_shift(m: usize) -> Result<Self> {
        Self::new(&vec![vec![1; m]; m])
    }

    /// The golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::new(&[vec![1, 1], vec![1, 0]]).expect("golden-mean matrix is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    pub fn allowed(&self, from: u8, to: u8) -> bool {
        self.allowed_index(usize::from(from), usize::from(to))
    }

    #[inline]
    fn allowed_index(&self, from: usize, to: usize) -> bool {
        self.transitions[from * self.alphabet_size + to]
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().all(|&t| t)
    }

    pub fn successors(&self, from: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.alphabet_size)
            .filter(move |&to| self.allowed_index(usize::from(from), to))
            .map(|to| to as u8)
    }

    pub fn matrix(&self) -> Vec<Vec<u8>> {
        (0..self.alphabet_size)
            .map(|i| (0..self.alphabet_size).map(|j| u8::from(self.allowed_index(i, j))).collect())
            .collect()
    }

    fn distances_from(&self, source: usize, reversed: bool) -> Vec<Option<usize>> {
        let m = self.alphabet_size;
        let mut dist = vec![None; m];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for v in 0..m {
                let edge = if reversed { self.allowed_index(v, u) } else { self.allowed_index(u, v) };
                if edge && dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn is_strongly_connected(&self) -> bool {
        self.distances_from(0, false).iter().all(Option::is_some)
            && self.distances_from(0, true).iter().all(Option::is_some)
    }

    /// Largest shortest-path length between two symbols of the transition
    /// graph.
    pub fn diameter(&self) -> usize {
        (0..self.alphabet_size)
            .flat_map(|s| self.distances_from(s, false))
            .map(|d| d.unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// A finite word over `{0, ..., m-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>, alphabet_size: usize) -> Result<Self> {
        if let Some(pos) = symbols.iter().position(|&s| usize::from(s) >= alphabet_size) {
            return Err(Error::InvalidWord(format!(
                "symbol {} at position {pos} is outside an alphabet of size {alphabet_size}",
                symbols[pos]
            )));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.0
    }
}

impl Deref for Word {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

/// `x -> beta * x mod 1` on `[0, 1)` with the metric `|x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalMap {
    Beta(f64),
    Doubling,
}

impl IntervalMap {
    pub fn beta(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::InvalidMap(format!("beta must be a finite number > 1, got {beta}")));
        }
        Ok(IntervalMap::Beta(beta))
    }

    pub fn slope(&self) -> f64 {
        match *self {
            IntervalMap::Beta(beta) => beta,
            IntervalMap::Doubling => 2.0,
        }
    }

    /// Number of branches, `ceil(beta)`.
    pub fn alphabet_size(&self) -> usize {
        self.slope().ceil() as usize
    }

    /// `log beta`, the entropy of the measure of maximal entropy.
    pub fn entropy(&self) -> f64 {
        self.slope().ln()
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let y = self.slope() * x;
        let frac = y - y.floor();
        // guards against 1 - ulp rounding up
        if frac >= 1.0 {
            0.0
        } else {
            frac
        }
    }

    /// Index of the cell `[k/beta, (k+1)/beta)` containing `x`.
    #[inline]
    pub fn symbol(&self, x: f64) -> u8 {
        let k = (self.slope() * x).floor();
        let top = (self.alphabet_size() - 1) as f64;
        k.clamp(0.0, top) as u8
    }

    pub fn orbit(&self, x0: f64) -> Result<Orbit> {
        check_unit_interval(x0)?;
        Ok(Orbit { map: *self, next: x0 })
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("initial point {x} is outside [0,1)")))
    }
}

/// Unbounded forward orbit of an [`IntervalMap`].
#[derive(Debug, Clone)]
pub struct Orbit {
    map: IntervalMap,
    next: f64,
}

impl Iterator for Orbit {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let current = self.next;
        self.next = self.map.apply(current);
        Some(current)
    }
}

/// The first `length` points of the orbit of `x0`.
pub fn beta_orbit(map: &IntervalMap, x0: f64, length: usize) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::InvalidArgument("orbit length must be positive".into()));
    }
    Ok(map.orbit(x0)?.take(length).collect())
}

/// Itinerary of an orbit through the natural partition of `map`.
pub fn code_orbit(map: &IntervalMap, orbit: &[f64]) -> Word {
    Word(orbit.iter().map(|&x| map.symbol(x)).collect())
}

/// A shift-invariant measure, or Lebesgue-distributed initial points for an
/// interval map.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Bernoulli { p: Vec<f64> },
    Markov { matrix: Vec<Vec<f64>>, stationary: Vec<f64> },
    LebesgueStart,
}

impl MeasureSpec {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        check_probability_vector(&p, "p")?;
        Ok(MeasureSpec::Bernoulli { p })
    }

    pub fn uniform(m: usize) -> Self {
        MeasureSpec::Bernoulli { p: vec![1.0 / m as f64; m] }
    }

    /// A stationary Markov measure. When `stationary` is `None` it is
    /// computed by power iteration.
    pub fn markov(matrix: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self> {
        let m = matrix.len();
        if m == 0 {
            return Err(Error::InvalidMeasure("empty transition matrix".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidMeasure(format!("row {i} has length {}, expected {m}", row.len())));
            }
            check_probability_vector(row, &format!("row {i}"))?;
        }
        let stationary = match stationary {
            Some(pi) => pi,
            None => stationary_vector(&matrix)?,
        };
        if stationary.len() != m {
            return Err(Error::InvalidMeasure("stationary vector has the wrong length".into()));
        }
        check_probability_vector(&stationary, "stationary")?;
        let residual = stationary_residual(&matrix, &stationary);
        if residual > STATIONARY_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "stationary vector is not invariant (residual {residual:e})"
            )));
        }
        Ok(MeasureSpec::Markov { matrix, stationary })
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            MeasureSpec::Bernoulli { p } => Some(p.len()),
            MeasureSpec::Markov { stationary, .. } => Some(stationary.len()),
            MeasureSpec::LebesgueStart => None,
        }
    }

    /// Checks that the measure lives on `system`: alphabet sizes agree and
    /// every positive-probability transition is allowed.
    pub fn validate_against(&self, system: &SymbolicSystem) -> Result<()> {
        let m = system.alphabet_size();
        match self {
            MeasureSpec::LebesgueStart => {
                Err(Error::InvalidMeasure("lebesgue_start has no symbolic support".into()))
            }
            MeasureSpec::Bernoulli { p } => {
                if p.len() != m {
                    return Err(Error::InvalidMeasure(format!(
                        "measure has {} symbols, system has {m}",
                        p.len()
                    )));
                }
                for i in 0..m {
                    for j in 0..m {
                        if p[i] > 0.0 && p[j] > 0.0 && !system.allowed(i as u8, j as u8) {
                            return Err(Error::InvalidMeasure(format!(
                                "bernoulli measure charges forbidden transition {i}->{j}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            MeasureSpec::Markov { matrix, .. } => {
                if matrix.len() != m {
                    return Err(Error::InvalidMeasure(format!(
                        "measure has {} symbols, system has {m}",
                        matrix.len()
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    for (j, &pij) in row.iter().enumerate() {
                        if pij > 0.0 && !system.allowed(i as u8, j as u8) {
                            return Err(Error::InvalidMeasure(format!(
                                "P[{i}][{j}] = {pij} > 0 on a forbidden transition"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// One-step marginal and transition probability as a Markov chain
    /// (Bernoulli measures have identical rows).
    pub fn marginal(&self, symbol: usize) -> f64 {
        match self {
            MeasureSpec::Bernoulli { p } => p[symbol],
            MeasureSpec::Markov { stationary, .. } => stationary[symbol],
            MeasureSpec::LebesgueStart => f64::NAN,
        }
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        match self {
            MeasureSpec::Bernoulli { p } => p[to],
            MeasureSpec::Markov { matrix, .. } => matrix[from][to],
            MeasureSpec::LebesgueStart => f64::NAN,
        }
    }

    /// Infinite stream of symbols distributed according to the measure.
    pub fn stream(&self, seed: u64) -> Result<SymbolStream> {
        SymbolStream::new(self, seed)
    }
}

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidMeasure(format!("{what} is empty")));
    }
    if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::InvalidMeasure(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn stationary_residual(matrix: &[Vec<f64>], pi: &[f64]) -> f64 {
    let m = pi.len();
    (0..m)
        .map(|j| {
            let flow: f64 = (0..m).map(|i| pi[i] * matrix[i][j]).sum();
            (flow - pi[j]).abs()
        })
        .sum()
}

/// Stationary vector of a row-stochastic matrix.
///
/// Iterates the lazy chain `(P + I) / 2`, which has the same stationary
/// vectors as `P` but no periodicity, until the L1 residual of `pi P = pi`
/// drops below 1e-12.
pub fn stationary_vector(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = matrix.len();
    let mut pi = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    for iteration in 0..STATIONARY_MAX_ITERATIONS {
        if stationary_residual(matrix, &pi) <= STATIONARY_RESIDUAL {
            return Ok(pi);
        }
        for (j, slot) in next.iter_mut().enumerate() {
            let flow: f64 = (0..m).map(|i| pi[i] * matrix[i][j]).sum();
            *slot = 0.5 * (flow + pi[j]);
        }
        let total: f64 = next.iter().sum();
        for (dst, &src) in pi.iter_mut().zip(&next) {
            *dst = src / total;
        }
        if iteration + 1 == STATIONARY_MAX_ITERATIONS {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: STATIONARY_MAX_ITERATIONS })
}

#[inline]
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum: Vec<f64> = p
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect();
    // the last symbol with positive mass absorbs rounding so that a draw in
    // [0, 1) always lands on a positive-probability symbol
    if let Some(last) = p.iter().rposition(|&x| x > 0.0) {
        for c in &mut cum[last..] {
            *c = 1.0;
        }
    }
    cum
}

#[inline]
fn draw(cum: &[f64], u: f64) -> u8 {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8
}

#[derive(Debug, Clone)]
enum Sampler {
    Bernoulli(Vec<f64>),
    Markov { initial: Vec<f64>, rows: Vec<Vec<f64>> },
}

/// Deterministic infinite symbol stream for a Bernoulli or Markov measure.
///
/// The same `(measure, seed)` pair always yields the same sequence, and
/// [`sample_word`] returns its prefixes.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    rng: ChaCha8Rng,
    sampler: Sampler,
    previous: Option<u8>,
}

impl SymbolStream {
    pub fn new(measure: &MeasureSpec, seed: u64) -> Result<Self> {
        let sampler = match measure {
            MeasureSpec::Bernoulli { p } => Sampler::Bernoulli(cumulative(p)),
            MeasureSpec::Markov { matrix, stationary } => Sampler::Markov {
                initial: cumulative(stationary),
                rows: matrix.iter().map(|row| cumulative(row)).collect(),
            },
            MeasureSpec::LebesgueStart => {
                return Err(Error::Unsupported(
                    "lebesgue_start cannot be sampled symbolically; use beta_orbit + code_orbit".into(),
                ))
            }
        };
        Ok(SymbolStream { rng: ChaCha8Rng::seed_from_u64(seed), sampler, previous: None })
    }
}

impl Iterator for SymbolStream {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let u = unit_f64(&mut self.rng);
        let symbol = match (&self.sampler, self.previous) {
            (Sampler::Bernoulli(cum), _) => draw(cum, u),
            (Sampler::Markov { initial, .. }, None) => draw(initial, u),
            (Sampler::Markov { rows, .. }, Some(prev)) => draw(&rows[usize::from(prev)], u),
        };
        self.previous = Some(symbol);
        Some(symbol)
    }
}

/// A length-`n` word drawn from `measure`, deterministic in `seed`.
pub fn sample_word(measure: &MeasureSpec, n: usize, seed: u64) -> Result<Word> {
    Ok(Word(SymbolStream::new(measure, seed)?.take(n).collect()))
}

/// Uniform Lebesgue initial point in `[0, 1)` derived from `seed`.
pub fn lebesgue_point(seed: u64) -> f64 {
    unit_f64(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// True iff every consecutive pair of `word` is an allowed transition.
pub fn sft_admissible(word: &[u8], system: &SymbolicSystem) -> bool {
    let m = system.alphabet_size();
    word.iter().all(|&s| usize::from(s) < m) && word.windows(2).all(|w| system.allowed(w[0], w[1]))
}
