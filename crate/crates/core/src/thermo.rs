//! Thermodynamic reference values for subshifts of finite type.
//!
//! Potentials are locally constant (depending on one or two symbols), so
//! pressure, free energy and equilibrium states reduce to Perron–Frobenius
//! data of the weighted transition matrix `M_ij = A_ij exp(t phi(i, j))`.
//! All logarithms are natural; entropies are in nats.

use crate::dynamics::{MeasureSpec, SymbolicSystem};
use crate::error::{Error, Result};

const RAYLEIGH_TOLERANCE: f64 = 1e-13;
const RESIDUAL_TOLERANCE: f64 = 1e-12;
const MAX_POWER_ITERATIONS: usize = 100_000;

/// A locally constant potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `phi(x) = values[x_0]`
    Depth1(Vec<f64>),
    /// `phi(x) = table[x_0][x_1]`; entries on forbidden transitions are
    /// never read.
    Depth2(Vec<Vec<f64>>),
}

impl Potential {
    pub fn depth1(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("depth-1 values must be finite and nonempty".into()));
        }
        Ok(Potential::Depth1(values))
    }

    pub fn depth2(table: Vec<Vec<f64>>) -> Result<Self> {
        let m = table.len();
        if m == 0 || table.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidPotential("depth-2 table must be square and nonempty".into()));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("depth-2 values must be finite".into()));
        }
        Ok(Potential::Depth2(table))
    }

    pub fn zero(m: usize) -> Self {
        Potential::Depth1(vec![0.0; m])
    }

    pub fn depth(&self) -> usize {
        match self {
            Potential::Depth1(_) => 1,
            Potential::Depth2(_) => 2,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Potential::Depth1(v) => v.len(),
            Potential::Depth2(t) => t.len(),
        }
    }

    #[inline]
    pub fn value(&self, current: u8, next: u8) -> f64 {
        match self {
            Potential::Depth1(v) => v[usize::from(current)],
            Potential::Depth2(t) => t[usize::from(current)][usize::from(next)],
        }
    }

    pub fn scaled(&self, t: f64) -> Potential {
        match self {
            Potential::Depth1(v) => Potential::Depth1(v.iter().map(|x| t * x).collect()),
            Potential::Depth2(tab) => {
                Potential::Depth2(tab.iter().map(|row| row.iter().map(|x| t * x).collect()).collect())
            }
        }
    }

    /// `sup |phi|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::Depth1(v) => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            Potential::Depth2(t) => t.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }

    /// Extra symbols past the window that a Birkhoff sum reads.
    pub fn lookahead(&self) -> usize {
        self.depth() - 1
    }

    /// `S_n phi(x) = sum_{i<n} phi(sigma^i x)`; needs `n + lookahead()`
    /// symbols.
    pub fn birkhoff(&self, x: &[u8], n: usize) -> Result<f64> {
        let needed = n + self.lookahead();
        if x.len() < needed {
            return Err(Error::LengthShortfall { needed, available: x.len() });
        }
        Ok(match self {
            Potential::Depth1(v) => x[..n].iter().map(|&s| v[usize::from(s)]).sum(),
            Potential::Depth2(t) => {
                x[..=n].windows(2).map(|w| t[usize::from(w[0])][usize::from(w[1])]).sum()
            }
        })
    }

    pub fn check_against(&self, system: &SymbolicSystem) -> Result<()> {
        if self.alphabet_size() != system.alphabet_size() {
            return Err(Error::InvalidPotential(format!(
                "potential is defined on {} symbols, system has {}",
                self.alphabet_size(),
                system.alphabet_size()
            )));
        }
        Ok(())
    }
}

/// Log of the Perron eigenvalue of the weighted transition matrix, with
/// both Perron eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureResult {
    pub value: f64,
    pub eigenvalue: f64,
    pub right_eigvec: Vec<f64>,
    pub left_eigvec: Vec<f64>,
    pub residual: f64,
}

fn weighted_matrix(system: &SymbolicSystem, phi: &Potential, t: f64) -> Vec<Vec<f64>> {
    let m = system.alphabet_size();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if system.allowed(i as u8, j as u8) {
                        (t * phi.value(i as u8, j as u8)).exp()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn transpose(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = matrix.len();
    (0..m).map(|j| (0..m).map(|i| matrix[i][j]).collect()).collect()
}

/// Dominant eigenpair of a nonnegative irreducible matrix by power
/// iteration with max-normalization. Stops once successive Rayleigh
/// quotients agree to 1e-13 and the eigen-residual is below 1e-12 (both
/// relative to `max(1, lambda)`).
fn perron(matrix: &[Vec<f64>]) -> Result<(f64, Vec<f64>, f64)> {
    let m = matrix.len();
    let mut v = vec![1.0; m];
    let mut w = vec![0.0; m];
    let mut previous = f64::NAN;
    for _ in 0..MAX_POWER_ITERATIONS {
        for (i, slot) in w.iter_mut().enumerate() {
            *slot = matrix[i].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let rayleigh = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / vv;
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let residual =
            v.iter().zip(&w).map(|(a, b)| (b - rayleigh * a).abs()).fold(0.0, f64::max) / vmax;
        let scale = rayleigh.abs().max(1.0);
        if (rayleigh - previous).abs() <= RAYLEIGH_TOLERANCE * scale
            && residual <= RESIDUAL_TOLERANCE * scale
        {
            let total: f64 = v.iter().sum();
            return Ok((rayleigh, v.iter().map(|x| x / total).collect(), residual / scale));
        }
        let wmax = w.iter().copied().fold(0.0, f64::max);
        if !(wmax > 0.0 && wmax.is_finite()) {
            return Err(Error::InvalidArgument("weighted matrix annihilates the iterate".into()));
        }
        for (dst, src) in v.iter_mut().zip(&w) {
            *dst = src / wmax;
        }
        previous = rayleigh;
    }
    Err(Error::NoConvergence { iterations: MAX_POWER_ITERATIONS })
}

/// `P_top(sigma, t * phi)` as the log spectral radius of the weighted
/// transition matrix.
pub fn pressure_transfer(system: &SymbolicSystem, phi: &Potential, t: f64) -> Result<PressureResult> {
    phi.check_against(system)?;
    let matrix = weighted_matrix(system, phi, t);
    let (eigenvalue, right, right_residual) = perron(&matrix)?;
    let (_, left, left_residual) = perron(&transpose(&matrix))?;
    Ok(PressureResult {
        value: eigenvalue.ln(),
        eigenvalue,
        right_eigvec: right,
        left_eigvec: left,
        residual: right_residual.max(left_residual),
    })
}

/// Free energy `c_{phi,t} = P((t+1) phi) - P(phi)` of the equilibrium state
/// of `phi`.
pub fn free_energy(system: &SymbolicSystem, phi: &Potential, t: f64) -> Result<f64> {
    Ok(pressure_transfer(system, phi, t + 1.0)?.value - pressure_transfer(system, phi, 1.0)?.value)
}

/// The equilibrium state of `phi` as a stationary Markov measure:
/// `P_ij = A_ij e^{phi(i,j)} r_j / (lambda r_i)`, `pi_i ~ l_i r_i`.
pub fn equilibrium_markov(system: &SymbolicSystem, phi: &Potential) -> Result<MeasureSpec> {
    let pressure = pressure_transfer(system, phi, 1.0)?;
    let matrix = weighted_matrix(system, phi, 1.0);
    let r = &pressure.right_eigvec;
    let l = &pressure.left_eigvec;
    let lambda = pressure.eigenvalue;
    let m = system.alphabet_size();
    let transitions: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let row: Vec<f64> = (0..m).map(|j| matrix[i][j] * r[j] / (lambda * r[i])).collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let weights: Vec<f64> = l.iter().zip(r).map(|(a, b)| a * b).collect();
    let total: f64 = weights.iter().sum();
    let stationary = weights.into_iter().map(|w| w / total).collect();
    MeasureSpec::markov(transitions, Some(stationary))
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Kolmogorov–Sinai entropy of a Bernoulli or Markov measure, in nats.
pub fn entropy_analytic(measure: &MeasureSpec) -> Result<f64> {
    match measure {
        MeasureSpec::Bernoulli { p } => Ok(-p.iter().map(|&x| xlogx(x)).sum::<f64>()),
        MeasureSpec::Markov { matrix, stationary } => Ok(-stationary
            .iter()
            .zip(matrix)
            .map(|(pi, row)| pi * row.iter().map(|&x| xlogx(x)).sum::<f64>())
            .sum::<f64>()),
        MeasureSpec::LebesgueStart => Err(Error::Unsupported(
            "entropy of lebesgue_start is not defined here; pass log(beta) explicitly".into(),
        )),
    }
}

/// `int phi dmu`.
pub fn integrate(measure: &MeasureSpec, phi: &Potential) -> Result<f64> {
    let m = measure
        .alphabet_size()
        .ok_or_else(|| Error::Unsupported("integration against lebesgue_start".into()))?;
    if phi.alphabet_size() != m {
        return Err(Error::InvalidPotential("potential and measure alphabets differ".into()));
    }
    let mut total = 0.0;
    for i in 0..m {
        let weight = measure.marginal(i);
        if weight == 0.0 {
            continue;
        }
        total += match phi {
            Potential::Depth1(v) => weight * v[i],
            Potential::Depth2(t) => {
                (0..m).map(|j| weight * measure.transition(i, j) * t[i][j]).sum::<f64>()
            }
        };
    }
    Ok(total)
}

/// `log mu([w])`.
pub fn log_cylinder_measure(measure: &MeasureSpec, word: &[u8]) -> Result<f64> {
    let m = measure
        .alphabet_size()
        .ok_or_else(|| Error::Unsupported("cylinder measure of lebesgue_start".into()))?;
    if word.iter().any(|&s| usize::from(s) >= m) {
        return Err(Error::InvalidWord("symbol outside the measure's alphabet".into()));
    }
    let Some((&first, _)) = word.split_first() else {
        return Ok(0.0);
    };
    let mut log_mass = measure.marginal(usize::from(first)).ln();
    for pair in word.windows(2) {
        log_mass += measure.transition(usize::from(pair[0]), usize::from(pair[1])).ln();
    }
    if log_mass == f64::NEG_INFINITY {
        return Err(Error::ZeroMeasure);
    }
    Ok(log_mass)
}

/// `-(1/n) log mu([w])`, the Shannon–McMillan–Breiman rate of `word`.
pub fn smb_rate(measure: &MeasureSpec, word: &[u8]) -> Result<f64> {
    if word.is_empty() {
        return Err(Error::InvalidArgument("empty word".into()));
    }
    Ok(-log_cylinder_measure(measure, word)? / word.len() as f64)
}

/// `log mu(B_n(G; x))` for the Bernoulli measure `p`: the total mass of
/// words within Hamming distance `budget` of `x[..n]`.
///
/// Dynamic program over (position, mismatches used), rescaled each step so
/// that it stays finite for long words.
pub fn log_ball_measure_bernoulli(p: &[f64], x: &[u8], n: usize, budget: usize) -> Result<f64> {
    if x.len() < n {
        return Err(Error::LengthShortfall { needed: n, available: x.len() });
    }
    if x[..n].iter().any(|&s| usize::from(s) >= p.len()) {
        return Err(Error::InvalidWord("symbol outside the measure's alphabet".into()));
    }
    if budget >= n {
        return Ok(0.0);
    }
    let mut mass = vec![0.0; budget + 1];
    mass[0] = 1.0;
    let mut log_scale = 0.0;
    for &s in &x[..n] {
        let hit = p[usize::from(s)];
        let miss = 1.0 - hit;
        for j in (0..=budget).rev() {
            let carried = if j > 0 { mass[j - 1] * miss } else { 0.0 };
            mass[j] = mass[j] * hit + carried;
        }
        let top = mass.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        for v in &mut mass {
            *v /= top;
        }
        log_scale += top.ln();
    }
    Ok(mass.iter().sum::<f64>().ln() + log_scale)
}

/// `mu(B_n(G; x))` for the Bernoulli measure `p`.
pub fn ball_measure_bernoulli(p: &[f64], x: &[u8], n: usize, budget: usize) -> Result<f64> {
    Ok(log_ball_measure_bernoulli(p, x, n, budget)?.exp())
}
