//! JSON experiment configuration.
//!
//! Parsing happens in two passes: serde checks syntax, types and unknown
//! keys (reporting the JSON path of the first problem), then every domain
//! rule is checked and all violations are reported together.

use std::fmt;
use std::path::PathBuf;

use mistake_recurrence::dynamics::{IntervalMap, MeasureSpec, SymbolicSystem};
use mistake_recurrence::mistake::{MistakeFamily, MistakeFunction};
use mistake_recurrence::recurrence::SpecCheckMode;
use mistake_recurrence::suspension::Roof;
use mistake_recurrence::thermo::{equilibrium_markov, Potential};
use serde::Deserialize;

pub const DEFAULT_K_MAX: u64 = 10_000_000;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_OUTPUT: &str = "results.csv";
pub const DEFAULT_SPEC_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Entropy,
    Minreturn,
    Pressure,
    #[serde(rename = "theoremC")]
    TheoremC,
    Suspension,
    Oracle,
    CheckSpec,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Entropy,
        Experiment::Minreturn,
        Experiment::Pressure,
        Experiment::TheoremC,
        Experiment::Suspension,
        Experiment::Oracle,
        Experiment::CheckSpec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Entropy => "entropy",
            Experiment::Minreturn => "minreturn",
            Experiment::Pressure => "pressure",
            Experiment::TheoremC => "theoremC",
            Experiment::Suspension => "suspension",
            Experiment::Oracle => "oracle",
            Experiment::CheckSpec => "check-spec",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Experiment::Entropy => "(1/n) log R_n from first returns to mistake balls",
            Experiment::Minreturn => "S_n / n from exact minimal return times",
            Experiment::Pressure => "(1/n) [sup S_n phi over the ball + log R_n]",
            Experiment::TheoremC => "weighted sums of exp(S_n phi) up to the first and minimal return",
            Experiment::Suspension => "log R_n over the flow return of a mistake-ball cross-section",
            Experiment::Oracle => "brute-force equivalence suites",
            Experiment::CheckSpec => "empirical g-almost specification on a subshift of finite type",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SystemDesc {
    FullShift { alphabet: usize },
    GoldenMean {},
    Sft { matrix: Vec<Vec<u8>> },
    Beta { beta: f64 },
    Doubling {},
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MeasureDesc {
    Bernoulli { p: Vec<f64> },
    Uniform {},
    Markov { matrix: Vec<Vec<f64>>, stationary: Option<Vec<f64>> },
    /// Equilibrium state of the configured potential.
    Equilibrium {},
    Lebesgue {},
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyName {
    Zero,
    Constant,
    Power,
    Logarithmic,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MistakeDesc {
    family: FamilyName,
    c: Option<u64>,
    scale: Option<f64>,
    theta: Option<f64>,
    epsilon_cap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum PotentialDesc {
    Depth1(Vec<f64>),
    Depth2(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RoofDesc {
    Symbolic(Vec<f64>),
    Affine { c: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Plain `(1/n) log R_n`.
    None,
    /// `log R_n / (-log mu(ball))`, Bernoulli full shifts only.
    Kac,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SpecModeDesc {
    Exhaustive,
    Sampled { count: Option<usize> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    system: Option<SystemDesc>,
    measure: Option<MeasureDesc>,
    mistake: Option<MistakeDesc>,
    mistake_g2: Option<MistakeDesc>,
    potential: Option<PotentialDesc>,
    roof: Option<RoofDesc>,
    n_grid: Option<Vec<usize>>,
    epsilon_grid: Option<Vec<f64>>,
    m_grid: Option<Vec<usize>>,
    samples: Option<usize>,
    master_seed: Option<u64>,
    k_max: Option<u64>,
    output_path: Option<PathBuf>,
    normalization: Option<Normalization>,
    spec_mode: Option<SpecModeDesc>,
}

/// The base dynamical system.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Symbolic(SymbolicSystem),
    Interval(IntervalMap),
}

/// A fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: Option<SystemSpec>,
    pub system_label: String,
    pub measure: Option<MeasureSpec>,
    pub measure_label: String,
    pub g: MistakeFunction,
    pub g2: MistakeFunction,
    pub potential: Option<Potential>,
    pub roof: Option<Roof>,
    pub n_grid: Vec<usize>,
    pub epsilon_grid: Vec<f64>,
    pub m_grid: Vec<usize>,
    pub samples: usize,
    pub master_seed: u64,
    pub k_max: u64,
    pub output_path: PathBuf,
    pub normalization: Normalization,
    pub spec_mode: SpecCheckMode,
}

/// A problem at a JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Default)]
struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(Diagnostic { path: path.to_string(), message: message.into() });
    }

    fn check<T>(&mut self, path: &str, result: mistake_recurrence::Result<T>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }
}

fn resolve_mistake(desc: &MistakeDesc, path: &str, diags: &mut Diagnostics) -> Option<MistakeFunction> {
    let allowed: &[&str] = match desc.family {
        FamilyName::Zero => &[],
        FamilyName::Constant => &["c"],
        FamilyName::Power => &["scale", "theta"],
        FamilyName::Logarithmic => &["scale"],
    };
    let present = [("c", desc.c.is_some()), ("scale", desc.scale.is_some()), ("theta", desc.theta.is_some())];
    for (key, is_set) in present {
        if is_set && !allowed.contains(&key) {
            diags.push(&format!("{path}.{key}"), format!("not a parameter of the {:?} family", desc.family));
        }
    }
    let family = match desc.family {
        FamilyName::Zero => MistakeFamily::Zero,
        FamilyName::Constant => match desc.c {
            Some(c) => MistakeFamily::Constant(c),
            None => {
                diags.push(&format!("{path}.c"), "constant family needs c");
                return None;
            }
        },
        FamilyName::Power => match desc.theta {
            Some(theta) => MistakeFamily::Power { scale: desc.scale.unwrap_or(1.0), exponent: theta },
            None => {
                diags.push(&format!("{path}.theta"), "power family needs theta");
                return None;
            }
        },
        FamilyName::Logarithmic => MistakeFamily::Logarithmic { scale: desc.scale.unwrap_or(1.0) },
    };
    let at = match family {
        MistakeFamily::Power { .. } if desc.theta.is_some_and(|t| !(t > 0.0 && t < 1.0)) => format!("{path}.theta"),
        _ => path.to_string(),
    };
    diags.check(&at, MistakeFunction::new(family, desc.epsilon_cap.unwrap_or(1.0)))
}

fn check_n_grid(grid: &[usize], path: &str, diags: &mut Diagnostics) {
    if grid.is_empty() {
        diags.push(path, "grid must be nonempty");
    } else if grid[0] == 0 {
        diags.push(path, "lengths must be positive");
    } else if grid.windows(2).any(|w| w[0] >= w[1]) {
        diags.push(path, "grid must be strictly increasing");
    }
}

/// Parses and validates a configuration, applying documented defaults.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(deserializer).map_err(|e| {
        let path = e.path().to_string();
        vec![Diagnostic { path: if path.is_empty() { "$".into() } else { path }, message: e.into_inner().to_string() }]
    })?;
    let mut diags = Diagnostics::default();
    let experiment = raw.experiment;

    let (system, system_label) = match &raw.system {
        None => (None, String::new()),
        Some(desc) => {
            let resolved = match desc {
                SystemDesc::FullShift { alphabet } => {
                    diags.check("system.alphabet", SymbolicSystem::full_shift(*alphabet)).map(SystemSpec::Symbolic)
                }
                SystemDesc::GoldenMean {} => Some(SystemSpec::Symbolic(SymbolicSystem::golden_mean())),
                SystemDesc::Sft { matrix } => {
                    diags.check("system.matrix", SymbolicSystem::new(matrix)).map(SystemSpec::Symbolic)
                }
                SystemDesc::Beta { beta } => diags.check("system.beta", IntervalMap::beta(*beta)).map(SystemSpec::Interval),
                SystemDesc::Doubling {} => Some(SystemSpec::Interval(IntervalMap::Doubling)),
            };
            let label = match desc {
                SystemDesc::FullShift { alphabet } => format!("full_shift({alphabet})"),
                SystemDesc::GoldenMean {} => "golden_mean".into(),
                SystemDesc::Sft { matrix } => format!("sft({matrix:?})").replace(' ', ""),
                SystemDesc::Beta { beta } => format!("beta({beta})"),
                SystemDesc::Doubling {} => "doubling".into(),
            };
            (resolved, label)
        }
    };

    let potential = raw.potential.as_ref().and_then(|p| match p {
        PotentialDesc::Depth1(v) => diags.check("potential.depth1", Potential::depth1(v.clone())),
        PotentialDesc::Depth2(t) => diags.check("potential.depth2", Potential::depth2(t.clone())),
    });
    if let (Some(phi), Some(SystemSpec::Symbolic(s))) = (&potential, &system) {
        diags.check("potential", phi.check_against(s));
    }

    let (measure, measure_label) = match &raw.measure {
        None => (None, String::new()),
        Some(desc) => {
            let resolved = match desc {
                MeasureDesc::Bernoulli { p } => diags.check("measure.p", MeasureSpec::bernoulli(p.clone())),
                MeasureDesc::Uniform {} => match &system {
                    Some(SystemSpec::Symbolic(s)) => Some(MeasureSpec::uniform(s.alphabet_size())),
                    _ => {
                        diags.push("measure", "uniform measure needs a symbolic system");
                        None
                    }
                },
                MeasureDesc::Markov { matrix, stationary } => {
                    diags.check("measure.matrix", MeasureSpec::markov(matrix.clone(), stationary.clone()))
                }
                MeasureDesc::Equilibrium {} => match (&system, &potential) {
                    (Some(SystemSpec::Symbolic(s)), Some(phi)) => diags.check("measure", equilibrium_markov(s, phi)),
                    _ => {
                        diags.push("measure", "equilibrium measure needs a symbolic system and a potential");
                        None
                    }
                },
                MeasureDesc::Lebesgue {} => Some(MeasureSpec::LebesgueStart),
            };
            if let (Some(mu), Some(SystemSpec::Symbolic(s))) = (&resolved, &system) {
                diags.check("measure", mu.validate_against(s));
            }
            let label = match desc {
                MeasureDesc::Bernoulli { p } => {
                    let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                    format!("bernoulli({})", parts.join(","))
                }
                MeasureDesc::Uniform {} => "uniform".into(),
                MeasureDesc::Markov { .. } => "markov".into(),
                MeasureDesc::Equilibrium {} => "equilibrium".into(),
                MeasureDesc::Lebesgue {} => "lebesgue".into(),
            };
            (resolved, label)
        }
    };

    let g = match &raw.mistake {
        Some(desc) => resolve_mistake(desc, "mistake", &mut diags),
        None => Some(MistakeFunction::zero()),
    };
    let g2 = match &raw.mistake_g2 {
        Some(desc) => resolve_mistake(desc, "mistake_g2", &mut diags),
        None => g,
    };

    let roof = raw.roof.as_ref().and_then(|r| match r {
        RoofDesc::Symbolic(v) => diags.check("roof.symbolic", Roof::symbolic(v.clone())),
        RoofDesc::Affine { c, d } => diags.check("roof.affine", Roof::affine(*c, *d)),
    });

    let symbolic = matches!(system, Some(SystemSpec::Symbolic(_)));
    let needs_system = !matches!(experiment, Experiment::Oracle);
    if needs_system && raw.system.is_none() {
        diags.push("system", format!("required by the {} experiment", experiment.name()));
    }
    let needs_symbolic = matches!(
        experiment,
        Experiment::Minreturn | Experiment::Pressure | Experiment::TheoremC | Experiment::CheckSpec
    );
    if needs_symbolic && matches!(system, Some(SystemSpec::Interval(_))) {
        diags.push("system", format!("the {} experiment needs a symbolic system", experiment.name()));
    }
    let needs_measure = !matches!(experiment, Experiment::Oracle | Experiment::CheckSpec);
    if needs_measure && symbolic && raw.measure.is_none() {
        diags.push("measure", format!("required by the {} experiment", experiment.name()));
    }
    if matches!(measure, Some(MeasureSpec::LebesgueStart)) && symbolic {
        diags.push("measure", "lebesgue starting points need an interval map");
    }
    if matches!(experiment, Experiment::Pressure | Experiment::TheoremC) && raw.potential.is_none() {
        diags.push("potential", format!("required by the {} experiment", experiment.name()));
    }
    if experiment == Experiment::Pressure {
        if let Some(p) = &potential {
            if p.depth() != 1 {
                diags.push("potential", "pressure via recurrence needs a depth-1 potential");
            }
        }
        if let Some(SystemSpec::Symbolic(s)) = &system {
            if !s.is_full_shift() {
                diags.push("system", "pressure via recurrence needs a full shift");
            }
        }
    }
    if experiment == Experiment::Suspension {
        match (&roof, &system) {
            (None, _) if raw.roof.is_none() => diags.push("roof", "required by the suspension experiment"),
            (Some(Roof::Symbolic(v)), Some(SystemSpec::Symbolic(s))) if v.len() != s.alphabet_size() => {
                diags.push("roof.symbolic", "one roof value per symbol is needed")
            }
            (Some(Roof::Affine { .. }), Some(SystemSpec::Symbolic(_))) => {
                diags.push("roof", "symbolic bases take a symbolic roof")
            }
            (Some(Roof::Symbolic(_)), Some(SystemSpec::Interval(_))) => {
                diags.push("roof", "interval bases take an affine roof")
            }
            _ => {}
        }
    }
    if let Some(SystemSpec::Interval(map)) = &system {
        if map.slope().fract() == 0.0 && !matches!(experiment, Experiment::Oracle) {
            diags.push(
                "system",
                "integer slopes lose one bit per step in floating point; use the symbolic full shift instead",
            );
        }
    }

    let normalization = raw.normalization.unwrap_or(Normalization::None);
    if normalization == Normalization::Kac {
        let ok = experiment == Experiment::Entropy
            && matches!(&system, Some(SystemSpec::Symbolic(s)) if s.is_full_shift())
            && matches!(measure, Some(MeasureSpec::Bernoulli { .. }));
        if !ok {
            diags.push("normalization", "kac normalization needs an entropy experiment on a Bernoulli full shift");
        }
    }

    let n_grid = raw.n_grid.clone().unwrap_or_default();
    if experiment != Experiment::Oracle {
        if raw.n_grid.is_none() {
            diags.push("n_grid", format!("required by the {} experiment", experiment.name()));
        } else {
            check_n_grid(&n_grid, "n_grid", &mut diags);
        }
    }
    let m_grid = raw.m_grid.clone().unwrap_or_else(|| n_grid.clone());
    if raw.m_grid.is_some() {
        check_n_grid(&m_grid, "m_grid", &mut diags);
    }
    let epsilon_grid = match &raw.epsilon_grid {
        Some(grid) => {
            if grid.is_empty() {
                diags.push("epsilon_grid", "grid must be nonempty");
            } else if grid.iter().any(|e| !e.is_finite() || *e < 0.0 || *e > 1.0) {
                diags.push("epsilon_grid", "radii must lie in [0, 1]");
            } else if grid.windows(2).any(|w| w[0] >= w[1]) {
                diags.push("epsilon_grid", "grid must be strictly increasing");
            }
            grid.clone()
        }
        None => {
            if matches!(system, Some(SystemSpec::Interval(_))) {
                diags.push("epsilon_grid", "required for interval maps");
            }
            vec![0.0]
        }
    };
    if symbolic && epsilon_grid != [0.0] && !matches!(experiment, Experiment::Entropy | Experiment::Suspension) {
        diags.push("epsilon_grid", "symbolic experiments other than entropy and suspension take no radii");
    }

    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        diags.push("samples", "need at least one sample");
    }
    let k_max = raw.k_max.unwrap_or(DEFAULT_K_MAX);
    if k_max == 0 {
        diags.push("k_max", "search bound must be positive");
    }
    let master_seed = raw.master_seed.unwrap_or(0);
    let spec_mode = match raw.spec_mode {
        None | Some(SpecModeDesc::Exhaustive) => SpecCheckMode::Exhaustive,
        Some(SpecModeDesc::Sampled { count }) => {
            let count = count.unwrap_or(DEFAULT_SPEC_SAMPLES);
            if count == 0 {
                diags.push("spec_mode.sampled.count", "need at least one sample");
            }
            SpecCheckMode::Sampled { count, seed: master_seed }
        }
    };

    if !diags.0.is_empty() {
        return Err(diags.0);
    }
    Ok(ExperimentConfig {
        experiment,
        system,
        system_label,
        measure,
        measure_label,
        g: g.expect("checked"),
        g2: g2.expect("checked"),
        potential,
        roof,
        n_grid,
        epsilon_grid,
        m_grid,
        samples,
        master_seed,
        k_max,
        output_path: raw.output_path.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
        normalization,
        spec_mode,
    })
}
