//! Experiment dispatch, CSV output and the summary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mistake_recurrence::dynamics::{lebesgue_point, MeasureSpec, SymbolicSystem};
use mistake_recurrence::estimators::{
    entropy_via_return, kac_normalized_rates, median, minreturn_linear_rate, pressure_rate_table, weighted_rate_table,
    RateTable, ReturnKind, Source,
};
use mistake_recurrence::oracle::run_equivalence_suites;
use mistake_recurrence::recurrence::{almost_spec_check, SpecCheckMode};
use mistake_recurrence::suspension::{abramov, flow_entropy_estimate, mean_roof, mean_roof_birkhoff, Roof};
use mistake_recurrence::thermo::{entropy_analytic, free_energy, integrate, Potential};
use thiserror::Error;

use crate::config::{Experiment, ExperimentConfig, Normalization, SystemSpec};

/// Column order of the CSV output.
pub const HEADER: [&str; 14] = [
    "experiment_id",
    "system",
    "measure",
    "n",
    "epsilon",
    "g_spec",
    "sample_index",
    "seed",
    "R_n",
    "S_n",
    "rate",
    "target",
    "censored",
    "runtime_ms",
];

/// Orbit length used for the Birkhoff-average mean roof over interval bases.
const ROOF_MEAN_ORBIT: usize = 1_000_000;
const CENSORING_LIMIT: f64 = 0.2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] mistake_recurrence::Error),
    #[error("malformed results file: {0}")]
    Malformed(String),
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_id: String,
    pub system: String,
    pub measure: String,
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub g_spec: String,
    pub sample_index: Option<usize>,
    pub seed: Option<u64>,
    pub r_n: Option<u64>,
    pub s_n: Option<u64>,
    pub rate: Option<f64>,
    pub target: Option<f64>,
    pub censored: bool,
    pub runtime_ms: Option<f64>,
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{exponent}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

impl ResultRow {
    fn record(&self) -> [String; 14] {
        [
            self.experiment_id.clone(),
            self.system.clone(),
            self.measure.clone(),
            opt(self.n),
            opt_float(self.epsilon),
            self.g_spec.clone(),
            opt(self.sample_index),
            opt(self.seed),
            opt(self.r_n),
            opt(self.s_n),
            opt_float(self.rate),
            opt_float(self.target),
            self.censored.to_string(),
            opt_float(self.runtime_ms),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Fill the runtime column (breaks byte-identical reruns).
    pub timing: bool,
}

/// Rows plus any invariant violations found while producing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<ResultRow>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
    pub violations: Vec<String>,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        self.violations.is_empty() && self.summary.failures().is_empty()
    }
}

fn base_row(config: &ExperimentConfig, id: &str, g_spec: &str) -> ResultRow {
    ResultRow {
        experiment_id: id.to_string(),
        system: config.system_label.clone(),
        measure: config.measure_label.clone(),
        n: None,
        epsilon: None,
        g_spec: g_spec.to_string(),
        sample_index: None,
        seed: None,
        r_n: None,
        s_n: None,
        rate: None,
        target: None,
        censored: false,
        runtime_ms: None,
    }
}

fn table_rows(config: &ExperimentConfig, id: &str, table: &RateTable, target: Option<f64>) -> Vec<ResultRow> {
    let g_spec = table.rows.first().map(|r| r.g_spec.clone()).unwrap_or_default();
    table
        .records
        .iter()
        .map(|rec| ResultRow {
            n: Some(rec.n),
            epsilon: Some(rec.epsilon),
            sample_index: Some(rec.sample_index),
            seed: Some(rec.seed),
            r_n: rec.r_n,
            s_n: rec.s_n,
            rate: rec.rate,
            target,
            censored: rec.censored,
            ..base_row(config, id, &g_spec)
        })
        .collect()
}

fn table_violations(id: &str, table: &RateTable, violations: &mut Vec<String>) {
    for row in &table.rows {
        if row.censored_count > row.sample_count {
            violations.push(format!("{id}: more censored samples than samples at n={}", row.n));
        }
    }
    for rec in &table.records {
        if !rec.censored && !rec.rate.is_some_and(f64::is_finite) {
            violations.push(format!("{id}: non-finite rate at n={} sample {}", rec.n, rec.sample_index));
        }
    }
}

fn symbolic_parts(config: &ExperimentConfig) -> Option<(&SymbolicSystem, &MeasureSpec)> {
    match (&config.system, &config.measure) {
        (Some(SystemSpec::Symbolic(s)), Some(mu)) => Some((s, mu)),
        _ => None,
    }
}

fn source(config: &ExperimentConfig) -> Result<Source, RunError> {
    match &config.system {
        Some(SystemSpec::Symbolic(s)) => {
            let mu = config.measure.clone().ok_or_else(|| RunError::Malformed("measure missing".into()))?;
            Ok(Source::symbolic(s.clone(), mu)?)
        }
        Some(SystemSpec::Interval(map)) => Ok(Source::interval(*map)?),
        None => Err(RunError::Malformed("system missing".into())),
    }
}

fn base_entropy(config: &ExperimentConfig) -> Result<f64, RunError> {
    match (&config.system, &config.measure) {
        (Some(SystemSpec::Interval(map)), _) => Ok(map.entropy()),
        (Some(SystemSpec::Symbolic(_)), Some(mu)) => Ok(entropy_analytic(mu)?),
        _ => Err(RunError::Malformed("no entropy reference for this system".into())),
    }
}

fn potential(config: &ExperimentConfig) -> Result<&Potential, RunError> {
    config.potential.as_ref().ok_or_else(|| RunError::Malformed("potential missing".into()))
}

/// Runs the configured experiment and returns its rows, sorted by
/// (n, epsilon, sample_index).
pub fn evaluate(config: &ExperimentConfig) -> Result<Evaluation, RunError> {
    let mut violations = Vec::new();
    let id = config.experiment.name();
    let (g, n_grid, eps, samples, seed, k_max) =
        (&config.g, &config.n_grid[..], &config.epsilon_grid[..], config.samples, config.master_seed, config.k_max);
    let mut rows = match config.experiment {
        Experiment::Entropy => {
            let src = source(config)?;
            let (table, target) = match config.normalization {
                Normalization::Kac => (kac_normalized_rates(&src, g, n_grid, samples, seed, k_max)?, 1.0),
                Normalization::None => {
                    (entropy_via_return(&src, g, n_grid, eps, samples, seed, k_max)?, base_entropy(config)?)
                }
            };
            table_violations(id, &table, &mut violations);
            if table.records.iter().any(|r| r.rate.is_some_and(|v| v < 0.0)) {
                violations.push(format!("{id}: negative rate"));
            }
            table_rows(config, id, &table, Some(target))
        }
        Experiment::Minreturn => {
            let src = source(config)?;
            let table = minreturn_linear_rate(&src, g, n_grid, samples, seed)?;
            table_violations(id, &table, &mut violations);
            if let Some(SystemSpec::Symbolic(s)) = &config.system {
                if s.is_full_shift() && table.records.iter().any(|r| r.s_n.is_some_and(|v| v as usize > r.n)) {
                    violations.push(format!("{id}: S_n exceeds n on a full shift"));
                }
            }
            table_rows(config, id, &table, Some(1.0))
        }
        Experiment::Pressure => {
            let src = source(config)?;
            let phi = potential(config)?;
            let (_, mu) = symbolic_parts(config).ok_or_else(|| RunError::Malformed("symbolic system needed".into()))?;
            let target = entropy_analytic(mu)? + integrate(mu, phi)?;
            let table = pressure_rate_table(&src, phi, g, n_grid, samples, seed, k_max)?;
            table_violations(id, &table, &mut violations);
            table_rows(config, id, &table, Some(target))
        }
        Experiment::TheoremC => {
            let src = source(config)?;
            let phi = potential(config)?;
            let (system, mu) =
                symbolic_parts(config).ok_or_else(|| RunError::Malformed("symbolic system needed".into()))?;
            let c = free_energy(system, phi, 1.0)?;
            let h = entropy_analytic(mu)?;
            let first = weighted_rate_table(&src, phi, g, n_grid, samples, seed, k_max, ReturnKind::First)?;
            let minimal = weighted_rate_table(&src, phi, g, n_grid, samples, seed, k_max, ReturnKind::Minimal)?;
            table_violations("theoremC/first", &first, &mut violations);
            table_violations("theoremC/minimal", &minimal, &mut violations);
            for (a, b) in first.records.iter().zip(&minimal.records) {
                if let (Some(fr), Some(mr), Some(r), Some(s)) = (a.rate, b.rate, a.r_n, b.s_n) {
                    if s <= r && mr > fr + 1e-12 {
                        violations.push(format!("theoremC: minimal rate above first rate at n={} sample {}", a.n, a.sample_index));
                    }
                }
            }
            let mut rows = table_rows(config, "theoremC/first", &first, Some(h + c));
            rows.extend(table_rows(config, "theoremC/minimal", &minimal, Some(c)));
            rows
        }
        Experiment::Suspension => {
            let src = source(config)?;
            let roof = config.roof.as_ref().ok_or_else(|| RunError::Malformed("roof missing".into()))?;
            let mean = match (&config.system, roof) {
                (Some(SystemSpec::Interval(map)), Roof::Affine { .. }) => {
                    mean_roof_birkhoff(roof, map, lebesgue_point(seed), ROOF_MEAN_ORBIT)?
                }
                _ => mean_roof(roof, config.measure.as_ref().ok_or_else(|| RunError::Malformed("measure missing".into()))?)?,
            };
            let target = abramov(base_entropy(config)?, mean)?;
            let table = flow_entropy_estimate(&src, roof, g, &config.g2, n_grid, eps, samples, seed, k_max)?;
            table_violations(id, &table, &mut violations);
            table_rows(config, id, &table, Some(target))
        }
        Experiment::Oracle => run_equivalence_suites()?
            .into_iter()
            .map(|suite| {
                if !suite.passed() {
                    violations.push(format!(
                        "oracle/{}: {} mismatches, first: {}",
                        suite.name,
                        suite.mismatches,
                        suite.first_mismatch.clone().unwrap_or_default()
                    ));
                }
                ResultRow {
                    r_n: Some(suite.cases),
                    s_n: Some(suite.mismatches),
                    rate: Some(suite.mismatches as f64),
                    target: Some(0.0),
                    ..base_row(config, &format!("oracle/{}", suite.name), "")
                }
            })
            .collect(),
        Experiment::CheckSpec => {
            let Some(SystemSpec::Symbolic(system)) = &config.system else {
                return Err(RunError::Malformed("symbolic system needed".into()));
            };
            let lo = |grid: &[usize]| grid.first().copied().unwrap_or(1);
            let hi = |grid: &[usize]| grid.last().copied().unwrap_or(1);
            let report = almost_spec_check(
                system,
                g,
                lo(n_grid)..=hi(n_grid),
                lo(&config.m_grid)..=hi(&config.m_grid),
                config.spec_mode,
            )?;
            let row_seed = match config.spec_mode {
                SpecCheckMode::Sampled { seed, .. } => Some(seed),
                SpecCheckMode::Exhaustive => None,
            };
            report
                .per_length
                .iter()
                .filter(|s| n_grid.contains(&s.n) && config.m_grid.contains(&s.m))
                .map(|s| ResultRow {
                    n: Some(s.n),
                    sample_index: Some(s.m),
                    seed: row_seed,
                    r_n: Some(s.tested as u64),
                    s_n: Some(s.failed as u64),
                    rate: Some(s.failed as f64 / s.tested.max(1) as f64),
                    ..base_row(config, id, &g.to_string())
                })
                .collect()
        }
    };
    rows.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.epsilon.unwrap_or(0.0).total_cmp(&b.epsilon.unwrap_or(0.0)))
            .then(a.sample_index.cmp(&b.sample_index))
            .then(a.experiment_id.cmp(&b.experiment_id))
    });
    Ok(Evaluation { rows, violations })
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush().map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// Per (experiment_id, n, epsilon) aggregate, read back from the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub experiment_id: String,
    pub n: String,
    pub epsilon: String,
    pub rows: usize,
    pub censored: usize,
    pub median: Option<f64>,
    pub target: Option<f64>,
}

impl SummaryLine {
    pub fn relative_error(&self) -> Option<f64> {
        match (self.median, self.target) {
            (Some(m), Some(t)) if t != 0.0 => Some((m - t).abs() / t.abs()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub lines: Vec<SummaryLine>,
    /// Censoring fraction per experiment id.
    pub censoring: Vec<(String, f64)>,
}

impl Summary {
    /// Experiment ids whose censoring fraction exceeds the limit.
    pub fn failures(&self) -> Vec<String> {
        self.censoring
            .iter()
            .filter(|(_, f)| *f > CENSORING_LIMIT)
            .map(|(id, f)| format!("{id}: {:.1}% of samples censored (limit 20%)", 100.0 * f))
            .collect()
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.lines.iter().map(|l| l.experiment_id.len()).max().unwrap_or(0).max(10);
        writeln!(
            f,
            "{:<w$} {:>8} {:>8} {:>6} {:>8} {:>14} {:>14} {:>10}",
            "experiment", "n", "epsilon", "rows", "censored", "median", "target", "rel_err"
        )?;
        for line in &self.lines {
            let show = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<w$} {:>8} {:>8} {:>6} {:>8} {:>14} {:>14} {:>10}",
                line.experiment_id,
                if line.n.is_empty() { "-" } else { &line.n },
                if line.epsilon.is_empty() { "-" } else { &line.epsilon },
                line.rows,
                line.censored,
                show(line.median),
                show(line.target),
                line.relative_error().map(|e| format!("{:.2}%", 100.0 * e)).unwrap_or_else(|| "-".into()),
            )?;
        }
        for (id, fraction) in &self.censoring {
            writeln!(f, "censoring {id}: {:.1}%", 100.0 * fraction)?;
        }
        Ok(())
    }
}

fn parse_opt(field: &str) -> Result<Option<f64>, RunError> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| RunError::Malformed(format!("not a number: {field:?}")))
}

/// Rebuilds the summary from a results file alone.
/// (experiment_id, n, epsilon) as written in the CSV.
type GroupKey = (String, String, String);

pub fn summarize_csv(path: &Path) -> Result<Summary, RunError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(RunError::Malformed(format!("unexpected header {headers:?}")));
    }
    let col = |name: &str| HEADER.iter().position(|h| *h == name).expect("known column");
    // keyed by first appearance so lines follow file order
    let mut order: Vec<GroupKey> = Vec::new();
    // (rates, rows, censored, target)
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, usize, usize, Option<f64>)> = BTreeMap::new();
    let mut per_id: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let id = record[col("experiment_id")].to_string();
        let key = (id.clone(), record[col("n")].to_string(), record[col("epsilon")].to_string());
        let censored = &record[col("censored")] == "true";
        let rate = parse_opt(&record[col("rate")])?;
        let target = parse_opt(&record[col("target")])?;
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        let entry = groups.entry(key).or_insert((Vec::new(), 0, 0, None));
        entry.1 += 1;
        if censored {
            entry.2 += 1;
        } else if let Some(r) = rate {
            entry.0.push(r);
        }
        if entry.3.is_none() {
            entry.3 = target;
        }
        let totals = per_id.entry(id).or_insert((0, 0));
        totals.0 += 1;
        totals.1 += usize::from(censored);
    }
    let lines = order
        .into_iter()
        .map(|key| {
            let (rates, rows, censored, target) = &groups[&key];
            SummaryLine {
                experiment_id: key.0,
                n: key.1,
                epsilon: key.2,
                rows: *rows,
                censored: *censored,
                median: median(rates),
                target: *target,
            }
        })
        .collect();
    let censoring = per_id.into_iter().map(|(id, (rows, censored))| (id, censored as f64 / rows as f64)).collect();
    Ok(Summary { lines, censoring })
}

pub fn summary_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".summary.txt");
    csv_path.with_file_name(name)
}

/// Evaluates, writes the CSV and the summary next to it.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let Evaluation { mut rows, violations } = evaluate(config)?;
    if options.timing && !rows.is_empty() {
        // cells run in parallel inside the estimators, so only the
        // amortized wall time per row is known
        let per_row = started.elapsed().as_secs_f64() * 1e3 / rows.len() as f64;
        for row in &mut rows {
            row.runtime_ms = Some(per_row);
        }
    }
    write_csv(&config.output_path, &rows)?;
    let summary = summarize_csv(&config.output_path)?;
    let summary_file = summary_path(&config.output_path);
    let mut text = summary.to_string();
    for v in violations.iter().chain(&summary.failures()) {
        text.push_str(&format!("FAILED {v}\n"));
    }
    fs::write(&summary_file, text).map_err(|source| RunError::Io { path: summary_file.clone(), source })?;
    Ok(RunOutcome { csv_path: config.output_path.clone(), summary_path: summary_file, summary, violations })
}
