//! Experiment configuration, dispatch and CSV/JSON emission for the
//! `qvlc` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bounds::{self, BoundReport, BoundSense, DEFAULT_C3};
use crate::codec::dense::average_error_prime;
use crate::codec::{delta_schedule, outcome_stats, to_fixed_length, CodeParams, EvalMethod, EvalOptions, SpectrumSet, VLCode};
use crate::error::Error;
use crate::info::{self, sorted_spectrum, ExponentProblem, ProbVector, SpectrumFamily};
use crate::linalg::{identity, max_abs, ComplexMatrix, DensityMatrix, Source, DEFAULT_MAX_DIM};
use crate::schur_weyl::{young_projectors, MAX_PERMUTATION_N};
use crate::young::{dim_su, dim_sym, enumerate_young};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residual tolerance for `decompose-check`.
pub const DECOMPOSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Dims,
    DecomposeCheck,
    Distribution,
    Error,
    Overflow,
    Bounds,
    Exponent,
    LemmaL1,
    LemmaL2,
    Sec6Gap,
    FixedLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum C3Choice {
    /// The Pinsker constant ½.
    #[default]
    Certified,
    /// The grid-search estimate.
    Numeric,
}

fn default_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub delta1: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    /// Use `δ = n^{−1/4}`, `δ₁ = n^{−1/4} − n^{−1/3}`.
    #[serde(default)]
    pub schedule: bool,
    /// Descending weights of an orthogonal source.
    #[serde(default)]
    pub spectrum: Option<Vec<f64>>,
    /// Path to a [`SourceFile`].
    #[serde(default)]
    pub source: Option<PathBuf>,
    /// Spectra of `𝒮` for restricted codes and families.
    #[serde(default)]
    pub spectrum_set: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub delta_theta: Option<f64>,
    /// Also evaluate the per-copy error by dense simulation.
    #[serde(default)]
    pub local_error: bool,
    #[serde(default)]
    pub c3: C3Choice,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: None,
            d: None,
            delta: None,
            delta1: None,
            rate: None,
            schedule: false,
            spectrum: None,
            source: None,
            spectrum_set: None,
            n_grid: None,
            samples: default_samples(),
            seed: 0,
            format: Format::Csv,
            output: None,
            t1: None,
            t0: None,
            delta_theta: None,
            local_error: false,
            c3: C3Choice::Certified,
        }
    }
}

/// One atom of a source file; `matrix` holds rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAtom {
    pub weight: f64,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    pub d: usize,
    pub atoms: Vec<SourceAtom>,
}

impl SourceFile {
    pub fn to_source(&self) -> Result<Source, CliError> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.matrix.len() != self.d || atom.matrix.iter().any(|r| r.len() != self.d) {
                return Err(CliError::Config(format!("atom {i} is not {0}x{0}", self.d)));
            }
            let entries: Vec<Complex64> =
                atom.matrix.iter().flat_map(|row| row.iter().map(|[re, im]| Complex64::new(*re, *im))).collect();
            let m = ComplexMatrix::from_row_slice(self.d, self.d, &entries);
            atoms.push((atom.weight, DensityMatrix::new(m)?));
        }
        Ok(Source::new(atoms)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(String),
    /// A computed check failed; the table was still produced.
    #[error("numerical check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(Error::BudgetExceeded { .. }) => 2,
            CliError::Core(Error::Numerical(_)) | CliError::Check(_) => 3,
            CliError::Core(_) => 1,
        }
    }
}

/// Rows with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of a run: the table and any check that failed while producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub failed_check: Option<String>,
}

/// JSON numbers cannot hold non-finite values; those become strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn method_name(m: EvalMethod) -> &'static str {
    match m {
        EvalMethod::Exact => "exact",
        EvalMethod::MonteCarlo { .. } => "monte-carlo",
    }
}

fn require<T: Copy>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("--{name} is required for this command")))
}

fn require_n(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    let n = require(cfg.n, "n")?;
    if n == 0 {
        return Err(CliError::Config("--n must be positive".into()));
    }
    Ok(n)
}

fn parse_spectrum(entries: &[f64]) -> Result<ProbVector, CliError> {
    if entries.windows(2).any(|w| w[0] < w[1]) {
        return Err(CliError::Config("spectrum entries must be in descending order".into()));
    }
    Ok(ProbVector::new(entries.to_vec())?)
}

fn load_source(cfg: &ExperimentConfig) -> Result<Option<Source>, CliError> {
    match (&cfg.source, &cfg.spectrum) {
        (Some(_), Some(_)) => Err(CliError::Config("give either --source or --spectrum, not both".into())),
        (Some(path), None) => Ok(Some(SourceFile::load(path)?.to_source()?)),
        (None, Some(spec)) => Ok(Some(Source::classical(parse_spectrum(spec)?.entries())?)),
        (None, None) => Ok(None),
    }
}

fn require_source(cfg: &ExperimentConfig) -> Result<Source, CliError> {
    load_source(cfg)?.ok_or_else(|| CliError::Config("--spectrum or --source is required for this command".into()))
}

/// Sorted spectrum of the source average.
fn require_spectrum(cfg: &ExperimentConfig) -> Result<ProbVector, CliError> {
    Ok(sorted_spectrum(&require_source(cfg)?.average()))
}

fn dimension(cfg: &ExperimentConfig, source: Option<&Source>) -> Result<usize, CliError> {
    let d = match (cfg.d, source) {
        (Some(d), Some(s)) if d != s.d() => {
            return Err(CliError::Config(format!("--d {d} disagrees with the source dimension {}", s.d())))
        }
        (_, Some(s)) => s.d(),
        (Some(d), None) => d,
        (None, None) => return Err(CliError::Config("--d is required for this command".into())),
    };
    if d < 2 {
        return Err(CliError::Config("--d must be at least 2".into()));
    }
    Ok(d)
}

/// `(δ, δ₁)` from the schedule or the explicit flags.
fn radii(cfg: &ExperimentConfig, n: usize) -> Result<(f64, Option<f64>), CliError> {
    if cfg.schedule {
        let (delta, delta1) = delta_schedule(n)?;
        return Ok((delta, Some(cfg.delta1.unwrap_or(delta1))));
    }
    let delta = require(cfg.delta, "delta (or --schedule)")?;
    if !(delta >= 0.0) {
        return Err(CliError::Config("--delta must be nonnegative".into()));
    }
    Ok((delta, cfg.delta1))
}

fn spectrum_set(cfg: &ExperimentConfig) -> Result<Option<Vec<ProbVector>>, CliError> {
    cfg.spectrum_set
        .as_ref()
        .map(|set| set.iter().map(|s| Ok(ProbVector::new(s.clone())?)).collect())
        .transpose()
}

fn eval_options(cfg: &ExperimentConfig) -> EvalOptions {
    EvalOptions { samples: cfg.samples, seed: cfg.seed, ..EvalOptions::default() }
}

fn n_values(cfg: &ExperimentConfig) -> Result<Vec<usize>, CliError> {
    let grid = match (&cfg.n_grid, cfg.n) {
        (Some(g), _) => g.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(CliError::Config("--n or --n-grid is required for this command".into())),
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(CliError::Config("block lengths must be positive".into()));
    }
    Ok(grid)
}

fn c3_value(cfg: &ExperimentConfig, d: usize) -> Result<f64, CliError> {
    Ok(match cfg.c3 {
        C3Choice::Certified => DEFAULT_C3,
        C3Choice::Numeric => info::c3(d)?.numeric_estimate,
    })
}

/// Executes a configuration and returns its table.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let table = match cfg.command {
        Command::Dims => run_dims(cfg)?,
        Command::DecomposeCheck => return run_decompose_check(cfg),
        Command::Distribution => run_distribution(cfg)?,
        Command::Error => run_error(cfg)?,
        Command::Overflow => run_overflow(cfg)?,
        Command::Bounds => run_bounds(cfg)?,
        Command::Exponent => run_exponent(cfg)?,
        Command::LemmaL1 => run_lemma_l1(cfg)?,
        Command::LemmaL2 => run_lemma_l2(cfg)?,
        Command::Sec6Gap => run_sec6(cfg)?,
        Command::FixedLength => run_fixed_length(cfg)?,
    };
    Ok(RunOutput { table, failed_check: None })
}

fn run_dims(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = require_n(cfg)?;
    let d = dimension(cfg, None)?;
    let mut t = Table::new(&["lambda", "dim_u", "dim_v", "dim_w", "method"]);
    for lam in enumerate_young(n, d) {
        let u = dim_su(&lam, d)?;
        let v = dim_sym(&lam);
        let w = &u * &v;
        t.push(vec![json!(lam.to_string()), json!(u.to_string()), json!(v.to_string()), json!(w.to_string()), json!("exact")]);
    }
    Ok(t)
}

fn run_decompose_check(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let n = require_n(cfg)?;
    let d = dimension(cfg, None)?;
    if n > MAX_PERMUTATION_N {
        return Err(Error::BudgetExceeded { requested: n, max: MAX_PERMUTATION_N }.into());
    }
    let dim = (d as u128).checked_pow(n as u32).filter(|&x| x <= DEFAULT_MAX_DIM as u128);
    let Some(dim) = dim else {
        return Err(Error::BudgetExceeded { requested: usize::MAX, max: DEFAULT_MAX_DIM }.into());
    };
    let dim = dim as usize;
    let projectors = young_projectors(n, d)?;
    let mut dim_sum = num_bigint::BigUint::from(0u32);
    for p in &projectors {
        dim_sum += dim_su(&p.lambda, d)? * dim_sym(&p.lambda);
    }
    let dim_gap = if dim_sum == num_bigint::BigUint::from(dim) { 0.0 } else { 1.0 };
    let mut total = ComplexMatrix::zeros(dim, dim);
    let (mut herm, mut idem, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    for (i, p) in projectors.iter().enumerate() {
        total += &p.matrix;
        herm = herm.max(max_abs(&(&p.matrix - p.matrix.adjoint())));
        idem = idem.max(max_abs(&(&p.matrix * &p.matrix - &p.matrix)));
        for q in &projectors[i + 1..] {
            orth = orth.max(max_abs(&(&p.matrix * &q.matrix)));
        }
    }
    let complete = max_abs(&(total - identity(dim)));
    let mut t = Table::new(&["check", "residual", "tolerance", "pass", "method"]);
    let checks = [("dimension_sum", dim_gap, 0.0), ("completeness", complete, DECOMPOSE_TOL), ("hermiticity", herm, DECOMPOSE_TOL), ("idempotence", idem, DECOMPOSE_TOL), ("orthogonality", orth, DECOMPOSE_TOL)];
    let mut failed = Vec::new();
    for (name, residual, tol) in checks {
        let pass = residual <= tol;
        if !pass {
            failed.push(name);
        }
        t.push(vec![json!(name), num(residual), num(tol), json!(pass), json!("exact")]);
    }
    let failed_check = (!failed.is_empty()).then(|| failed.join(", "));
    Ok(RunOutput { table: t, failed_check })
}

fn build_code(cfg: &ExperimentConfig, n: usize, d: usize, source: Option<&Source>) -> Result<VLCode, CliError> {
    let (delta, delta1) = radii(cfg, n)?;
    let params = match (cfg.spectrum_set.is_some(), delta1, cfg.schedule) {
        (true, Some(d1), _) => CodeParams::restricted(n, d, delta, d1, SpectrumSet::Points(spectrum_set(cfg)?.unwrap_or_default())),
        (true, None, _) => return Err(CliError::Config("--set needs --delta1 or --schedule".into())),
        (false, Some(d1), false) => {
            let own = source.map(|s| sorted_spectrum(&s.average())).ok_or_else(|| CliError::Config("--delta1 needs a source".into()))?;
            CodeParams::restricted(n, d, delta, d1, SpectrumSet::Points(vec![own]))
        }
        _ => CodeParams::new(n, d, delta),
    };
    Ok(VLCode::new(params)?)
}

fn run_distribution(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = require_n(cfg)?;
    let source = require_source(cfg)?;
    let d = dimension(cfg, Some(&source))?;
    let code = build_code(cfg, n, d, Some(&source))?;
    let stats = outcome_stats(&code, &source, &eval_options(cfg))?;
    let mut t = Table::new(&["k", "probability", "coding_length", "per_symbol_length", "error_contribution", "method"]);
    for r in stats.records(&code) {
        t.push(vec![
            json!(r.k.to_string()),
            num(r.probability),
            num(r.coding_length),
            num(r.coding_length / n as f64),
            num(r.error_contribution),
            json!(method_name(stats.method)),
        ]);
    }
    Ok(t)
}

fn run_error(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = require_n(cfg)?;
    let source = require_source(cfg)?;
    let d = dimension(cfg, Some(&source))?;
    let code = build_code(cfg, n, d, Some(&source))?;
    let stats = outcome_stats(&code, &source, &eval_options(cfg))?;
    let mut t = Table::new(&["criterion", "n", "delta", "value", "std_error", "method"]);
    let delta = code.params().delta;
    for (name, est) in [("epsilon", stats.error()), ("epsilon_dprime", stats.error_dprime())] {
        t.push(vec![json!(name), json!(n), num(delta), num(est.value), opt_num(est.std_error), json!(method_name(est.method))]);
    }
    if cfg.local_error {
        let local = average_error_prime(&code, &source)?;
        t.push(vec![json!("epsilon_prime"), json!(n), num(delta), num(local), Value::Null, json!("exact")]);
    }
    Ok(t)
}

fn run_overflow(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = require_spectrum(cfg)?;
    let rate = require(cfg.rate, "rate")?;
    let d = dimension(cfg, None).unwrap_or(p.d());
    if d != p.d() {
        return Err(CliError::Config("--d disagrees with the spectrum".into()));
    }
    let limit = if rate <= (d as f64).ln() {
        Some(info::theorem2_exponent(&ExponentProblem { rate, p: p.clone(), family: SpectrumFamily::All })?)
    } else {
        None
    };
    let mut t = Table::new(&["n", "delta", "rate", "probability", "ln_probability", "exponent", "theorem2_exponent", "method"]);
    for n in n_values(cfg)? {
        let (delta, _) = radii(cfg, n)?;
        let code = VLCode::new(CodeParams::new(n, d, delta))?;
        let lp = code.ln_overflow_probability(&p, rate)?;
        t.push(vec![
            json!(n),
            num(delta),
            num(rate),
            num(lp.exp()),
            num(lp),
            num(-lp / n as f64),
            opt_num(limit.or(Some(f64::INFINITY))),
            json!("exact"),
        ]);
    }
    Ok(t)
}

fn report_row(t: &mut Table, r: &BoundReport, method: &str) {
    let sense = match r.sense {
        BoundSense::Upper => "lhs<=rhs",
        BoundSense::Lower => "lhs>=rhs",
    };
    t.push(vec![json!(r.name), num(r.rhs_value), opt_num(r.lhs_value), json!(sense), json!(r.satisfied), json!(method)]);
}

fn run_bounds(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = require_n(cfg)?;
    let source = load_source(cfg)?;
    let d = dimension(cfg, source.as_ref())?;
    let (delta, delta1) = radii(cfg, n)?;
    let c3 = c3_value(cfg, d)?;
    let opts = eval_options(cfg);
    let inputs = json!({ "n": n, "d": d, "delta": delta, "c3": c3 });
    let mut t = Table::new(&["bound", "rhs", "lhs", "sense", "satisfied", "method"]);
    let code = VLCode::new(CodeParams::new(n, d, delta))?;
    let stats = source.as_ref().map(|s| outcome_stats(&code, s, &opts)).transpose()?;
    let e1 = bounds::bound_e1(n, d, delta, c3)?;
    let e13 = bounds::bound_e1_3(n, d, delta, c3)?;
    report_row(&mut t, &BoundReport::new("e1", inputs.clone(), e1, stats.as_ref().map(|s| s.error().value), BoundSense::Upper), "closed-form");
    report_row(&mut t, &BoundReport::new("e1-3", inputs.clone(), e13, stats.as_ref().map(|s| s.error_dprime().value), BoundSense::Upper), "closed-form");
    let spec = source.as_ref().map(|s| sorted_spectrum(&s.average()));
    if let (Some(rate), Some(p)) = (cfg.rate, spec.as_ref()) {
        let rhs = bounds::bound_e2(n, delta, rate, p)?;
        let lhs = -code.ln_overflow_probability(p, rate)? / n as f64;
        report_row(&mut t, &BoundReport::new("e2", inputs.clone(), rhs, Some(lhs), BoundSense::Lower), "closed-form");
    }
    if let (Some(d1), Some(src), Some(p)) = (delta1, source.as_ref(), spec.as_ref()) {
        let set = SpectrumSet::Points(spectrum_set(cfg)?.unwrap_or_else(|| vec![p.clone()]));
        let restricted = VLCode::new(CodeParams::restricted(n, d, delta, d1, set.clone()))?;
        let err = outcome_stats(&restricted, src, &opts)?.error().value;
        let rhs = bounds::bound_e12(n, d, delta, d1, c3)?;
        report_row(&mut t, &BoundReport::new("e12", inputs.clone(), rhs, Some(err), BoundSense::Upper), "closed-form");
        if let Some(rate) = cfg.rate {
            let rhs = bounds::bound_e22(n, delta, d1, &set, rate, p)?;
            let lhs = -restricted.ln_overflow_probability(p, rate)? / n as f64;
            report_row(&mut t, &BoundReport::new("e22", inputs.clone(), rhs, Some(lhs), BoundSense::Lower), "closed-form");
        }
    }
    Ok(t)
}

fn run_exponent(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = require_spectrum(cfg)?;
    let rate = require(cfg.rate, "rate")?;
    let family = match spectrum_set(cfg)? {
        Some(centers) => SpectrumFamily::Near { centers, radius: cfg.delta1.unwrap_or(0.0) },
        None => SpectrumFamily::All,
    };
    // above ln d no spectrum overflows, so the probability is 0
    let value = if rate > (p.d() as f64).ln() {
        f64::INFINITY
    } else {
        info::theorem2_exponent(&ExponentProblem { rate, p, family })?
    };
    let mut t = Table::new(&["rate", "exponent", "method"]);
    t.push(vec![num(rate), num(value), json!("closed-form")]);
    Ok(t)
}

fn two_letter_spectrum(cfg: &ExperimentConfig) -> Result<ProbVector, CliError> {
    let spec = cfg.spectrum.as_ref().ok_or_else(|| CliError::Config("--spectrum is required for this command".into()))?;
    let p = parse_spectrum(spec)?;
    if p.d() != 2 {
        return Err(CliError::Config("this command needs a two-letter spectrum".into()));
    }
    Ok(p)
}

fn run_lemma_l1(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = two_letter_spectrum(cfg)?;
    let limit = bounds::lemma_l1_limit(&p)?;
    let source = Source::classical(p.entries())?;
    let opts = eval_options(cfg);
    let mut t = Table::new(&["n", "error", "method", "limit_lower_bound"]);
    for n in n_values(cfg)? {
        let code = VLCode::new(CodeParams::new(n, 2, 0.0))?;
        let est = outcome_stats(&code, &source, &opts)?.error();
        t.push(vec![json!(n), num(est.value), json!(method_name(est.method)), num(limit)]);
    }
    Ok(t)
}

fn run_lemma_l2(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = two_letter_spectrum(cfg)?;
    let schedule: Vec<(usize, f64)> = n_values(cfg)?
        .into_iter()
        .map(|n| (n, cfg.delta.unwrap_or_else(|| (n as f64).powf(-0.25))))
        .collect();
    let mut t = Table::new(&["n", "delta", "error", "exponent", "upper_bound", "method"]);
    for r in bounds::lemma_l2_diagnostic(&p, &schedule)? {
        t.push(vec![json!(r.n), num(r.delta), num(r.error), num(r.exponent), num(r.upper_bound), json!("exact")]);
    }
    Ok(t)
}

fn run_sec6(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let t1 = require(cfg.t1, "t1")?;
    let t0 = require(cfg.t0, "t0")?;
    let dt = require(cfg.delta_theta, "delta-theta")?;
    let e = bounds::sec6_exponents(t1, t0, dt)?;
    let mut t = Table::new(&["t1", "t0", "delta_theta", "gap", "theorem1_bound", "theorem2_exponent", "difference", "method"]);
    t.push(vec![num(t1), num(t0), num(dt), num(e.gap), num(e.theorem1), num(e.theorem2), num(e.theorem1 - e.theorem2), json!("closed-form")]);
    Ok(t)
}

fn run_fixed_length(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = require_n(cfg)?;
    let source = require_source(cfg)?;
    let d = dimension(cfg, Some(&source))?;
    let rate = require(cfg.rate, "rate")?;
    let code = build_code(cfg, n, d, Some(&source))?;
    let fixed = to_fixed_length(&code, rate, &source, &eval_options(cfg))?;
    let increase = fixed.error - fixed.variable_error;
    let mut t = Table::new(&["rate", "variable_error", "fixed_error", "overflow", "error_increase", "inequality_holds", "method"]);
    t.push(vec![
        num(rate),
        num(fixed.variable_error),
        num(fixed.error),
        num(fixed.overflow),
        num(increase),
        json!(increase <= fixed.overflow + 1e-12),
        json!("exact"),
    ]);
    Ok(t)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonOutput {
    pub config: ExperimentConfig,
    pub results: Vec<Map<String, Value>>,
    pub version: String,
    pub seed: u64,
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Serializes a table; refuses empty results.
pub fn render(table: &Table, cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    if table.rows.is_empty() {
        return Err(CliError::Config("no results to emit".into()));
    }
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell_text)).map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Json => {
            let results = table
                .rows
                .iter()
                .map(|row| table.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect())
                .collect();
            let out = JsonOutput { config: cfg.clone(), results, version: VERSION.to_string(), seed: cfg.seed };
            let mut bytes = serde_json::to_vec_pretty(&out).map_err(|e| CliError::Io(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// Writes rendered output to the configured path, or stdout.
pub fn emit(table: &Table, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let bytes = render(table, cfg)?;
    match &cfg.output {
        Some(path) => fs::write(path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Runs, emits and maps the outcome to a process exit code.
pub fn execute(cfg: &ExperimentConfig) -> i32 {
    let result = run(cfg).and_then(|out| {
        emit(&out.table, cfg)?;
        match out.failed_check {
            Some(msg) => Err(CliError::Check(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qvlc: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qvlc", version, about = "Universal variable-length compression of quantum sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// Worker threads; 0 keeps the default pool.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Young indices with SU(d) and S_n irrep dimensions.
    Dims(Flags),
    /// Builds the block projectors and checks the decomposition.
    DecomposeCheck(Flags),
    /// Outcome distribution, coding lengths and error contributions.
    Distribution(Flags),
    /// Average errors of the universal code.
    Error(Flags),
    /// Overflow probability of the coding length.
    Overflow(Flags),
    /// Finite-n error and overflow bounds against exact values.
    Bounds(Flags),
    /// Optimal overflow exponent.
    Exponent(Flags),
    /// Error of the zero-radius code on an orthogonal two-letter source.
    LemmaL1(Flags),
    /// Error exponents with a shrinking radius.
    LemmaL2(Flags),
    /// Exponent gap in the rotated-qubit family.
    Sec6Gap(Flags),
    /// Fixed-length conversion and its error increase.
    FixedLength(Flags),
    /// Runs a saved JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Use δ = n^(-1/4), δ₁ = n^(-1/4) − n^(-1/3).
    #[arg(long)]
    pub schedule: bool,
    /// Comma-separated descending weights, e.g. 0.75,0.25.
    #[arg(long)]
    pub spectrum: Option<String>,
    /// JSON source file with explicit density matrices.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Spectra separated by ';', e.g. "0.7,0.3;0.9,0.1".
    #[arg(long = "set")]
    pub spectrum_set: Option<String>,
    /// start:end:step or a comma-separated list.
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long, default_value_t = default_samples())]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta_theta: Option<f64>,
    /// Also compute the per-copy error by dense simulation.
    #[arg(long)]
    pub local_error: bool,
    #[arg(long, value_enum, default_value_t = C3Choice::Certified)]
    pub c3: C3Choice,
}

fn parse_reals(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::Config(format!("'{s}': {e}"))))
        .collect()
}

/// `start:end:step` (inclusive) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, CliError> {
    let int = |s: &str| s.trim().parse::<usize>().map_err(|e| CliError::Config(format!("'{s}': {e}")));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (int(start)?, int(end)?, int(step)?);
            if step == 0 || start > end {
                return Err(CliError::Config(format!("bad grid '{text}'")));
            }
            Ok((start..=end).step_by(step).collect())
        }
        [_] => text.split(',').map(int).collect(),
        _ => Err(CliError::Config(format!("bad grid '{text}'"))),
    }
}

impl CliCommand {
    /// The configuration this invocation describes; `None` for `run`.
    pub fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let (command, f) = match self {
            CliCommand::Dims(f) => (Command::Dims, f),
            CliCommand::DecomposeCheck(f) => (Command::DecomposeCheck, f),
            CliCommand::Distribution(f) => (Command::Distribution, f),
            CliCommand::Error(f) => (Command::Error, f),
            CliCommand::Overflow(f) => (Command::Overflow, f),
            CliCommand::Bounds(f) => (Command::Bounds, f),
            CliCommand::Exponent(f) => (Command::Exponent, f),
            CliCommand::LemmaL1(f) => (Command::LemmaL1, f),
            CliCommand::LemmaL2(f) => (Command::LemmaL2, f),
            CliCommand::Sec6Gap(f) => (Command::Sec6Gap, f),
            CliCommand::FixedLength(f) => (Command::FixedLength, f),
            CliCommand::Run { config } => {
                let text = fs::read_to_string(&config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
                return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())));
            }
        };
        Ok(ExperimentConfig {
            command,
            n: f.n,
            d: f.d,
            delta: f.delta,
            delta1: f.delta1,
            rate: f.rate,
            schedule: f.schedule,
            spectrum: f.spectrum.as_deref().map(parse_reals).transpose()?,
            source: f.source,
            spectrum_set: f.spectrum_set.as_deref().map(|s| s.split(';').map(parse_reals).collect()).transpose()?,
            n_grid: f.n_grid.as_deref().map(parse_grid).transpose()?,
            samples: f.samples,
            seed: f.seed,
            format: f.format,
            output: f.output,
            t1: f.t1,
            t0: f.t0,
            delta_theta: f.delta_theta,
            local_error: f.local_error,
            c3: f.c3,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> ExperimentConfig {
        ExperimentConfig::new(command)
    }

    #[test]
    fn dims_rows_sum_to_total_dimension() {
        let mut c = cfg(Command::Dims);
        c.n = Some(3);
        c.d = Some(2);
        let t = run(&c).unwrap().table;
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0][0], json!("(3,0)"));
        assert_eq!(t.rows[1][0], json!("(2,1)"));
        let total: u64 = t.rows.iter().map(|r| r[3].as_str().unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn decompose_check_passes() {
        let mut c = cfg(Command::DecomposeCheck);
        c.n = Some(4);
        c.d = Some(2);
        let out = run(&c).unwrap();
        assert!(out.failed_check.is_none());
        assert!(out.table.rows.iter().all(|r| r[3] == json!(true)));
        c.n = Some(12);
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_fields_are_config_errors() {
        let c = cfg(Command::Error);
        assert_eq!(run(&c).unwrap_err().exit_code(), 1);
        let mut bad = cfg(Command::Overflow);
        bad.spectrum = Some(vec![0.3, 0.7]);
        bad.rate = Some(0.5);
        bad.n = Some(10);
        bad.delta = Some(0.1);
        assert_eq!(run(&bad).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("50:200:50").unwrap(), vec![50, 100, 150, 200]);
        assert_eq!(parse_grid("3,5, 8").unwrap(), vec![3, 5, 8]);
        assert!(parse_grid("5:1:1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let mut c = cfg(Command::LemmaL1);
        c.spectrum = Some(vec![0.75, 0.25]);
        c.n_grid = Some(vec![10, 20, 30]);
        let t = run(&c).unwrap().table;
        let text = String::from_utf8(render(&t, &c).unwrap()).unwrap();
        assert_eq!(text.lines().count(), t.rows.len() + 1);
        assert!(text.starts_with("n,error,method,limit_lower_bound\n"));
    }

    #[test]
    fn json_config_round_trips() {
        let mut c = cfg(Command::Error);
        c.n = Some(4);
        c.delta = Some(0.3);
        c.spectrum = Some(vec![0.6, 0.4]);
        c.seed = 17;
        c.format = Format::Json;
        let t = run(&c).unwrap().table;
        let bytes = render(&t, &c).unwrap();
        let parsed: JsonOutput = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(parsed.config, c);
        assert_eq!(parsed.seed, 17);
        assert_eq!(parsed.version, VERSION);
        assert_eq!(parsed.results.len(), t.rows.len());
    }

    #[test]
    fn empty_results_are_refused() {
        let c = cfg(Command::Dims);
        let t = Table::new(&["a"]);
        assert!(render(&t, &c).is_err());
    }

    #[test]
    fn source_file_parses() {
        let file: SourceFile = serde_json::from_str(
            r#"{"d": 2, "atoms": [
                {"weight": 0.5, "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
                {"weight": 0.5, "matrix": [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]]}
            ]}"#,
        )
        .unwrap();
        let source = file.to_source().unwrap();
        assert_eq!(source.atoms().len(), 2);
        let bad = SourceFile { d: 2, atoms: vec![SourceAtom { weight: 1.0, matrix: vec![vec![[1.0, 0.0]]] }] };
        assert!(bad.to_source().is_err());
    }

    #[test]
    fn non_finite_values_become_strings() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(1.5), json!(1.5));
    }
}
