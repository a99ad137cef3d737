//! Closed-chain error functionals and the fixed-length conversion.
//!
//! `Tr P_𝐤 ρ⃗` is invariant under permuting the tensor factors of `ρ⃗`,
//! so the expectation over `p^n` only depends on how often each atom
//! occurs. Exact evaluation sums over those atom counts with multinomial
//! weights; larger problems fall back to Monte Carlo over counts.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OutcomeLabel, VLCode};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, ProductState, Source};
use crate::schur_weyl::block_probs_product;
use crate::young::{ln_binomial, ln_multinomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Monte Carlo sample count.
    pub samples: usize,
    pub seed: u64,
    /// Largest number of atom-count vectors summed exactly.
    pub max_types: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, max_types: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EvalMethod {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub value: f64,
    /// Standard error of the Monte Carlo mean; `None` when exact.
    pub std_error: Option<f64>,
    pub method: EvalMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub k: OutcomeLabel,
    pub probability: f64,
    /// Nats.
    pub coding_length: f64,
    /// `P(𝐤) − E[(Tr P_𝐤 ρ⃗)^{3/2}]/C₁`; the reject symbol is charged its full probability.
    pub error_contribution: f64,
}

/// Per-outcome expectations aligned with [`VLCode::labels`].
#[derive(Debug, Clone)]
pub struct OutcomeStats {
    pub labels: Vec<OutcomeLabel>,
    /// `E Tr M_𝐤 ρ⃗`.
    pub probability: Vec<f64>,
    /// `E[(Tr P_𝐤 ρ⃗)^{3/2}] / C₁`; zero for the reject symbol.
    pub overlap32: Vec<f64>,
    /// `E[(Tr P_𝐤 ρ⃗)^2] / C₁`; zero for the reject symbol.
    pub overlap2: Vec<f64>,
    pub method: EvalMethod,
    std_error32: Option<f64>,
    std_error2: Option<f64>,
}

impl OutcomeStats {
    pub fn error(&self) -> ErrorEstimate {
        ErrorEstimate {
            value: (1.0 - self.overlap32.iter().sum::<f64>()).clamp(0.0, 1.0),
            std_error: self.std_error32,
            method: self.method,
        }
    }

    pub fn error_dprime(&self) -> ErrorEstimate {
        ErrorEstimate {
            value: (1.0 - self.overlap2.iter().sum::<f64>()).clamp(0.0, 1.0),
            std_error: self.std_error2,
            method: self.method,
        }
    }

    pub fn records(&self, code: &VLCode) -> Vec<OutcomeRecord> {
        self.labels
            .iter()
            .zip(code.coding_lengths())
            .enumerate()
            .map(|(i, (k, len))| OutcomeRecord {
                k: k.clone(),
                probability: self.probability[i],
                coding_length: len,
                error_contribution: (self.probability[i] - self.overlap32[i]).max(0.0),
            })
            .collect()
    }
}

/// Per-outcome `Tr P_𝐤 ρ⃗` (points only) plus the reject mass `Tr M_0 ρ⃗`.
struct TypeOverlaps {
    traces: Vec<f64>,
    reject: f64,
}

fn overlaps_for_counts(code: &VLCode, atoms: &[&DensityMatrix], counts: &[usize]) -> Result<TypeOverlaps> {
    let factors: Vec<DensityMatrix> = atoms
        .iter()
        .zip(counts)
        .flat_map(|(rho, &c)| std::iter::repeat_n((*rho).clone(), c))
        .collect();
    let blocks: Vec<f64> = block_probs_product(&ProductState::new(factors)?)?.into_iter().map(|(_, p)| p).collect();
    let traces = code.outcomes().iter().map(|o| o.members.iter().map(|&m| blocks[m]).sum::<f64>().min(1.0)).collect();
    let c1 = code.c1();
    let reject = blocks.iter().zip(code.coverage()).map(|(b, &c)| b * (c1 - c) as f64).sum::<f64>() / c1 as f64;
    Ok(TypeOverlaps { traces, reject })
}

/// Every vector of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, slot: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == cur.len() {
            cur[slot] = rest;
            out.push(cur.clone());
            return;
        }
        for v in (0..=rest).rev() {
            cur[slot] = v;
            rec(rest - v, slot + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(total, 0, &mut vec![0; parts], &mut out);
    out
}

fn check_source(code: &VLCode, source: &Source) -> Result<()> {
    if source.d() != code.d() {
        return Err(Error::SizeMismatch { expected: code.d(), got: source.d() });
    }
    Ok(())
}

/// Per-outcome expectations over `ρ⃗ ∼ p^n`.
pub fn outcome_stats(code: &VLCode, source: &Source, opts: &EvalOptions) -> Result<OutcomeStats> {
    check_source(code, source)?;
    let (weights, atoms): (Vec<f64>, Vec<&DensityMatrix>) =
        source.atoms().iter().filter(|(w, _)| *w > 0.0).map(|(w, r)| (*w, r)).unzip();
    let n = code.n();
    let ln_types = ln_binomial(n + atoms.len() - 1, atoms.len() - 1);
    if ln_types <= (opts.max_types as f64).ln() + 1e-9 {
        exact_stats(code, &weights, &atoms)
    } else {
        monte_carlo_stats(code, &weights, &atoms, opts)
    }
}

fn finish(
    code: &VLCode,
    mut probability: Vec<f64>,
    mut overlap32: Vec<f64>,
    mut overlap2: Vec<f64>,
    reject: f64,
    method: EvalMethod,
) -> (Vec<OutcomeLabel>, Vec<f64>, Vec<f64>, Vec<f64>, EvalMethod) {
    let c1 = code.c1() as f64;
    for v in probability.iter_mut().chain(overlap32.iter_mut()).chain(overlap2.iter_mut()) {
        *v /= c1;
    }
    if code.has_reject() {
        probability.push(reject);
        overlap32.push(0.0);
        overlap2.push(0.0);
    }
    (code.labels(), probability, overlap32, overlap2, method)
}

fn exact_stats(code: &VLCode, weights: &[f64], atoms: &[&DensityMatrix]) -> Result<OutcomeStats> {
    let types = compositions(code.n(), atoms.len());
    let evaluated: Vec<(f64, TypeOverlaps)> = types
        .par_iter()
        .map(|counts| {
            let ln_w = ln_multinomial(counts)
                + counts.iter().zip(weights).map(|(&c, w)| c as f64 * w.ln()).sum::<f64>();
            Ok((ln_w.exp(), overlaps_for_counts(code, atoms, counts)?))
        })
        .collect::<Result<_>>()?;
    let len = code.outcomes().len();
    let (mut prob, mut o32, mut o2) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut reject = 0.0;
    for (w, ov) in &evaluated {
        for (i, &t) in ov.traces.iter().enumerate() {
            prob[i] += w * t;
            o32[i] += w * t.powf(1.5);
            o2[i] += w * t * t;
        }
        reject += w * ov.reject;
    }
    let (labels, probability, overlap32, overlap2, method) = finish(code, prob, o32, o2, reject, EvalMethod::Exact);
    Ok(OutcomeStats { labels, probability, overlap32, overlap2, method, std_error32: None, std_error2: None })
}

fn sample_counts(weights: &WeightedIndex<f64>, parts: usize, n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut counts = vec![0; parts];
    for _ in 0..n {
        counts[weights.sample(&mut rng)] += 1;
    }
    counts
}

fn monte_carlo_stats(code: &VLCode, weights: &[f64], atoms: &[&DensityMatrix], opts: &EvalOptions) -> Result<OutcomeStats> {
    if opts.samples < 2 {
        return Err(Error::invalid("Monte Carlo needs at least two samples"));
    }
    let dist = WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("atom weights: {e}")))?;
    let draws: Vec<Vec<usize>> = (0..opts.samples as u64)
        .into_par_iter()
        .map(|i| sample_counts(&dist, atoms.len(), code.n(), opts.seed, i))
        .collect();
    let mut multiplicity: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for d in draws {
        *multiplicity.entry(d).or_default() += 1;
    }
    let unique: Vec<(&Vec<usize>, usize)> = multiplicity.iter().map(|(k, &v)| (k, v)).collect();
    let evaluated: Vec<TypeOverlaps> =
        unique.par_iter().map(|(counts, _)| overlaps_for_counts(code, atoms, counts)).collect::<Result<_>>()?;
    let samples = opts.samples as f64;
    let len = code.outcomes().len();
    let (mut prob, mut o32, mut o2) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut reject = 0.0;
    let c1 = code.c1() as f64;
    let (mut s32, mut ss32, mut s2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
    for ((_, mult), ov) in unique.iter().zip(&evaluated) {
        let w = *mult as f64 / samples;
        let (mut f32, mut f2) = (0.0, 0.0);
        for (i, &t) in ov.traces.iter().enumerate() {
            prob[i] += w * t;
            o32[i] += w * t.powf(1.5);
            o2[i] += w * t * t;
            f32 += t.powf(1.5) / c1;
            f2 += t * t / c1;
        }
        reject += w * ov.reject;
        let m = *mult as f64;
        s32 += m * f32;
        ss32 += m * f32 * f32;
        s2 += m * f2;
        ss2 += m * f2 * f2;
    }
    let std_err = |s: f64, ss: f64| {
        let mean = s / samples;
        ((ss / samples - mean * mean).max(0.0) * samples / (samples - 1.0) / samples).sqrt()
    };
    let method = EvalMethod::MonteCarlo { samples: opts.samples };
    let (labels, probability, overlap32, overlap2, method) = finish(code, prob, o32, o2, reject, method);
    Ok(OutcomeStats {
        labels,
        probability,
        overlap32,
        overlap2,
        method,
        std_error32: Some(std_err(s32, ss32)),
        std_error2: Some(std_err(s2, ss2)),
    })
}

/// `ε = 1 − Σ_𝐤 E[(Tr P_𝐤 ρ⃗)^{3/2}] / C₁`.
pub fn average_error_exact(code: &VLCode, source: &Source, opts: &EvalOptions) -> Result<ErrorEstimate> {
    Ok(outcome_stats(code, source, opts)?.error())
}

/// `ε″ = 1 − Σ_𝐤 E[(Tr P_𝐤 ρ⃗)^2] / C₁`.
pub fn average_error_dprime(code: &VLCode, source: &Source, opts: &EvalOptions) -> Result<ErrorEstimate> {
    Ok(outcome_stats(code, source, opts)?.error_dprime())
}

/// The fixed-length code at rate `R`: outcomes of per-symbol length `≥ R`
/// are sent to a failure state and charged error 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedLengthCode {
    pub rate: f64,
    pub kept: Vec<OutcomeLabel>,
    pub failed: Vec<OutcomeLabel>,
    pub error: f64,
    pub variable_error: f64,
    /// Probability of landing in `failed`.
    pub overflow: f64,
}

pub fn to_fixed_length(code: &VLCode, rate: f64, source: &Source, opts: &EvalOptions) -> Result<FixedLengthCode> {
    if !(rate >= 0.0) {
        return Err(Error::invalid(format!("rate {rate} must be nonnegative")));
    }
    let stats = outcome_stats(code, source, opts)?;
    let threshold = rate * code.n() as f64;
    let (mut kept, mut failed) = (Vec::new(), Vec::new());
    let (mut kept_overlap, mut overflow) = (0.0, 0.0);
    for (i, len) in code.coding_lengths().into_iter().enumerate() {
        let label = stats.labels[i].clone();
        if len >= threshold {
            overflow += stats.probability[i];
            failed.push(label);
        } else {
            kept_overlap += stats.overlap32[i];
            kept.push(label);
        }
    }
    Ok(FixedLengthCode {
        rate,
        kept,
        failed,
        error: (1.0 - kept_overlap).clamp(0.0, 1.0),
        variable_error: stats.error().value,
        overflow: overflow.min(1.0),
    })
}
