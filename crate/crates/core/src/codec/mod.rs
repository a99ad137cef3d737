//! The universal variable-length code: outcome lattice `Y_{δ,n}`, the
//! instrument `M_𝐤 = P_𝐤/C₁(nδ)`, coding lengths and overflow
//! probabilities.

pub mod dense;
pub mod evaluate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{sum_zero_ball, within_radius, ProbVector};
use crate::schur_weyl;
use crate::young::{enumerate_young, ln_dim_su, ln_dim_sym, log_sum_exp, YoungIndex};

pub use evaluate::{
    average_error_dprime, average_error_exact, outcome_stats, to_fixed_length, ErrorEstimate, EvalMethod,
    EvalOptions, FixedLengthCode, OutcomeStats,
};

/// Spectra the restricted code keeps outcomes near.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "snake_case")]
pub enum SpectrumSet {
    /// No spectral restriction: every outcome is kept.
    Whole,
    /// Sorted spectra `𝐩(ρ)` of the members of `𝒮`.
    Points(Vec<ProbVector>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub delta1: Option<f64>,
    pub spectrum_set: Option<SpectrumSet>,
}

impl CodeParams {
    pub fn new(n: usize, d: usize, delta: f64) -> Self {
        Self { n, d, delta, delta1: None, spectrum_set: None }
    }

    pub fn restricted(n: usize, d: usize, delta: f64, delta1: f64, set: SpectrumSet) -> Self {
        Self { n, d, delta, delta1: Some(delta1), spectrum_set: Some(set) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("n and d must be positive"));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid(format!("delta {} must be finite and nonnegative", self.delta)));
        }
        if let Some(d1) = self.delta1 {
            if !(d1 >= 0.0 && d1 < self.delta) {
                return Err(Error::invalid(format!("delta1 {d1} must lie in [0, delta)")));
            }
        }
        if let Some(SpectrumSet::Points(points)) = &self.spectrum_set {
            if points.is_empty() {
                return Err(Error::invalid("spectrum set is empty"));
            }
            if let Some(p) = points.iter().find(|p| p.d() != self.d) {
                return Err(Error::SizeMismatch { expected: self.d, got: p.d() });
            }
        }
        if self.delta1.is_some() != self.spectrum_set.is_some() {
            return Err(Error::invalid("delta1 and spectrum_set must be given together"));
        }
        Ok(())
    }

    pub fn is_restricted(&self) -> bool {
        self.spectrum_set.is_some()
    }
}

/// `δ = n^{−1/4}`, `δ₁ = n^{−1/4} − n^{−1/3}`; `δ₁ = δ/2` when that is not positive.
pub fn delta_schedule(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("the schedule needs n >= 1"));
    }
    let nf = n as f64;
    let delta = nf.powf(-0.25);
    let delta1 = delta - nf.powf(-1.0 / 3.0);
    Ok((delta, if delta1 > 0.0 { delta1 } else { delta / 2.0 }))
}

/// An outcome of the encoder: a lattice point `𝐤` or the reject symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeLabel {
    Point(Vec<i64>),
    Reject,
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::Reject => write!(f, "0"),
            OutcomeLabel::Point(k) => {
                write!(f, "(")?;
                for (i, v) in k.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// One lattice outcome with the Young indices inside its ball.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub k: Vec<i64>,
    /// Indices into [`VLCode::young`].
    pub members: Vec<usize>,
    /// `ln dim ℋ_𝐤 = ln Σ_{𝐧 ∈ members} dim 𝒰_𝐧 dim 𝒱_𝐧`.
    pub ln_dim: f64,
}

#[derive(Debug, Clone)]
pub struct VLCode {
    params: CodeParams,
    c1: usize,
    young: Vec<YoungIndex>,
    outcomes: Vec<Outcome>,
    /// For each Young index, how many retained outcomes contain it.
    coverage: Vec<usize>,
}

/// `Y_{δ,n}`: lattice points with coordinate sum `n` within `nδ` of a Young index.
pub fn data_set(params: &CodeParams) -> Result<Vec<Vec<i64>>> {
    params.validate()?;
    Ok(lattice_members(params).into_keys().rev().collect())
}

fn lattice_members(params: &CodeParams) -> BTreeMap<Vec<i64>, Vec<usize>> {
    let young = enumerate_young(params.n, params.d);
    let offsets = sum_zero_ball(params.n as f64 * params.delta, params.d);
    let mut map: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (idx, lam) in young.iter().enumerate() {
        for v in &offsets {
            let k: Vec<i64> = lam.parts().iter().zip(v).map(|(&a, &b)| a as i64 + b).collect();
            map.entry(k).or_default().push(idx);
        }
    }
    map
}

fn near_spectrum_set(k: &[i64], n: usize, set: &SpectrumSet, radius: f64) -> bool {
    match set {
        SpectrumSet::Whole => true,
        SpectrumSet::Points(points) => points.iter().any(|p| {
            let sq: f64 = p.sorted_desc().entries().iter().zip(k).map(|(a, &b)| (a - b as f64 / n as f64).powi(2)).sum();
            within_radius(sq, radius)
        }),
    }
}

/// `Y_{δ,δ₁,n}(𝒮)` followed by the reject symbol.
pub fn restricted_data_set(params: &CodeParams) -> Result<Vec<OutcomeLabel>> {
    params.validate()?;
    let (Some(delta1), Some(set)) = (params.delta1, params.spectrum_set.as_ref()) else {
        return Err(Error::invalid("restricted data set needs delta1 and spectrum_set"));
    };
    let mut out: Vec<OutcomeLabel> = data_set(params)?
        .into_iter()
        .filter(|k| near_spectrum_set(k, params.n, set, delta1))
        .map(OutcomeLabel::Point)
        .collect();
    out.push(OutcomeLabel::Reject);
    Ok(out)
}

impl VLCode {
    pub fn new(params: CodeParams) -> Result<Self> {
        params.validate()?;
        let young = enumerate_young(params.n, params.d);
        let ln_dim_w: Vec<f64> = young
            .iter()
            .map(|l| Ok(ln_dim_su(l, params.d)? + ln_dim_sym(l)))
            .collect::<Result<_>>()?;
        let c1 = crate::info::c1(params.n as f64 * params.delta, params.d);
        let mut outcomes = Vec::new();
        let mut coverage = vec![0usize; young.len()];
        for (k, members) in lattice_members(&params).into_iter().rev() {
            if let (Some(delta1), Some(set)) = (params.delta1, params.spectrum_set.as_ref()) {
                if !near_spectrum_set(&k, params.n, set, delta1) {
                    continue;
                }
            }
            for &m in &members {
                coverage[m] += 1;
            }
            let logs: Vec<f64> = members.iter().map(|&m| ln_dim_w[m]).collect();
            outcomes.push(Outcome { k, members, ln_dim: log_sum_exp(&logs) });
        }
        Ok(Self { params, c1, young, outcomes, coverage })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    /// `C_{1,d}(nδ)`.
    pub fn c1(&self) -> usize {
        self.c1
    }

    pub fn young(&self) -> &[YoungIndex] {
        &self.young
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn has_reject(&self) -> bool {
        self.params.is_restricted()
    }

    /// `|Ω_n|`, counting the reject symbol when present.
    pub fn alphabet_size(&self) -> usize {
        self.outcomes.len() + usize::from(self.has_reject())
    }

    /// How many retained outcomes contain each Young index.
    pub fn coverage(&self) -> &[usize] {
        &self.coverage
    }

    /// Checks `Σ_𝐤 M_𝐤 = I` blockwise: every Young index lies in exactly
    /// `C₁` outcome balls. Restricted codes pass when the reject
    /// operator absorbs the remainder.
    pub fn is_complete(&self) -> bool {
        self.coverage.iter().all(|&c| if self.has_reject() { c <= self.c1 } else { c == self.c1 })
    }

    pub fn labels(&self) -> Vec<OutcomeLabel> {
        let mut out: Vec<OutcomeLabel> = self.outcomes.iter().map(|o| OutcomeLabel::Point(o.k.clone())).collect();
        if self.has_reject() {
            out.push(OutcomeLabel::Reject);
        }
        out
    }

    /// `ln|Ω_n| + ln dim ℋ_𝐤`; the reject symbol carries no quantum part.
    pub fn coding_length(&self, label: &OutcomeLabel) -> Result<f64> {
        let ln_omega = (self.alphabet_size() as f64).ln();
        match label {
            OutcomeLabel::Reject if self.has_reject() => Ok(ln_omega),
            OutcomeLabel::Reject => Err(Error::invalid("this code has no reject symbol")),
            OutcomeLabel::Point(k) => self
                .outcomes
                .iter()
                .find(|o| &o.k == k)
                .map(|o| ln_omega + o.ln_dim)
                .ok_or_else(|| Error::invalid(format!("{label} is not an outcome of this code"))),
        }
    }

    /// Coding lengths aligned with [`VLCode::labels`].
    pub fn coding_lengths(&self) -> Vec<f64> {
        let ln_omega = (self.alphabet_size() as f64).ln();
        let mut out: Vec<f64> = self.outcomes.iter().map(|o| ln_omega + o.ln_dim).collect();
        if self.has_reject() {
            out.push(ln_omega);
        }
        out
    }

    fn check_blocks(&self, blocks: &[f64]) -> Result<()> {
        if blocks.len() != self.young.len() {
            return Err(Error::SizeMismatch { expected: self.young.len(), got: blocks.len() });
        }
        Ok(())
    }

    /// Outcome probabilities `Σ_{𝐧 ∈ 𝐤} Tr P_𝐧 ρ / C₁`, aligned with
    /// [`VLCode::labels`], from block probabilities aligned with
    /// [`VLCode::young`].
    pub fn outcome_distribution(&self, blocks: &[f64]) -> Result<Vec<(OutcomeLabel, f64)>> {
        self.check_blocks(blocks)?;
        let c1 = self.c1 as f64;
        let mut out: Vec<(OutcomeLabel, f64)> = self
            .outcomes
            .iter()
            .map(|o| (OutcomeLabel::Point(o.k.clone()), o.members.iter().map(|&m| blocks[m]).sum::<f64>() / c1))
            .collect();
        if self.has_reject() {
            let reject: f64 = blocks
                .iter()
                .zip(&self.coverage)
                .map(|(b, &c)| b * (self.c1 - c) as f64 / c1)
                .sum();
            out.push((OutcomeLabel::Reject, reject));
        }
        Ok(out)
    }

    /// `ln` of each outcome probability, from `ln` block probabilities.
    pub fn ln_outcome_distribution(&self, ln_blocks: &[f64]) -> Result<Vec<(OutcomeLabel, f64)>> {
        self.check_blocks(ln_blocks)?;
        let ln_c1 = (self.c1 as f64).ln();
        let mut out: Vec<(OutcomeLabel, f64)> = self
            .outcomes
            .iter()
            .map(|o| {
                let logs: Vec<f64> = o.members.iter().map(|&m| ln_blocks[m]).collect();
                (OutcomeLabel::Point(o.k.clone()), log_sum_exp(&logs) - ln_c1)
            })
            .collect();
        if self.has_reject() {
            let logs: Vec<f64> = ln_blocks
                .iter()
                .zip(&self.coverage)
                .filter(|(_, &c)| c < self.c1)
                .map(|(b, &c)| b + ((self.c1 - c) as f64).ln())
                .collect();
            out.push((OutcomeLabel::Reject, log_sum_exp(&logs) - ln_c1));
        }
        Ok(out)
    }

    /// `ln Tr P_𝐧 ρ^{⊗n}` for every Young index.
    pub fn ln_blocks_iid(&self, spec: &ProbVector) -> Result<Vec<f64>> {
        if spec.d() != self.d() {
            return Err(Error::SizeMismatch { expected: self.d(), got: spec.d() });
        }
        self.young.iter().map(|l| schur_weyl::ln_block_prob_iid(l, spec.entries())).collect()
    }

    pub fn blocks_iid(&self, spec: &ProbVector) -> Result<Vec<f64>> {
        Ok(self.ln_blocks_iid(spec)?.into_iter().map(|l| schur_weyl::clip_probability(l.exp())).collect())
    }

    /// `ln P{ length/n ≥ R }` under `ρ^{⊗n}` with spectrum `spec`.
    pub fn ln_overflow_probability(&self, spec: &ProbVector, rate: f64) -> Result<f64> {
        if !(rate >= 0.0) {
            return Err(Error::invalid(format!("rate {rate} must be nonnegative")));
        }
        let dist = self.ln_outcome_distribution(&self.ln_blocks_iid(spec)?)?;
        let threshold = rate * self.n() as f64;
        let logs: Vec<f64> = dist
            .iter()
            .zip(self.coding_lengths())
            .filter(|(_, len)| *len >= threshold)
            .map(|((_, lp), _)| *lp)
            .collect();
        Ok(log_sum_exp(&logs).min(0.0))
    }

    pub fn overflow_probability(&self, spec: &ProbVector, rate: f64) -> Result<f64> {
        Ok(self.ln_overflow_probability(spec, rate)?.exp())
    }

    /// Largest per-symbol coding length over all outcomes.
    pub fn max_rate(&self) -> f64 {
        self.coding_lengths().into_iter().fold(0.0, f64::max) / self.n() as f64
    }
}
