//! Finite-n error and overflow bounds for the universal code, the
//! block-probability concentration bounds, and the diagnostics for the
//! zero-radius code.
//!
//! Everything with `(n+d)^{cd} e^{−n·x}` is assembled in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{average_error_exact, CodeParams, EvalOptions, SpectrumSet, VLCode};
use crate::error::{Error, Result};
use crate::info::{c1, c2, divergence_of, entropy_of, min_divergence_over, FeasibleSet, ProbVector};
use crate::linalg::Source;
use crate::schur_weyl::ln_block_prob_iid;
use crate::young::{enumerate_young, log_sum_exp, YoungIndex};

/// Points in the `δ₁` grid besides the `C₂` breakpoints.
pub const DELTA1_GRID: usize = 64;

/// Most `C₂` breakpoints added to the grid.
const MAX_BREAKPOINTS: usize = 2048;

/// Default `C_{3,d}`: the certified lower bound.
pub const DEFAULT_C3: f64 = 0.5;

/// Whether a report's quantity must stay below or above the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSense {
    /// `lhs ≤ rhs` (errors and probabilities).
    Upper,
    /// `lhs ≥ rhs` (exponents).
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: serde_json::Value,
    pub rhs_value: f64,
    pub lhs_value: Option<f64>,
    pub sense: BoundSense,
    /// `true` when there is no left-hand side to compare.
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(name: &str, inputs: serde_json::Value, rhs: f64, lhs: Option<f64>, sense: BoundSense) -> Self {
        let satisfied = match (lhs, sense) {
            (None, _) => true,
            (Some(l), BoundSense::Upper) => l <= rhs + 1e-9,
            (Some(l), BoundSense::Lower) => l >= rhs - 1e-9,
        };
        Self { name: name.to_string(), inputs, rhs_value: rhs, lhs_value: lhs, sense, satisfied }
    }
}

fn check_common(n: usize, d: usize, delta: f64) -> Result<()> {
    if n == 0 || d < 2 {
        return Err(Error::invalid("bounds need n >= 1 and d >= 2"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta {delta} must be positive")));
    }
    Ok(())
}

/// `1 − (C₂(nδ₁)/C₁(nδ))(1 − (n+d)^{4d} e^{−nC₃(δ−δ₁)²})^{exponent}`, clamped to `[0,1]`.
fn error_rhs(n: usize, d: usize, delta: f64, delta1: f64, c3: f64, exponent: f64) -> f64 {
    error_rhs_with_c1(n, d, delta, delta1, c3, exponent, c1(n as f64 * delta, d))
}

fn error_rhs_with_c1(n: usize, d: usize, delta: f64, delta1: f64, c3: f64, exponent: f64, c1v: usize) -> f64 {
    let nf = n as f64;
    let ln_x = 4.0 * d as f64 * (nf + d as f64).ln() - nf * c3 * (delta - delta1).powi(2);
    if ln_x >= 0.0 {
        return 1.0;
    }
    let ratio = c2(nf * delta1, d) as f64 / c1v as f64;
    let bracket = (-ln_x.exp()).ln_1p() * exponent;
    (1.0 - ratio * bracket.exp()).clamp(0.0, 1.0)
}

/// Candidate `δ₁ ∈ (0, δ)`: a geometric grid in `δ − δ₁` plus, for two
/// letters, the smallest `δ₁` reaching each value of `C₂`.
fn delta1_candidates(n: usize, d: usize, delta: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..DELTA1_GRID)
        .map(|j| delta * (1.0 - 10f64.powf(-4.0 + 4.0 * j as f64 / (DELTA1_GRID - 1) as f64) * (1.0 - 1e-9)))
        .collect();
    if d == 2 {
        let nf = n as f64;
        let top = (std::f64::consts::SQRT_2 * nf * delta).ceil() as usize;
        let stride = top.div_ceil(MAX_BREAKPOINTS).max(1);
        out.extend(
            (1..=top)
                .step_by(stride)
                .map(|m| m as f64 / (std::f64::consts::SQRT_2 * nf) * (1.0 + 1e-12)),
        );
    }
    out.retain(|&x| x > 0.0 && x < delta);
    out
}

fn error_bound(n: usize, d: usize, delta: f64, c3: f64, exponent: f64) -> Result<f64> {
    check_common(n, d, delta)?;
    let c1v = c1(n as f64 * delta, d);
    Ok(delta1_candidates(n, d, delta)
        .into_par_iter()
        .map(|d1| error_rhs_with_c1(n, d, delta, d1, c3, exponent, c1v))
        .reduce(|| 1.0, f64::min))
}

/// Right-hand side of the `ε` bound, infimum over the `δ₁` grid.
pub fn bound_e1(n: usize, d: usize, delta: f64, c3: f64) -> Result<f64> {
    error_bound(n, d, delta, c3, 1.5)
}

/// The same with exponent 2, bounding `ε″`.
pub fn bound_e1_3(n: usize, d: usize, delta: f64, c3: f64) -> Result<f64> {
    error_bound(n, d, delta, c3, 2.0)
}

/// Restricted-code error bound at the code's own `δ₁`.
pub fn bound_e12(n: usize, d: usize, delta: f64, delta1: f64, c3: f64) -> Result<f64> {
    check_common(n, d, delta)?;
    if !(delta1 > 0.0 && delta1 < delta) {
        return Err(Error::invalid(format!("delta1 {delta1} must lie in (0, delta)")));
    }
    Ok(error_rhs(n, d, delta, delta1, c3, 1.5))
}

fn overflow_exponent_bound(
    n: usize,
    delta: f64,
    rate: f64,
    p: &ProbVector,
    proximity: Option<(&[ProbVector], f64)>,
) -> Result<f64> {
    let d = p.d();
    check_common(n, d, delta)?;
    let nf = n as f64;
    let ln_nd = (nf + d as f64).ln();
    let set = FeasibleSet { min_entropy: rate - 4.0 * d as f64 / nf * ln_nd, proximity };
    let inner = min_divergence_over(&p.sorted_desc(), &set, 2.0 * delta)?;
    Ok(-5.0 * d as f64 / nf * ln_nd + inner)
}

/// Lower bound on `−(1/n) ln P{length/n ≥ R}` for the unrestricted code.
pub fn bound_e2(n: usize, delta: f64, rate: f64, p: &ProbVector) -> Result<f64> {
    overflow_exponent_bound(n, delta, rate, p, None)
}

/// Lower bound on the overflow exponent of the restricted code.
pub fn bound_e22(n: usize, delta: f64, delta1: f64, set: &SpectrumSet, rate: f64, p: &ProbVector) -> Result<f64> {
    match set {
        SpectrumSet::Whole => overflow_exponent_bound(n, delta, rate, p, None),
        SpectrumSet::Points(points) => {
            let sorted: Vec<ProbVector> = points.iter().map(|q| q.sorted_desc()).collect();
            overflow_exponent_bound(n, delta, rate, p, Some((&sorted, delta1)))
        }
    }
}

/// `ln[(n+d)^{3d} e^{−n D(λ/n‖p)}]`.
pub fn ln_bound_e31(lambda: &YoungIndex, p: &ProbVector) -> Result<f64> {
    let d = p.d();
    let lambda = lambda.with_rows(d)?;
    let nf = lambda.n() as f64;
    let p = p.sorted_desc();
    Ok(3.0 * d as f64 * (nf + d as f64).ln() - nf * divergence_of(&lambda.frequencies(), p.entries()))
}

pub fn bound_e31(lambda: &YoungIndex, p: &ProbVector) -> Result<f64> {
    Ok(ln_bound_e31(lambda, p)?.exp())
}

/// A finite union of closed coordinate boxes in the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Each box lists `[lo, hi]` for every coordinate.
    pub boxes: Vec<Vec<(f64, f64)>>,
}

impl Region {
    pub fn new(boxes: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        let d = boxes.first().map_or(0, Vec::len);
        if boxes.iter().any(|b| b.len() != d || b.iter().any(|(lo, hi)| !(lo <= hi))) {
            return Err(Error::invalid("region boxes must share a dimension and have lo <= hi"));
        }
        Ok(Self { boxes })
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.iter().zip(q).all(|((lo, hi), x)| *lo <= *x && *x <= *hi))
    }

    fn interior_contains(&self, q: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.iter().zip(q).all(|((lo, hi), x)| *lo < *x && *x < *hi))
    }

    /// `inf_{q ∉ ℛ} D(q‖p)` over the simplex.
    ///
    /// Two letters are exact: the divergence is convex along the segment,
    /// so the infimum sits at a box endpoint or a simplex corner. Larger
    /// `d` scans a simplex grid plus per-face minimizers.
    pub fn min_divergence_outside(&self, p: &ProbVector) -> f64 {
        let pe = p.entries();
        let d = pe.len();
        if !self.contains(pe) {
            return 0.0;
        }
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if d == 2 {
            candidates.push(vec![0.0, 1.0]);
            candidates.push(vec![1.0, 0.0]);
            for b in &self.boxes {
                // a box on two letters is the x-interval cut by both coordinate ranges
                let lo = b[0].0.max(1.0 - b[1].1).clamp(0.0, 1.0);
                let hi = b[0].1.min(1.0 - b[1].0).clamp(0.0, 1.0);
                candidates.push(vec![lo, 1.0 - lo]);
                candidates.push(vec![hi, 1.0 - hi]);
            }
        } else {
            for b in &self.boxes {
                for (i, &(lo, hi)) in b.iter().enumerate() {
                    for c in [lo, hi] {
                        if !(0.0..=1.0).contains(&c) {
                            continue;
                        }
                        let rest: f64 = pe.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).sum();
                        let q: Vec<f64> = (0..d)
                            .map(|j| if j == i { c } else if rest > 0.0 { pe[j] * (1.0 - c) / rest } else { (1.0 - c) / (d - 1) as f64 })
                            .collect();
                        candidates.push(q);
                    }
                }
            }
            let grid = match d {
                3 => 300,
                4 => 60,
                _ => 16,
            };
            simplex_grid(d, grid, &mut |q| candidates.push(q.to_vec()));
        }
        candidates
            .iter()
            .filter(|q| !self.interior_contains(q))
            .map(|q| divergence_of(q, pe))
            .fold(f64::INFINITY, f64::min)
    }
}

fn simplex_grid(d: usize, grid: usize, f: &mut impl FnMut(&[f64])) {
    fn rec(i: usize, left: usize, counts: &mut Vec<usize>, grid: usize, f: &mut impl FnMut(&[f64])) {
        if i + 1 == counts.len() {
            counts[i] = left;
            let q: Vec<f64> = counts.iter().map(|&c| c as f64 / grid as f64).collect();
            f(&q);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, grid, f);
        }
    }
    rec(0, grid, &mut vec![0; d], grid, f);
}

/// `ln[(n+d)^{4d} e^{−n inf_{q∉ℛ} D(q‖p)}]`.
pub fn ln_bound_e32(region: &Region, p: &ProbVector, n: usize) -> Result<f64> {
    let d = p.d();
    if region.boxes.first().is_some_and(|b| b.len() != d) {
        return Err(Error::SizeMismatch { expected: d, got: region.boxes[0].len() });
    }
    let nf = n as f64;
    let p = p.sorted_desc();
    Ok(4.0 * d as f64 * (nf + d as f64).ln() - nf * region.min_divergence_outside(&p))
}

pub fn bound_e32(region: &Region, p: &ProbVector, n: usize) -> Result<f64> {
    Ok(ln_bound_e32(region, p, n)?.exp())
}

/// `ln Σ_{λ/n ∉ ℛ} Tr P_λ ρ^{⊗n}` for `ρ` with spectrum `p`.
pub fn ln_mass_outside(region: &Region, p: &ProbVector, n: usize) -> Result<f64> {
    let p = p.sorted_desc();
    let logs: Vec<f64> = enumerate_young(n, p.d())
        .into_iter()
        .filter(|l| !region.contains(&l.frequencies()))
        .map(|l| ln_block_prob_iid(&l, p.entries()))
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&logs))
}

/// `1 − ((p₂/p₁)^{3/2} + ((p₁−p₂)/p₁)^{3/2})`, the large-n floor of the
/// zero-radius code's error on a two-letter orthogonal source.
pub fn lemma_l1_limit(p: &ProbVector) -> Result<f64> {
    if p.d() != 2 {
        return Err(Error::invalid("the limit is defined for two letters"));
    }
    let s = p.sorted_desc();
    let (p1, p2) = (s.entries()[0], s.entries()[1]);
    if p1 <= p2 {
        return Err(Error::invalid("degenerate spectrum p1 = p2"));
    }
    Ok(1.0 - ((p2 / p1).powf(1.5) + ((p1 - p2) / p1).powf(1.5)))
}

/// `c = x − x^{3/2}` with `x = (p₁−p₂)/p₁`.
pub fn lemma_l2_constant(p: &ProbVector) -> Result<f64> {
    if p.d() != 2 {
        return Err(Error::invalid("the constant is defined for two letters"));
    }
    let s = p.sorted_desc();
    let (p1, p2) = (s.entries()[0], s.entries()[1]);
    if p1 <= p2 {
        return Err(Error::invalid("degenerate spectrum p1 = p2"));
    }
    let x = (p1 - p2) / p1;
    Ok(x - x.powf(1.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Row {
    pub n: usize,
    pub delta: f64,
    pub error: f64,
    /// `−(1/n) ln ε`.
    pub exponent: f64,
    /// `(1/n)(ln 2(n+1)² − ln c)`.
    pub upper_bound: f64,
}

/// Error exponents of the radius-`δ_n` code on the orthogonal two-letter
/// source with weights `p`.
pub fn lemma_l2_diagnostic(p: &ProbVector, schedule: &[(usize, f64)]) -> Result<Vec<L2Row>> {
    let c = lemma_l2_constant(p)?;
    let source = Source::classical(p.entries())?;
    schedule
        .iter()
        .map(|&(n, delta)| {
            if !(0.0..1.0).contains(&delta.abs()) {
                return Err(Error::invalid(format!("|delta_n| = {delta} must be below 1")));
            }
            let code = VLCode::new(CodeParams::new(n, 2, delta.abs()))?;
            let error = average_error_exact(&code, &source, &EvalOptions::default())?.value;
            let nf = n as f64;
            Ok(L2Row {
                n,
                delta,
                error,
                exponent: -error.ln() / nf,
                upper_bound: ((2.0 * (nf + 1.0).powi(2)).ln() - c.ln()) / nf,
            })
        })
        .collect()
}

/// Entropy `H(λ/n)` of a Young index; convenience for sweeps.
pub fn young_entropy(lambda: &YoungIndex) -> f64 {
    entropy_of(&lambda.frequencies())
}

/// Members of the rotated-qubit family on `[t₁, ½)` used by [`sec6_exponents`].
pub const SEC6_MEMBERS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sec6Exponents {
    /// `inf D(ρ_t‖ρ_{t₀})` over members with rate above `h(t₁)`.
    pub theorem1: f64,
    /// `inf d(t, t₀)` over member spectra with entropy at least `h(t₁)`.
    pub theorem2: f64,
    /// Closed-form difference.
    pub gap: f64,
}

/// Sufficient condition for the family infimum to sit at `t₁`, where the
/// closed-form gap is the exact exponent difference: the angle offset at
/// `t = ½` stays within `π/2` and `cos 2Δ(½) ≥ logit(t₁)/logit(t₀)`.
/// Requires `t₀ < t₁ < ½`.
pub fn sec6_infimum_at_t1(t1: f64, t0: f64, delta_theta: f64) -> bool {
    if !(0.0 < t0 && t0 < t1 && t1 < 0.5) {
        return false;
    }
    let logit = |t: f64| (t / (1.0 - t)).ln();
    let far = delta_theta * (0.5 - t0) / (t1 - t0);
    far.abs() <= std::f64::consts::FRAC_PI_2 && (2.0 * far).cos() >= logit(t1) / logit(t0)
}

/// Both exponents for the family `θ(t) = Δθ·(t − t₀)/(t₁ − t₀)`, evaluated
/// numerically over a member grid starting at `t₁`.
pub fn sec6_exponents(t1: f64, t0: f64, delta_theta: f64) -> Result<Sec6Exponents> {
    if t1 == t0 {
        return Err(Error::invalid("t1 and t0 must differ"));
    }
    let theta = |t: f64| delta_theta * (t - t0) / (t1 - t0);
    let gap = crate::info::sec6_gap(t1, t0, theta)?;
    let rate = crate::info::binary_entropy(t1);
    // members sit at or above t₁, so a rate just below h(t₁) admits exactly them
    let threshold = rate - 1e-13;
    let mut family = Vec::with_capacity(SEC6_MEMBERS);
    let mut spectra = Vec::with_capacity(SEC6_MEMBERS);
    for j in 0..SEC6_MEMBERS {
        let t = t1 + (0.5 - t1) * j as f64 / SEC6_MEMBERS as f64;
        family.push((crate::info::sec6_state(t, theta(t))?, crate::info::binary_entropy(t)));
        spectra.push(ProbVector::new(vec![1.0 - t, t])?);
    }
    let p_state = crate::info::sec6_state(t0, theta(t0))?;
    let theorem1 = crate::info::theorem1_bound(threshold, &p_state, &family)?;
    let problem = crate::info::ExponentProblem {
        rate: threshold,
        p: ProbVector::new(vec![1.0 - t0, t0])?,
        family: crate::info::SpectrumFamily::points(spectra),
    };
    let theorem2 = crate::info::theorem2_exponent(&problem)?;
    Ok(Sec6Exponents { theorem1, theorem2, gap })
}
