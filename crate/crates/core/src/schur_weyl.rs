//! Schur-Weyl block projectors `P_λ` on `(C^d)^{⊗n}` and block traces
//! `Tr P_λ ρ⃗`.
//!
//! Three routes compute the same block trace:
//! * the explicit projector `(dim 𝒱_λ/n!) Σ_σ χ_λ(σ) Π(σ)` for small `n`,
//! * `dim 𝒱_λ · s_λ(spec)` for i.i.d. states,
//! * `dim 𝒱_λ · K_{λμ} / multinomial(μ)` summed over types for commuting factors.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, DensityMatrix, ProductState, DEFAULT_MAX_DIM};
use crate::young::{
    self, character, enumerate_young, ln_binomial, ln_dim_sym, ln_multinomial, ln_schur_poly, CycleType, YoungIndex,
};

/// Largest `n` for which character sums over all of `S_n` are attempted.
pub const MAX_PERMUTATION_N: usize = 9;
/// Off-diagonal tolerance for treating factors as simultaneously diagonal.
pub const COMMUTING_TOL: f64 = 1e-10;

/// Lexicographic successor of `perm`; `false` after the last permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Calls `f` on every permutation of `0..n` in lexicographic order.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        f(&perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
}

fn checked_power(d: usize, n: usize, max_dim: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..n {
        dim = dim.checked_mul(d).filter(|&v| v <= max_dim).ok_or(Error::BudgetExceeded {
            requested: d.saturating_pow(n as u32),
            max: max_dim,
        })?;
    }
    Ok(dim)
}

/// Image index of `i` under `Π(σ)`: digit `k` of `i` moves to slot `σ(k)`.
/// Slot 0 is the most significant digit.
fn permute_index(i: usize, sigma: &[usize], d: usize, digits: &mut [usize]) -> usize {
    let n = sigma.len();
    let mut rest = i;
    for k in (0..n).rev() {
        digits[k] = rest % d;
        rest /= d;
    }
    let mut out = 0;
    let mut image = vec![0usize; n];
    for k in 0..n {
        image[sigma[k]] = digits[k];
    }
    for &digit in &image {
        out = out * d + digit;
    }
    out
}

fn validate_permutation(sigma: &[usize]) -> Result<()> {
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s >= sigma.len() || std::mem::replace(&mut seen[s], true) {
            return Err(Error::invalid(format!("{sigma:?} is not a permutation")));
        }
    }
    Ok(())
}

/// `Π(σ)|i₀…i_{n−1}⟩ = |j⟩` with `j_{σ(k)} = i_k`, so `Π(στ) = Π(σ)Π(τ)`.
pub fn permutation_operator(sigma: &[usize], d: usize) -> Result<ComplexMatrix> {
    permutation_operator_with_budget(sigma, d, DEFAULT_MAX_DIM)
}

pub fn permutation_operator_with_budget(sigma: &[usize], d: usize, max_dim: usize) -> Result<ComplexMatrix> {
    validate_permutation(sigma)?;
    let dim = checked_power(d, sigma.len(), max_dim)?;
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut digits = vec![0; sigma.len()];
    for i in 0..dim {
        let j = permute_index(i, sigma, d, &mut digits);
        m[(j, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Orthogonal projector onto the isotypic block `𝒰_λ ⊗ 𝒱_λ`.
#[derive(Debug, Clone)]
pub struct BlockProjector {
    pub lambda: YoungIndex,
    pub d: usize,
    pub matrix: ComplexMatrix,
}

impl BlockProjector {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Re Tr(P ρ)` for a dense state of matching size.
    pub fn trace_with(&self, rho: &ComplexMatrix) -> Result<f64> {
        if rho.shape() != self.matrix.shape() {
            return Err(Error::SizeMismatch { expected: self.dim(), got: rho.nrows() });
        }
        Ok(self.matrix.iter().zip(rho.transpose().iter()).map(|(p, r)| (p * r).re).sum())
    }
}

/// Projector for a single `λ`.
pub fn young_projector(lambda: &YoungIndex, d: usize) -> Result<BlockProjector> {
    let lambda = lambda.with_rows(d)?;
    let mut all = build_projectors(&[lambda], d, DEFAULT_MAX_DIM)?;
    Ok(all.pop().expect("one projector requested"))
}

/// Projectors for every `λ ∈ Y_n` with at most `d` rows, in `enumerate_young` order.
pub fn young_projectors(n: usize, d: usize) -> Result<Vec<BlockProjector>> {
    build_projectors(&enumerate_young(n, d), d, DEFAULT_MAX_DIM)
}

fn build_projectors(lambdas: &[YoungIndex], d: usize, max_dim: usize) -> Result<Vec<BlockProjector>> {
    let Some(first) = lambdas.first() else {
        return Ok(Vec::new());
    };
    let n = first.n();
    if n > MAX_PERMUTATION_N {
        return Err(Error::BudgetExceeded { requested: n, max: MAX_PERMUTATION_N });
    }
    let dim = checked_power(d, n, max_dim)?;
    // entries are real: P_λ is a real combination of permutation matrices
    let n_fact = young::factorial(n);
    let n_fact = young::ln_big(&n_fact).exp();
    let coefs: Vec<f64> = lambdas.iter().map(|l| ln_dim_sym(l).exp() / n_fact).collect();
    let mut char_cache: HashMap<CycleType, Vec<f64>> = HashMap::new();
    let mut acc = vec![vec![0.0f64; dim * dim]; lambdas.len()];
    let mut digits = vec![0; n];
    let mut image = vec![0usize; dim];
    for_each_permutation(n, |sigma| {
        let class = CycleType::of_permutation(sigma);
        let chis = char_cache.entry(class.clone()).or_insert_with(|| {
            lambdas.iter().map(|l| character(l, &class).expect("sizes agree") as f64).collect()
        });
        for (i, slot) in image.iter_mut().enumerate() {
            *slot = permute_index(i, sigma, d, &mut digits);
        }
        for (k, m) in acc.iter_mut().enumerate() {
            let w = coefs[k] * chis[k];
            if w == 0.0 {
                continue;
            }
            for (i, &j) in image.iter().enumerate() {
                m[j * dim + i] += w;
            }
        }
    });
    Ok(lambdas
        .iter()
        .zip(acc)
        .map(|(l, m)| BlockProjector {
            lambda: l.clone(),
            d,
            matrix: DMatrix::from_row_slice(dim, dim, &m).map(|x| Complex64::new(x, 0.0)),
        })
        .collect())
}

/// Clamps a floating block probability into `[0,1]`, logging any clip.
pub fn clip_probability(p: f64) -> f64 {
    let clipped = p.clamp(0.0, 1.0);
    if clipped != p {
        log::debug!("block probability {p:e} clipped by {:e}", (clipped - p).abs());
    }
    clipped
}

/// `ln Tr P_λ ρ^{⊗n} = ln dim 𝒱_λ + ln s_λ(spec)`.
pub fn ln_block_prob_iid(lambda: &YoungIndex, spec: &[f64]) -> Result<f64> {
    let lambda = lambda.with_rows(spec.len())?;
    Ok(ln_dim_sym(&lambda) + ln_schur_poly(&lambda, spec)?)
}

pub fn block_prob_iid(lambda: &YoungIndex, spec: &[f64]) -> Result<f64> {
    Ok(clip_probability(ln_block_prob_iid(lambda, spec)?.exp()))
}

/// Block probabilities for every `λ ∈ Y_n`.
pub fn block_probs_iid(n: usize, spec: &[f64]) -> Result<Vec<(YoungIndex, f64)>> {
    enumerate_young(n, spec.len())
        .into_par_iter()
        .map(|l| block_prob_iid(&l, spec).map(|p| (l, p)))
        .collect()
}

/// `ln ⟨e⃗|P_λ|e⃗⟩` for a basis vector of type `mu`.
pub fn ln_block_prob_diagonal(lambda: &YoungIndex, mu: &[usize]) -> Result<f64> {
    let n: usize = mu.iter().sum();
    if n != lambda.n() {
        return Err(Error::SizeMismatch { expected: lambda.n(), got: n });
    }
    let rows = lambda.trimmed();
    if rows.len() > mu.len() {
        return Ok(f64::NEG_INFINITY);
    }
    if mu.len() == 2 {
        // dim 𝒱_{(n−j,j)} = C(n,j) − C(n,j−1); K = 1 iff j ≤ min(μ)
        let j = rows.get(1).copied().unwrap_or(0);
        let b = mu[0].min(mu[1]);
        if j > b {
            return Ok(f64::NEG_INFINITY);
        }
        let dim_v = ln_binomial(n, j) + (-(j as f64) / (n - j + 1) as f64).ln_1p();
        return Ok(dim_v - ln_binomial(n, b));
    }
    let lambda = lambda.with_rows(mu.len())?;
    let k = young::kostka(&lambda, mu)?;
    Ok(ln_dim_sym(&lambda) + young::ln_big(&k) - ln_multinomial(mu))
}

pub fn block_prob_diagonal(lambda: &YoungIndex, mu: &[usize]) -> Result<f64> {
    Ok(clip_probability(ln_block_prob_diagonal(lambda, mu)?.exp()))
}

/// Distribution of the type (count vector) of independent draws, keyed by
/// counts in `d` letters.
pub fn type_distribution(draws: &[Vec<f64>], d: usize) -> HashMap<Vec<usize>, f64> {
    let mut dist: HashMap<Vec<usize>, f64> = HashMap::from([(vec![0; d], 1.0)]);
    for w in draws {
        let mut next: HashMap<Vec<usize>, f64> = HashMap::with_capacity(dist.len() * d);
        for (counts, p) in &dist {
            for (letter, &q) in w.iter().enumerate() {
                if q <= 0.0 {
                    continue;
                }
                let mut c = counts.clone();
                c[letter] += 1;
                *next.entry(c).or_default() += p * q;
            }
        }
        dist = next;
    }
    dist
}

/// Block probabilities when every basis vector of a fixed type carries the
/// given weight distribution over types.
pub fn block_probs_from_types(
    n: usize,
    d: usize,
    types: &HashMap<Vec<usize>, f64>,
) -> Result<Vec<(YoungIndex, f64)>> {
    let mut keys: Vec<&Vec<usize>> = types.keys().collect();
    keys.sort();
    enumerate_young(n, d)
        .into_par_iter()
        .map(|lambda| {
            let mut total = 0.0;
            for mu in &keys {
                let w = types[*mu];
                if w == 0.0 {
                    continue;
                }
                let l = ln_block_prob_diagonal(&lambda, mu)?;
                if l > f64::NEG_INFINITY {
                    total += w * l.exp();
                }
            }
            Ok((lambda, clip_probability(total)))
        })
        .collect()
}

/// Diagonals of all factors in a joint eigenbasis, or `None` when the
/// factors do not commute.
pub fn commuting_diagonals(factors: &[DensityMatrix]) -> Option<Vec<Vec<f64>>> {
    let d = factors.first()?.dim();
    let mut mix = ComplexMatrix::zeros(d, d);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut distinct: Vec<&DensityMatrix> = Vec::new();
    for f in factors {
        if !distinct.iter().any(|g| g.matrix() == f.matrix()) {
            distinct.push(f);
        }
    }
    for (k, f) in distinct.iter().enumerate() {
        let w = (golden * (k + 1) as f64).fract() + 0.5;
        mix += f.matrix().map(|z| z * w);
    }
    let (_, basis) = hermitian_eigen(&mix);
    let basis_adj = basis.adjoint();
    let mut cache: Vec<(&DensityMatrix, Vec<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(factors.len());
    for f in factors {
        if let Some((_, diag)) = cache.iter().find(|(g, _)| g.matrix() == f.matrix()) {
            out.push(diag.clone());
            continue;
        }
        let rotated = &basis_adj * f.matrix() * &basis;
        for i in 0..d {
            for j in 0..d {
                if i != j && rotated[(i, j)].norm() > COMMUTING_TOL {
                    return None;
                }
            }
        }
        let diag: Vec<f64> = (0..d).map(|i| rotated[(i, i)].re.max(0.0)).collect();
        cache.push((f, diag.clone()));
        out.push(diag);
    }
    Some(out)
}

/// `Σ_{σ ∈ class} Tr Π(σ) ρ⃗` for every cycle type.
///
/// A cycle `k → σ(k) → …` contributes `Tr(ρ_{σ^{m−1}(k)} ⋯ ρ_{σ(k)} ρ_k)`.
fn class_trace_sums(factors: &[DensityMatrix]) -> Result<HashMap<CycleType, Complex64>> {
    let n = factors.len();
    if n > MAX_PERMUTATION_N {
        return Err(Error::BudgetExceeded { requested: n, max: MAX_PERMUTATION_N });
    }
    let mats: Vec<&ComplexMatrix> = factors.iter().map(|f| f.matrix()).collect();
    let mut sums: HashMap<CycleType, Complex64> = HashMap::new();
    let mut seen = vec![false; n];
    for_each_permutation(n, |sigma| {
        seen.iter_mut().for_each(|s| *s = false);
        let mut value = Complex64::new(1.0, 0.0);
        let mut lengths = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut prod = mats[start].clone();
            seen[start] = true;
            let mut len = 1;
            let mut k = sigma[start];
            while k != start {
                prod = mats[k] * prod;
                seen[k] = true;
                len += 1;
                k = sigma[k];
            }
            lengths.push(len);
            value *= prod.trace();
        }
        let class = CycleType::new(lengths).expect("cycle lengths are positive");
        *sums.entry(class).or_default() += value;
    });
    Ok(sums)
}

fn block_probs_cycle_trace(state: &ProductState) -> Result<Vec<(YoungIndex, f64)>> {
    let n = state.n();
    let sums = class_trace_sums(state.factors())?;
    let mut classes: Vec<(&CycleType, &Complex64)> = sums.iter().collect();
    classes.sort_by(|a, b| a.0.cmp(b.0));
    let ln_n_fact = young::ln_big(&young::factorial(n));
    enumerate_young(n, state.d())
        .into_iter()
        .map(|lambda| {
            let mut acc = 0.0;
            for (class, s) in &classes {
                acc += character(&lambda, class)? as f64 * s.re;
            }
            let p = (ln_dim_sym(&lambda) - ln_n_fact).exp() * acc;
            Ok((lambda, clip_probability(p)))
        })
        .collect()
}

/// Which evaluation route `block_probs_product` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRoute {
    /// Commuting factors: type distribution and Kostka numbers.
    Kostka,
    /// Character-weighted cycle traces over all of `S_n`.
    CycleTrace,
}

pub fn block_route(state: &ProductState) -> Result<BlockRoute> {
    if commuting_diagonals(state.factors()).is_some() {
        Ok(BlockRoute::Kostka)
    } else if state.n() <= MAX_PERMUTATION_N {
        Ok(BlockRoute::CycleTrace)
    } else {
        Err(Error::BudgetExceeded { requested: state.n(), max: MAX_PERMUTATION_N })
    }
}

/// `Tr P_λ ρ⃗` for every `λ ∈ Y_n`.
pub fn block_probs_product(state: &ProductState) -> Result<Vec<(YoungIndex, f64)>> {
    match commuting_diagonals(state.factors()) {
        Some(diags) => block_probs_from_types(state.n(), state.d(), &type_distribution(&diags, state.d())),
        None if state.n() <= MAX_PERMUTATION_N => block_probs_cycle_trace(state),
        None => Err(Error::BudgetExceeded { requested: state.n(), max: MAX_PERMUTATION_N }),
    }
}

pub fn block_prob_product(lambda: &YoungIndex, state: &ProductState) -> Result<f64> {
    let lambda = lambda.with_rows(state.d())?;
    if lambda.n() != state.n() {
        return Err(Error::SizeMismatch { expected: state.n(), got: lambda.n() });
    }
    let all = block_probs_product(state)?;
    Ok(all.into_iter().find(|(l, _)| *l == lambda).map_or(0.0, |(_, p)| p))
}
