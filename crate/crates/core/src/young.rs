//! Partition combinatorics for the Schur-Weyl blocks of `(C^d)^{⊗n}`.
//!
//! Exact counts use `BigUint`; large-`n` callers use the `ln_*` variants,
//! which evaluate the same formulas through log-factorials.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// A partition `n₁ ≥ … ≥ n_d ≥ 0`, padded with zeros to length `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YoungIndex {
    parts: Vec<usize>,
}

impl YoungIndex {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("a Young index needs at least one row"));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!("parts {parts:?} are not non-increasing")));
        }
        Ok(Self { parts })
    }

    /// Sorts `parts` descending first.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Result<Self> {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(parts)
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of rows including zero padding.
    pub fn d(&self) -> usize {
        self.parts.len()
    }

    /// Nonzero rows only.
    pub fn trimmed(&self) -> &[usize] {
        let len = self.parts.iter().rposition(|&p| p > 0).map_or(0, |i| i + 1);
        &self.parts[..len]
    }

    /// Same shape padded (or trimmed of zeros) to `d` rows.
    pub fn with_rows(&self, d: usize) -> Result<Self> {
        let t = self.trimmed();
        if t.len() > d {
            return Err(Error::invalid(format!("{self} has more than {d} rows")));
        }
        let mut parts = t.to_vec();
        parts.resize(d, 0);
        Ok(Self { parts })
    }

    /// Empirical distribution `𝐧/n`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.parts.iter().map(|&p| p as f64 / n).collect()
    }
}

impl fmt::Display for YoungIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Cycle type of a permutation: a partition of `n` with no zero parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    parts: Vec<usize>,
}

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::invalid("cycle lengths must be positive"));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    /// Cycle type of a permutation given in one-line notation (`σ(i) = perm[i]`).
    pub fn of_permutation(perm: &[usize]) -> Self {
        let mut seen = vec![false; perm.len()];
        let mut parts = Vec::new();
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            parts.push(len);
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of permutations with this cycle type, `n!/z_μ`.
    pub fn class_size(&self) -> BigUint {
        let mut z = BigUint::one();
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &p in &self.parts {
            z *= BigUint::from(p);
            *counts.entry(p).or_default() += 1;
        }
        for &m in counts.values() {
            z *= factorial(m);
        }
        factorial(self.n()) / z
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `n! / ∏ μ_i!`.
pub fn multinomial(parts: &[usize]) -> BigUint {
    let n = parts.iter().sum();
    parts.iter().fold(factorial(n), |acc, &p| acc / factorial(p))
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

pub fn ln_multinomial(parts: &[usize]) -> f64 {
    let n: usize = parts.iter().sum();
    parts.iter().fold(ln_factorial(n as u64), |acc, &p| acc - ln_factorial(p as u64))
}

/// Natural log of a big integer without overflowing `f64`.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// All partitions of `n` with at most `d` rows, padded to `d`, in
/// lexicographically descending order.
pub fn enumerate_young(n: usize, d: usize) -> Vec<YoungIndex> {
    fn rec(remaining: usize, max_part: usize, rows_left: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungIndex>) {
        if rows_left == 0 {
            if remaining == 0 {
                out.push(YoungIndex { parts: cur.clone() });
            }
            return;
        }
        // the remaining rows must absorb `remaining` with parts <= first
        let hi = max_part.min(remaining);
        for p in (0..=hi).rev() {
            if p * rows_left < remaining {
                break;
            }
            cur.push(p);
            rec(remaining - p, p, rows_left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(n, n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All partitions of `n` as cycle types.
pub fn partitions(n: usize) -> Vec<CycleType> {
    enumerate_young(n, n.max(1))
        .into_iter()
        .map(|y| CycleType { parts: y.trimmed().to_vec() })
        .collect()
}

/// `dim 𝒱_λ`, the irreducible `S_n` dimension, by Weyl's formula
/// `n!/∏(n_i + d − i)! · ∏_{i<j}(n_i − n_j − i + j)`.
pub fn dim_sym(lambda: &YoungIndex) -> BigUint {
    let p = lambda.parts();
    let d = p.len();
    let mut num = factorial(lambda.n());
    let mut den = BigUint::one();
    for i in 0..d {
        den *= factorial(p[i] + d - 1 - i);
        for j in i + 1..d {
            num *= BigUint::from(p[i] - p[j] + j - i);
        }
    }
    num / den
}

pub fn ln_dim_sym(lambda: &YoungIndex) -> f64 {
    let p = lambda.parts();
    let d = p.len();
    let mut acc = ln_factorial(lambda.n() as u64);
    for i in 0..d {
        acc -= ln_factorial((p[i] + d - 1 - i) as u64);
        for j in i + 1..d {
            acc += ((p[i] - p[j] + j - i) as f64).ln();
        }
    }
    acc
}

/// `dim 𝒰_λ` for `SU(d)` by the Weyl product `∏_{i<j}(λ_i − λ_j + j − i)/(j − i)`.
pub fn dim_su(lambda: &YoungIndex, d: usize) -> Result<BigUint> {
    let p = lambda.with_rows(d)?;
    let p = p.parts();
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..d {
        for j in i + 1..d {
            num *= BigUint::from(p[i] - p[j] + j - i);
            den *= BigUint::from(j - i);
        }
    }
    Ok(num / den)
}

pub fn ln_dim_su(lambda: &YoungIndex, d: usize) -> Result<f64> {
    let p = lambda.with_rows(d)?;
    let p = p.parts();
    let mut acc = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            acc += ((p[i] - p[j] + j - i) as f64).ln() - ((j - i) as f64).ln();
        }
    }
    Ok(acc)
}

type CharacterKey = (Vec<usize>, Vec<usize>);

fn character_table() -> &'static Mutex<HashMap<CharacterKey, i64>> {
    static TABLE: OnceLock<Mutex<HashMap<CharacterKey, i64>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `χ_λ(μ)` by the Murnaghan-Nakayama rule on beta-numbers.
pub fn character(lambda: &YoungIndex, class: &CycleType) -> Result<i64> {
    if lambda.n() != class.n() {
        return Err(Error::SizeMismatch { expected: lambda.n(), got: class.n() });
    }
    Ok(mn_character(lambda.trimmed(), class.parts()))
}

fn mn_character(lambda: &[usize], mu: &[usize]) -> i64 {
    if mu.is_empty() {
        return i64::from(lambda.is_empty());
    }
    let key = (lambda.to_vec(), mu.to_vec());
    if let Some(&v) = character_table().lock().expect("character table poisoned").get(&key) {
        return v;
    }
    let r = mu[0];
    let rest = &mu[1..];
    let len = lambda.len();
    let beta: Vec<usize> = lambda.iter().enumerate().map(|(i, &l)| l + len - 1 - i).collect();
    let mut total = 0i64;
    for (i, &b) in beta.iter().enumerate() {
        if b < r {
            continue;
        }
        let target = b - r;
        if beta.contains(&target) {
            continue;
        }
        let crossed = beta.iter().filter(|&&x| x > target && x < b).count();
        let sign = if crossed % 2 == 0 { 1 } else { -1 };
        let mut next = beta.clone();
        next[i] = target;
        next.sort_unstable_by(|a, b| b.cmp(a));
        let shape: Vec<usize> = next
            .iter()
            .enumerate()
            .map(|(k, &x)| x - (len - 1 - k))
            .filter(|&x| x > 0)
            .collect();
        total += sign * mn_character(&shape, rest);
    }
    character_table().lock().expect("character table poisoned").insert(key, total);
    total
}

/// Schur polynomial `s_λ(x)` for nonnegative `x` with `|x| = d(λ)` rows.
pub fn schur_poly(lambda: &YoungIndex, x: &[f64]) -> Result<f64> {
    Ok(ln_schur_poly(lambda, x)?.exp())
}

/// `ln s_λ(x)`; `-∞` when the polynomial vanishes.
///
/// Two rows use the bialternant closed form, which handles `x₁ = x₂`
/// exactly; more rows use the Gelfand-Tsetlin branching rule in log space.
pub fn ln_schur_poly(lambda: &YoungIndex, x: &[f64]) -> Result<f64> {
    if x.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::invalid("Schur polynomial arguments must be finite and nonnegative"));
    }
    let lambda = lambda.with_rows(x.len())?;
    let mut xs = x.to_vec();
    xs.sort_unstable_by(|a, b| b.total_cmp(a));
    let parts = lambda.parts();
    Ok(match xs.len() {
        1 => pow_ln(xs[0], parts[0]),
        2 => ln_schur_two(parts[0], parts[1], xs[0], xs[1]),
        _ => {
            let mut memo = HashMap::new();
            ln_schur_branching(parts, &xs, &mut memo)
        }
    })
}

fn pow_ln(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// `ln s_{(n1,n2)}(a,b)` for `a ≥ b ≥ 0`.
fn ln_schur_two(n1: usize, n2: usize, a: f64, b: f64) -> f64 {
    let m = n1 - n2;
    if a == 0.0 {
        return if n1 == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let base = pow_ln(a, n2) + pow_ln(b, n2) + pow_ln(a, m);
    if base == f64::NEG_INFINITY {
        return base;
    }
    // h_m(a,b)/a^m = Σ_{j≤m} r^j with r = b/a
    let r = b / a;
    let geometric = if m == 0 || r == 0.0 {
        1.0
    } else if r >= 1.0 {
        (m + 1) as f64
    } else {
        let lr = r.ln();
        (-((m + 1) as f64 * lr).exp_m1()) / (-lr.exp_m1())
    };
    base + geometric.ln()
}

fn ln_schur_branching(lambda: &[usize], x: &[f64], memo: &mut HashMap<Vec<usize>, f64>) -> f64 {
    let rows = x.len();
    if rows == 2 {
        return ln_schur_two(lambda[0], lambda[1], x[0], x[1]);
    }
    if let Some(&v) = memo.get(lambda) {
        return v;
    }
    let last = x[rows - 1];
    let total: usize = lambda.iter().sum();
    // ν interlaces λ: λ_i ≥ ν_i ≥ λ_{i+1}, with rows−1 entries
    let mut terms = Vec::new();
    let mut nu = vec![0usize; rows - 1];
    #[allow(clippy::too_many_arguments)]
    fn walk(
        i: usize,
        lambda: &[usize],
        nu: &mut Vec<usize>,
        x: &[f64],
        last: f64,
        total: usize,
        memo: &mut HashMap<Vec<usize>, f64>,
        terms: &mut Vec<f64>,
    ) {
        if i == nu.len() {
            let size: usize = nu.iter().sum();
            let weight = pow_ln(last, total - size);
            if weight == f64::NEG_INFINITY {
                return;
            }
            let inner = ln_schur_branching(nu, &x[..x.len() - 1], memo);
            terms.push(weight + inner);
            return;
        }
        for v in lambda[i + 1]..=lambda[i] {
            nu[i] = v;
            walk(i + 1, lambda, nu, x, last, total, memo, terms);
        }
    }
    walk(0, lambda, &mut nu, x, last, total, memo, &mut terms);
    let v = log_sum_exp(&terms);
    memo.insert(lambda.to_vec(), v);
    v
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Kostka number `K_{λμ}`: semistandard tableaux of shape `λ` and content `μ`.
pub fn kostka(lambda: &YoungIndex, mu: &[usize]) -> Result<BigUint> {
    let size: usize = mu.iter().sum();
    if lambda.n() != size {
        return Err(Error::SizeMismatch { expected: lambda.n(), got: size });
    }
    let content: Vec<usize> = mu.iter().copied().filter(|&m| m > 0).collect();
    let mut memo = HashMap::new();
    Ok(kostka_rec(lambda.trimmed(), &content, &mut memo))
}

fn kostka_rec(lambda: &[usize], mu: &[usize], memo: &mut HashMap<(Vec<usize>, usize), BigUint>) -> BigUint {
    let Some((&strip, rest)) = mu.split_last() else {
        return if lambda.is_empty() { BigUint::one() } else { BigUint::zero() };
    };
    // a shape with more rows than remaining letters cannot be filled
    if lambda.len() > mu.len() {
        return BigUint::zero();
    }
    let key = (lambda.to_vec(), mu.len());
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    // remove a horizontal strip of size `strip`: λ_{i+1} ≤ ν_i ≤ λ_i
    let mut total = BigUint::zero();
    let mut nu = vec![0usize; lambda.len()];
    fn walk(
        i: usize,
        left: usize,
        lambda: &[usize],
        nu: &mut Vec<usize>,
        rest: &[usize],
        memo: &mut HashMap<(Vec<usize>, usize), BigUint>,
        total: &mut BigUint,
    ) {
        if i == lambda.len() {
            if left == 0 {
                let len = nu.iter().rposition(|&v| v > 0).map_or(0, |k| k + 1);
                *total += kostka_rec(&nu[..len], rest, memo);
            }
            return;
        }
        let floor = lambda.get(i + 1).copied().unwrap_or(0);
        for v in floor..=lambda[i] {
            let removed = lambda[i] - v;
            if removed > left {
                continue;
            }
            nu[i] = v;
            walk(i + 1, left - removed, lambda, nu, rest, memo, total);
        }
    }
    walk(0, strip, lambda, &mut nu, rest, memo, &mut total);
    memo.insert(key, total.clone());
    total
}
