//! Classical information quantities, lattice-ball constants and the
//! overflow-exponent optimization problems. All logarithms are natural and
//! all norms are Euclidean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, DensityMatrix, VALIDATION_TOL};

/// Relative slack when comparing a squared lattice distance with `radius²`.
pub const BALL_GUARD: f64 = 1e-9;

/// A probability vector on `d` letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.entries
    }
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("probability vector is empty"));
        }
        if entries.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::invalid(format!("entries {entries:?} must be finite and nonnegative")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::invalid(format!("entries sum to {total}, not 1")));
        }
        Ok(Self { entries })
    }

    /// Clamps tiny negatives and rescales; for vectors produced by numerics.
    pub fn normalized(mut entries: Vec<f64>) -> Result<Self> {
        entries.iter_mut().for_each(|x| *x = x.max(0.0));
        let total: f64 = entries.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        entries.iter_mut().for_each(|x| *x /= total);
        Ok(Self { entries })
    }

    pub fn uniform(d: usize) -> Self {
        Self { entries: vec![1.0 / d as f64; d] }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn sorted_desc(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.sort_unstable_by(|a, b| b.total_cmp(a));
        Self { entries }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        euclid(&self.entries, &other.entries)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `-Σ q ln q` with `0 ln 0 = 0`.
pub fn entropy_of(q: &[f64]) -> f64 {
    q.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn entropy(q: &ProbVector) -> f64 {
    entropy_of(q.entries())
}

/// `Σ q ln(q/p)`; `+∞` when `q` charges a letter `p` does not.
pub fn divergence_of(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

pub fn divergence(q: &ProbVector, p: &ProbVector) -> f64 {
    divergence_of(q.entries(), p.entries())
}

pub fn binary_entropy(t: f64) -> f64 {
    entropy_of(&[t, 1.0 - t])
}

/// `d(t,t') = t ln(t/t') + (1−t) ln((1−t)/(1−t'))`.
pub fn binary_divergence(t: f64, t_ref: f64) -> f64 {
    divergence_of(&[t, 1.0 - t], &[t_ref, 1.0 - t_ref])
}

/// The `t ∈ [0, ½]` with `h(t) = value`.
pub fn binary_entropy_inverse(value: f64) -> Result<f64> {
    if value <= 0.0 {
        return Ok(0.0);
    }
    if value > std::f64::consts::LN_2 * (1.0 + 1e-15) {
        return Err(Error::invalid(format!("binary entropy {value} exceeds ln 2")));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < value {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eigenvalues of `rho` in descending order.
pub fn sorted_spectrum(rho: &DensityMatrix) -> ProbVector {
    ProbVector::normalized(rho.eigenvalues_desc()).expect("density matrices have unit trace")
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy(&sorted_spectrum(rho))
}

/// `Tr ρ(ln ρ − ln σ)`; `+∞` when `supp ρ ⊄ supp σ`.
pub fn quantum_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::SizeMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let (a, va) = hermitian_eigen(rho.matrix());
    let (b, vb) = hermitian_eigen(sigma.matrix());
    let overlap = va.adjoint() * vb;
    let mut acc = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        if ai <= VALIDATION_TOL {
            continue;
        }
        acc += ai * ai.ln();
        for (j, &bj) in b.iter().enumerate() {
            let w = ai * overlap[(i, j)].norm_sqr();
            if w <= VALIDATION_TOL * VALIDATION_TOL {
                continue;
            }
            if bj <= VALIDATION_TOL {
                return Ok(f64::INFINITY);
            }
            acc -= w * bj.ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Closed ball test `sq ≤ radius²` with relative slack [`BALL_GUARD`].
pub fn within_radius(squared_distance: f64, radius: f64) -> bool {
    squared_distance <= radius * radius * (1.0 + BALL_GUARD)
}

/// Integer points `k ∈ Z^d`, `Σ k = 0`, within `radius` of `center`
/// (a real point with coordinate sum zero).
fn sum_zero_points_near(center: &[f64], radius: f64) -> Vec<Vec<i64>> {
    let d = center.len();
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    let reach = radius * (1.0 + BALL_GUARD) + 1e-12;
    let mut k = vec![0i64; d];
    #[allow(clippy::too_many_arguments)]
    fn rec(i: usize, center: &[f64], radius: f64, reach: f64, partial_sq: f64, partial_sum: i64, k: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let d = center.len();
        if i == d - 1 {
            k[i] = -partial_sum;
            let sq = partial_sq + (k[i] as f64 - center[i]).powi(2);
            if within_radius(sq, radius) {
                out.push(k.clone());
            }
            return;
        }
        let left = (reach * reach - partial_sq).max(0.0).sqrt();
        let lo = (center[i] - left).ceil() as i64;
        let hi = (center[i] + left).floor() as i64;
        for v in lo..=hi {
            k[i] = v;
            let sq = partial_sq + (v as f64 - center[i]).powi(2);
            if sq > reach * reach {
                continue;
            }
            rec(i + 1, center, radius, reach, sq, partial_sum + v, k, out);
        }
    }
    rec(0, center, radius, reach, 0.0, 0, &mut k, &mut out);
    out
}

/// Sum-zero integer vectors of norm at most `x`, in lexicographic order.
pub fn sum_zero_ball(x: f64, d: usize) -> Vec<Vec<i64>> {
    sum_zero_points_near(&vec![0.0; d], x.max(0.0))
}

/// `C_{1,d}(x) = #{k ∈ Z^d : ‖k‖ ≤ x, Σ k = 0}`.
pub fn c1(x: f64, d: usize) -> usize {
    if d != 2 {
        return sum_zero_ball(x, d).len();
    }
    // (k, −k) has norm √2|k|
    let x = x.max(0.0);
    let limit = x * x * (1.0 + BALL_GUARD);
    let mut m = (limit / 2.0).sqrt().floor() as u64;
    while 2.0 * ((m + 1) as f64).powi(2) <= limit {
        m += 1;
    }
    while m > 0 && 2.0 * (m as f64).powi(2) > limit {
        m -= 1;
    }
    2 * m as usize + 1
}

/// Orthonormal basis of the sum-zero hyperplane in `R^d`.
pub fn sum_zero_basis(d: usize) -> Vec<Vec<f64>> {
    (1..d)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let mut v = vec![0.0; d];
            v[..k].iter_mut().for_each(|x| *x = 1.0 / norm);
            v[k] = -(k as f64) / norm;
            v
        })
        .collect()
}

/// Grid points per cell axis when minimizing over offsets for `d ≥ 3`.
const C2_GRID: usize = 48;

/// `C_{2,d}(x)`: the fewest sum-zero lattice points any sum-zero offset can
/// have within distance `x`.
///
/// Two letters give `⌊√2·x⌋`. Larger `d` minimizes over a grid on the
/// fundamental cell, so the result can only overstate the true minimum.
pub fn c2(x: f64, d: usize) -> usize {
    let x = x.max(0.0);
    match d {
        0 | 1 => 1,
        2 => {
            let len = std::f64::consts::SQRT_2 * x;
            let r = len.round();
            if (len - r).abs() <= BALL_GUARD * len.max(1.0) {
                r as usize
            } else {
                len.floor() as usize
            }
        }
        _ => {
            // cell spanned by e_i − e_{d−1}; any offset reduces into it
            let axes = d - 1;
            let total = C2_GRID.pow(axes as u32);
            let mut best = usize::MAX;
            let mut t = vec![0usize; axes];
            for idx in 0..total {
                let mut rest = idx;
                for slot in t.iter_mut() {
                    *slot = rest % C2_GRID;
                    rest /= C2_GRID;
                }
                let mut center = vec![0.0; d];
                for (i, &ti) in t.iter().enumerate() {
                    let s = ti as f64 / C2_GRID as f64;
                    center[i] += s;
                    center[d - 1] -= s;
                }
                best = best.min(sum_zero_points_near(&center, x).len());
                if best == 0 {
                    break;
                }
            }
            best
        }
    }
}

/// Bounds on `C_{3,d} = inf D(q‖p)/‖p−q‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C3 {
    /// Pinsker with `‖·‖₂ ≤ ‖·‖₁`.
    pub certified_lower: f64,
    /// Smallest ratio found by a deterministic search.
    pub numeric_estimate: f64,
}

pub fn c3(d: usize) -> Result<C3> {
    if d < 2 {
        return Err(Error::invalid("C3 needs d >= 2"));
    }
    let grid = match d {
        2 => 400,
        3 => 40,
        4 => 16,
        _ => 8,
    };
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; d];
    let steps: Vec<f64> = (0..=32).map(|k| 10f64.powf(-4.0 + 4.0 * k as f64 / 32.0)).collect();
    // interior simplex points with denominators `grid`
    fn walk(i: usize, left: usize, counts: &mut Vec<usize>, grid: usize, steps: &[f64], best: &mut f64) {
        let d = counts.len();
        if i == d - 1 {
            if left == 0 {
                return;
            }
            counts[i] = left;
            let p: Vec<f64> = counts.iter().map(|&c| c as f64 / grid as f64).collect();
            for a in 0..d {
                for b in 0..d {
                    if a == b {
                        continue;
                    }
                    for &s in steps {
                        if s > p[b] {
                            break;
                        }
                        let mut q = p.clone();
                        q[a] += s;
                        q[b] -= s;
                        let ratio = divergence_of(&q, &p) / (2.0 * s * s);
                        if ratio < *best {
                            *best = ratio;
                        }
                    }
                }
            }
            return;
        }
        for c in 1..left {
            counts[i] = c;
            walk(i + 1, left - c, counts, grid, steps, best);
        }
    }
    walk(0, grid, &mut counts, grid, &steps, &mut best);
    Ok(C3 { certified_lower: 0.5, numeric_estimate: best })
}

/// The spectra a family may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumFamily {
    /// Every probability vector.
    All,
    /// Probability vectors within `radius` of one of `centers`.
    Near { centers: Vec<ProbVector>, radius: f64 },
}

impl SpectrumFamily {
    pub fn points(points: Vec<ProbVector>) -> Self {
        SpectrumFamily::Near { centers: points, radius: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentProblem {
    pub rate: f64,
    pub p: ProbVector,
    pub family: SpectrumFamily,
}

/// `inf D(q‖p)` over family members with `H(q) ≥ R`; the unitary
/// minimization reduces to comparing sorted spectra.
pub fn theorem2_exponent(prob: &ExponentProblem) -> Result<f64> {
    let d = prob.p.d();
    let ln_d = (d as f64).ln();
    if !(prob.rate >= 0.0) || prob.rate > ln_d + VALIDATION_TOL {
        return Err(Error::invalid(format!("rate {} outside [0, ln {d}]", prob.rate)));
    }
    let p = prob.p.sorted_desc();
    match &prob.family {
        SpectrumFamily::All => Ok(tilted_exponent(p.entries(), prob.rate)),
        SpectrumFamily::Near { centers, radius } => {
            let sorted: Vec<ProbVector> = centers.iter().map(|c| c.sorted_desc()).collect();
            let set = FeasibleSet { min_entropy: prob.rate, proximity: Some((&sorted, *radius)) };
            min_divergence_over(&p, &set, 0.0)
        }
    }
}

/// `min D(q‖p)` over `H(q) ≥ R`, attained on `q ∝ p^s` with `s ∈ [0,1]`.
fn tilted_exponent(p: &[f64], rate: f64) -> f64 {
    if entropy_of(p) >= rate {
        return 0.0;
    }
    let support: Vec<f64> = p.iter().copied().filter(|&x| x > 0.0).collect();
    let ln_support = (support.len() as f64).ln();
    if rate > ln_support * (1.0 + 1e-14) {
        return f64::INFINITY;
    }
    let tilt = |s: f64| -> Vec<f64> {
        let logs: Vec<f64> = support.iter().map(|x| s * x.ln()).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy_of(&tilt(mid)) >= rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    divergence_of(&tilt(lo), &support)
}

/// Feasible `q`: `H(q) ≥ min_entropy` and, when given, within the radius
/// of some center.
#[derive(Debug, Clone)]
pub struct FeasibleSet<'a> {
    pub min_entropy: f64,
    pub proximity: Option<(&'a [ProbVector], f64)>,
}

impl FeasibleSet<'_> {
    fn contains(&self, q: &[f64]) -> bool {
        if entropy_of(q) < self.min_entropy - 1e-12 {
            return false;
        }
        match self.proximity {
            None => true,
            Some((centers, r)) => centers.iter().any(|c| within_radius(sq_dist(q, c.entries()), r)),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `inf_{q ∈ set} inf_{q' ∈ Δ, ‖q−q'‖ ≤ slack} D(q'‖p)`.
///
/// Exact for two letters and for the plain entropy constraint without
/// slack; otherwise the outer infimum is taken over a deterministic sample
/// of the feasible set followed by local refinement.
pub fn min_divergence_over(p: &ProbVector, set: &FeasibleSet, slack: f64) -> Result<f64> {
    let d = p.d();
    if set.min_entropy > (d as f64).ln() + VALIDATION_TOL {
        return Ok(f64::INFINITY);
    }
    if d == 2 {
        return Ok(two_letter_min(p.entries()[0], set, slack));
    }
    if set.proximity.is_none() && slack == 0.0 {
        return Ok(tilted_exponent(p.entries(), set.min_entropy));
    }
    if set.contains(p.entries()) {
        return Ok(0.0);
    }
    let inner = |q: &[f64]| min_divergence_in_ball(p.entries(), q, slack);
    let mut best = f64::INFINITY;
    match set.proximity {
        None => {
            for q in entropy_boundary_samples(d, set.min_entropy) {
                best = best.min(inner(&q));
            }
        }
        Some((centers, radius)) => {
            for c in centers {
                let samples = ball_samples(c.entries(), radius);
                let mut local_best: Option<(f64, Vec<f64>)> = None;
                for q in samples.into_iter().filter(|q| set.contains(q)) {
                    let v = inner(&q);
                    if local_best.as_ref().is_none_or(|(b, _)| v < *b) {
                        local_best = Some((v, q));
                    }
                }
                if let Some((v, q)) = local_best {
                    let refined = pattern_search(&q, radius.max(1e-3) / 8.0, |x| {
                        if set.contains(x) { inner(x) } else { f64::INFINITY }
                    });
                    best = best.min(v).min(refined);
                }
            }
        }
    }
    Ok(best)
}

/// Exact interval reasoning for `q = (x, 1−x)`.
fn two_letter_min(p1: f64, set: &FeasibleSet, slack: f64) -> f64 {
    let Ok(a) = binary_entropy_inverse(set.min_entropy) else {
        return f64::INFINITY;
    };
    // ‖(x,1−x) − (y,1−y)‖ = √2 |x − y|
    let scale = std::f64::consts::SQRT_2;
    let entropy_band = (a, 1.0 - a);
    let mut bands = Vec::new();
    match set.proximity {
        None => bands.push(entropy_band),
        Some((centers, r)) => {
            let reach = r * (1.0 + BALL_GUARD) / scale;
            for c in centers {
                let s = c.entries()[0];
                let lo = (s - reach).max(entropy_band.0);
                let hi = (s + reach).min(entropy_band.1);
                if lo <= hi {
                    bands.push((lo, hi));
                }
            }
        }
    }
    let widen = slack / scale;
    bands
        .into_iter()
        .map(|(lo, hi)| {
            let x = p1.clamp((lo - widen).max(0.0), (hi + widen).min(1.0));
            binary_divergence(x, p1)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Rays from the uniform point to the boundary of `{H ≥ R} ∩ Δ`.
fn entropy_boundary_samples(d: usize, min_entropy: f64) -> Vec<Vec<f64>> {
    let basis = sum_zero_basis(d);
    let directions: Vec<Vec<f64>> = if d == 3 {
        (0..2048)
            .map(|j| {
                let phi = std::f64::consts::TAU * j as f64 / 2048.0;
                (0..d).map(|i| phi.cos() * basis[0][i] + phi.sin() * basis[1][i]).collect()
            })
            .collect()
    } else {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        (0..4096)
            .map(|_| {
                let coef: Vec<f64> = (0..d - 1).map(|_| StandardNormal.sample(&mut rng)).collect();
                let v: Vec<f64> = (0..d).map(|i| coef.iter().zip(&basis).map(|(c, b)| c * b[i]).sum()).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            })
            .collect()
    };
    let u = 1.0 / d as f64;
    directions
        .into_iter()
        .map(|dir| {
            let t_face = dir.iter().filter(|&&x| x < 0.0).map(|&x| u / -x).fold(f64::INFINITY, f64::min);
            let at = |t: f64| -> Vec<f64> { dir.iter().map(|&x| (u + t * x).max(0.0)).collect() };
            if entropy_of(&at(t_face)) >= min_entropy {
                return at(t_face);
            }
            let (mut lo, mut hi) = (0.0, t_face);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if entropy_of(&at(mid)) >= min_entropy {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            at(lo)
        })
        .collect()
}

/// Polar grid over the disc (or random points in the ball) around `c`,
/// restricted to the simplex.
fn ball_samples(c: &[f64], radius: f64) -> Vec<Vec<f64>> {
    let d = c.len();
    if radius == 0.0 {
        return vec![c.to_vec()];
    }
    let basis = sum_zero_basis(d);
    let mut out = vec![c.to_vec()];
    if d == 3 {
        for ri in 1..=32 {
            let r = radius * ri as f64 / 32.0;
            for j in 0..128 {
                let phi = std::f64::consts::TAU * j as f64 / 128.0;
                out.push((0..d).map(|i| c[i] + r * (phi.cos() * basis[0][i] + phi.sin() * basis[1][i])).collect());
            }
        }
    } else {
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xba11);
        for _ in 0..4096 {
            let coef: Vec<f64> = (0..d - 1).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = coef.iter().map(|x| x * x).sum::<f64>().sqrt();
            let r = radius * rng.random::<f64>().powf(1.0 / (d - 1) as f64);
            out.push((0..d).map(|i| c[i] + r / n * coef.iter().zip(&basis).map(|(a, b)| a * b[i]).sum::<f64>()).collect());
        }
    }
    out.into_iter().filter(|q| q.iter().all(|&x| x >= 0.0)).collect()
}

/// Compass search in the sum-zero plane, halving the step to `1e-9`.
fn pattern_search(start: &[f64], step: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let basis = sum_zero_basis(start.len());
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut h = step;
    while h > 1e-9 {
        let mut improved = false;
        for b in &basis {
            for sign in [1.0, -1.0] {
                let y: Vec<f64> = x.iter().zip(b).map(|(xi, bi)| xi + sign * h * bi).collect();
                if y.iter().any(|&v| v < 0.0) {
                    continue;
                }
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    fx
}

/// Solves `ln x + a·x = c` for `x > 0` (`a ≥ 0`).
fn solve_log_linear(a: f64, c: f64) -> f64 {
    if c == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == 0.0 {
        return c.exp();
    }
    // g(y) = y + a e^y − c is convex and increasing, so Newton started to
    // the right of the root decreases monotonically onto it
    let mut y = if c + a.ln() > 30.0 { (c / a).ln() } else { c };
    for _ in 0..200 {
        let e = a * y.exp();
        let step = (y + e - c) / (1.0 + e);
        y -= step;
        if step.abs() <= 1e-15 * (1.0 + y.abs()) {
            break;
        }
    }
    y.exp()
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `min D(x‖p)` over `x ∈ Δ` with `‖x − q‖ ≤ r`, from the stationarity
/// condition `ln x_i + 2μ x_i = ln p_i + 2μ q_i − ν` on `supp p`.
pub fn min_divergence_in_ball(p: &[f64], q: &[f64], r: f64) -> f64 {
    if within_radius(sq_dist(p, q), r) {
        return 0.0;
    }
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let q_support: Vec<f64> = support.iter().map(|&i| q[i]).collect();
    let off_support: f64 = (0..p.len()).filter(|i| !support.contains(i)).map(|i| q[i] * q[i]).sum();
    let nearest = project_to_simplex(&q_support);
    let nearest_sq = off_support + sq_dist(&nearest, &q_support);
    if !within_radius(nearest_sq, r) {
        return f64::INFINITY;
    }
    let ps: Vec<f64> = support.iter().map(|&i| p[i]).collect();
    let point = |mu: f64| -> Vec<f64> {
        let a = 2.0 * mu;
        let base: Vec<f64> = ps.iter().zip(&q_support).map(|(pi, qi)| pi.ln() + a * qi).collect();
        let total = |nu: f64| base.iter().map(|&c| solve_log_linear(a, c - nu)).sum::<f64>();
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while total(lo) < 1.0 {
            lo *= 2.0;
        }
        while total(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        let x: Vec<f64> = base.iter().map(|&c| solve_log_linear(a, c - 0.5 * (lo + hi))).collect();
        let s: f64 = x.iter().sum();
        x.into_iter().map(|v| v / s).collect()
    };
    let dist_sq = |x: &[f64]| off_support + sq_dist(x, &q_support);
    let mut hi = 1.0f64;
    let mut x_hi = point(hi);
    while !within_radius(dist_sq(&x_hi), r) && hi < 1e15 {
        hi *= 4.0;
        x_hi = point(hi);
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x = point(mid);
        if within_radius(dist_sq(&x), r) {
            hi = mid;
            x_hi = x;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    divergence_of(&x_hi, &ps)
}

/// `inf D(ρ_q‖ρ_p)` over members whose rate exceeds `rate`.
pub fn theorem1_bound(rate: f64, p_state: &DensityMatrix, family: &[(DensityMatrix, f64)]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (state, member_rate) in family {
        if *member_rate > rate {
            best = best.min(quantum_divergence(state, p_state)?);
        }
    }
    Ok(best)
}

/// Qubit state with eigenvalue `t` on `(cos θ, −sin θ)` and `1−t` on
/// `(sin θ, cos θ)`.
pub fn sec6_state(t: f64, theta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("eigenvalue {t} outside [0,1]")));
    }
    let (s, c) = theta.sin_cos();
    let m = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[t * c * c + (1.0 - t) * s * s, (1.0 - 2.0 * t) * c * s, (1.0 - 2.0 * t) * c * s, (1.0 - t) * c * c + t * s * s],
    )
    .map(|x| num_complex::Complex64::new(x, 0.0));
    DensityMatrix::new(m)
}

/// `sin²(θ(t₁) − θ(t₀)) · (d(t₁, 1−t₀) − d(t₁, t₀))`.
pub fn sec6_gap(t1: f64, t0: f64, theta: impl Fn(f64) -> f64) -> Result<f64> {
    for t in [t1, t0] {
        if !(t > 0.0 && t < 0.5) {
            return Err(Error::invalid(format!("parameter {t} outside (0, 1/2)")));
        }
    }
    let s = (theta(t1) - theta(t0)).sin();
    Ok(s * s * (binary_divergence(t1, 1.0 - t0) - binary_divergence(t1, t0)))
}

/// `cos²Δ·d(t₁,t₀) + sin²Δ·d(t₁,1−t₀)`, the divergence of the two family
/// members at angle difference `Δ`.
pub fn sec6_divergence(t1: f64, t0: f64, delta_theta: f64) -> f64 {
    let (s, c) = delta_theta.sin_cos();
    c * c * binary_divergence(t1, t0) + s * s * binary_divergence(t1, 1.0 - t0)
}
