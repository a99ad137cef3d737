//! Dense complex linear algebra and quantum-state primitives.
//!
//! Everything here works on `nalgebra` dense matrices. Operators on
//! `(C^d)^{⊗n}` use the row-major tensor convention: slot 0 is the most
//! significant digit of a basis index.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest dense operator dimension built by default.
pub const DEFAULT_MAX_DIM: usize = 4096;
/// Tolerance for Hermiticity, positivity and trace checks.
pub const VALIDATION_TOL: f64 = 1e-12;
/// Tolerance for reconstruction checks such as `sqrt(M)^2 == M`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn diag(entries: &[f64]) -> ComplexMatrix {
    let n = entries.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(entries[i]) } else { c(0.0) })
}

/// Kronecker product `a ⊗ b`, rejecting results larger than [`DEFAULT_MAX_DIM`].
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_with_budget(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_budget(a: &ComplexMatrix, b: &ComplexMatrix, max_dim: usize) -> Result<ComplexMatrix> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    if rows.max(cols) > max_dim {
        return Err(Error::BudgetExceeded { requested: rows.max(cols), max: max_dim });
    }
    Ok(a.kronecker(b))
}

/// Largest absolute entry of `m - m†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of the Hermitian part of `m`: ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Eigenvalues below this are eigensolver noise on a PSD matrix of the given
/// size and spectral radius.
fn noise_floor(dim: usize, lam_max: f64) -> f64 {
    8.0 * dim as f64 * f64::EPSILON * lam_max.max(1.0)
}

/// Applies `f` to the spectrum of a Hermitian PSD matrix.
fn psd_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::SizeMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let scale = max_abs(m).max(1.0);
    let dev = hermitian_deviation(m);
    if dev > VALIDATION_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let (values, vectors) = hermitian_eigen(m);
    let lam_max = values.last().copied().unwrap_or(0.0);
    if let Some(&lam_min) = values.first() {
        if lam_min < -VALIDATION_TOL * scale {
            return Err(Error::NotPsd(lam_min));
        }
    }
    let floor = noise_floor(m.nrows(), lam_max);
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let w = if lam <= floor { 0.0 } else { f(lam) };
        scaled.column_mut(k).scale_mut(w);
    }
    Ok(&scaled * vectors.adjoint())
}

/// Principal square root of a Hermitian PSD matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_function(m, f64::sqrt)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.singular_values().iter().sum()
}

/// Fidelity `Tr|√ρ√σ|` of two PSD operators (not necessarily normalized).
pub fn fidelity_psd(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::SizeMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    let product = psd_sqrt(rho)? * psd_sqrt(sigma)?;
    Ok(trace_norm(&product))
}

/// Ket as a column vector.
pub type Ket = nalgebra::DVector<Complex64>;

/// A validated density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid(format!(
                "density matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > VALIDATION_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > VALIDATION_TOL || tr.im.abs() > VALIDATION_TOL {
            return Err(Error::invalid(format!("trace must be 1, got {tr}")));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values[0] < -VALIDATION_TOL {
            return Err(Error::NotPsd(values[0]));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a ket normalized on the fly.
    pub fn pure(ket: &Ket) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot build a pure state from a zero ket"));
        }
        let v = ket.unscale(norm);
        let m = &v * v.adjoint();
        Ok(Self { matrix: (&m + m.adjoint()) * c(0.5) })
    }

    /// Computational-basis projector `|i⟩⟨i|`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut probs = vec![0.0; d];
        probs[i] = 1.0;
        Self { matrix: diag(&probs) }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(diag(probs))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: identity(d) * c(1.0 / d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues in descending order, clamped at zero.
    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        let (mut values, _) = hermitian_eigen(&self.matrix);
        values.reverse();
        values.iter().map(|v| v.max(0.0)).collect()
    }

    /// `V ρ V†`.
    pub fn conjugate(&self, unitary: &ComplexMatrix) -> Self {
        let m = unitary * &self.matrix * unitary.adjoint();
        Self { matrix: (&m + m.adjoint()) * c(0.5) }
    }
}

/// `Tr|√ρ√σ|`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(fidelity_psd(rho.matrix(), sigma.matrix())?.clamp(0.0, 1.0))
}

/// Bures distance `√(1 − F)`.
pub fn bures(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Smallest `n` with `d^n == dim`, if any.
pub fn tensor_power_of(dim: usize, d: usize) -> Option<usize> {
    if d < 2 {
        return if dim == 1 { Some(1) } else { None };
    }
    let mut n = 0;
    let mut acc = 1usize;
    while acc < dim {
        acc = acc.checked_mul(d)?;
        n += 1;
    }
    (acc == dim && n >= 1).then_some(n)
}

/// Traces out every tensor slot of `state` except `keep` (0-based).
pub fn partial_trace(state: &ComplexMatrix, d: usize, keep: usize) -> Result<ComplexMatrix> {
    let dim = state.nrows();
    if state.ncols() != dim {
        return Err(Error::SizeMismatch { expected: dim, got: state.ncols() });
    }
    let n = tensor_power_of(dim, d)
        .ok_or_else(|| Error::invalid(format!("dimension {dim} is not a power of {d}")))?;
    if keep >= n {
        return Err(Error::invalid(format!("slot {keep} out of range for {n} slots")));
    }
    // index = high * d^{n-keep} + digit * d^{n-keep-1} + low
    let low_size = d.pow((n - keep - 1) as u32);
    let high_size = dim / (low_size * d);
    let mut out = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for high in 0..high_size {
                for low in 0..low_size {
                    let base = high * low_size * d + low;
                    acc += state[(base + a * low_size, base + b * low_size)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// `ρ₁ ⊗ … ⊗ ρ_n` with all factors of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    factors: Vec<DensityMatrix>,
}

impl ProductState {
    pub fn new(factors: Vec<DensityMatrix>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::invalid("product state needs at least one factor"))?;
        let d = first.dim();
        if let Some(bad) = factors.iter().find(|f| f.dim() != d) {
            return Err(Error::SizeMismatch { expected: d, got: bad.dim() });
        }
        Ok(Self { factors })
    }

    pub fn iid(state: &DensityMatrix, n: usize) -> Result<Self> {
        Self::new(vec![state.clone(); n])
    }

    pub fn d(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DensityMatrix] {
        &self.factors
    }

    pub fn dense(&self) -> Result<ComplexMatrix> {
        self.dense_with_budget(DEFAULT_MAX_DIM)
    }

    pub fn dense_with_budget(&self, max_dim: usize) -> Result<ComplexMatrix> {
        let mut acc = self.factors[0].matrix().clone();
        for f in &self.factors[1..] {
            acc = tensor_with_budget(&acc, f.matrix(), max_dim)?;
        }
        Ok(acc)
    }
}

/// A finite ensemble `{(p(ρ), ρ)}` of states on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    d: usize,
    atoms: Vec<(f64, DensityMatrix)>,
}

impl Source {
    pub fn new(atoms: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let d = atoms.first().ok_or_else(|| Error::invalid("source needs at least one atom"))?.1.dim();
        let mut total = 0.0;
        for (w, rho) in &atoms {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::invalid(format!("atom weight {w} is not a probability")));
            }
            if rho.dim() != d {
                return Err(Error::SizeMismatch { expected: d, got: rho.dim() });
            }
            total += w;
        }
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::invalid(format!("atom weights sum to {total}, not 1")));
        }
        Ok(Self { d, atoms })
    }

    /// Pure basis states `|i⟩` with the given weights.
    pub fn classical(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        Self::new(weights.iter().enumerate().map(|(i, &w)| (w, DensityMatrix::basis(d, i))).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[(f64, DensityMatrix)] {
        &self.atoms
    }

    /// `ρ̄ = Σ p(ρ) ρ`.
    pub fn average(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(self.d, self.d);
        for (w, rho) in &self.atoms {
            m += rho.matrix() * c(*w);
        }
        DensityMatrix { matrix: (&m + m.adjoint()) * c(0.5) }
    }
}

/// Random states and unitaries for experiments and tests.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase correction.
    pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
        let qr = gaussian_matrix(d, d, rng).qr();
        let (q, r) = (qr.q(), qr.r());
        let mut out = q;
        for k in 0..d {
            let rk = r[(k, k)];
            let phase = if rk.norm() > 0.0 { rk / rk.norm() } else { c(1.0) };
            for row in 0..d {
                out[(row, k)] *= phase;
            }
        }
        out
    }

    /// Random density matrix of the given rank (Wishart construction).
    pub fn density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
        let g = gaussian_matrix(d, rank.max(1), rng);
        let m = &g * g.adjoint();
        let tr = trace(&m).re;
        let m = m * c(1.0 / tr);
        DensityMatrix { matrix: (&m + m.adjoint()) * c(0.5) }
    }

    pub fn pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
        density(d, 1, rng)
    }

    /// Uniform point on the probability simplex.
    pub fn simplex_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
        let e: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|x| x / s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::random;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket(entries: &[(f64, f64)]) -> Ket {
        Ket::from_iterator(entries.len(), entries.iter().map(|&(r, i)| Complex64::new(r, i)))
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i4 = tensor(&identity(2), &identity(2)).unwrap();
        assert_eq!(i4, identity(4));
    }

    #[test]
    fn tensor_of_diagonals() {
        let t = tensor(&diag(&[1.0, 2.0]), &diag(&[3.0, 5.0])).unwrap();
        assert_eq!(t, diag(&[3.0, 5.0, 6.0, 10.0]));
    }

    #[test]
    fn tensor_mixed_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m: Vec<ComplexMatrix> = (0..4).map(|_| random::unitary(2, &mut rng) * c(1.3)).collect();
        let lhs = tensor(&m[0], &m[1]).unwrap() * tensor(&m[2], &m[3]).unwrap();
        let rhs = tensor(&(&m[0] * &m[2]), &(&m[1] * &m[3])).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn tensor_budget_rejects_oversize() {
        let big = identity(128);
        assert!(matches!(tensor(&big, &big), Err(Error::BudgetExceeded { requested: 16384, max: 4096 })));
        assert!(tensor_with_budget(&identity(64), &identity(64), 4096).is_ok());
    }

    #[test]
    fn fidelity_identity_orthogonal_and_plus() {
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&ket(&[(s, 0.0), (s, 0.0)])).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &zero).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &plus).unwrap(), 0.707_106_781_186_547_5, epsilon = 1e-12);
        assert_abs_diff_eq!(bures(&zero, &zero).unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(bures(&zero, &one).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bures(&zero, &plus).unwrap(), 0.541_196_100_146_197, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = random::unitary(3, &mut rng);
            let v = random::unitary(3, &mut rng);
            let a: Ket = u.column(0).into();
            let b: Ket = v.column(0).into();
            let overlap = a.dotc(&b).norm();
            let f = fidelity(&DensityMatrix::pure(&a).unwrap(), &DensityMatrix::pure(&b).unwrap()).unwrap();
            assert_abs_diff_eq!(f, overlap, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..5 {
            for rank in 1..=d {
                let a = random::density(d, rank, &mut rng);
                let b = random::density(d, d, &mut rng);
                let f1 = fidelity(&a, &b).unwrap();
                let f2 = fidelity(&b, &a).unwrap();
                assert_abs_diff_eq!(f1, f2, epsilon = 1e-10);
                assert!((0.0..=1.0).contains(&f1));
            }
        }
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(max_abs(&(psd_sqrt(&identity(3)).unwrap() - identity(3))) < 1e-14);
        let s = psd_sqrt(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs(&(s - diag(&[2.0, 3.0]))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random::density(4, 4, &mut rng).into_matrix() * c(3.0);
        let r = psd_sqrt(&m).unwrap();
        assert!(max_abs(&(&r * &r - &m)) < RECONSTRUCTION_TOL);
        assert!(hermitian_deviation(&r) < 1e-12);
        let (vals, _) = hermitian_eigen(&r);
        assert!(vals[0] > -1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        assert!(matches!(psd_sqrt(&diag(&[1.0, -0.5])), Err(Error::NotPsd(_))));
    }

    #[test]
    fn partial_trace_of_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::density(2, 2, &mut rng);
        let b = random::density(2, 1, &mut rng);
        let cc = random::density(2, 2, &mut rng);
        let prod = ProductState::new(vec![a.clone(), b.clone(), cc.clone()]).unwrap().dense().unwrap();
        for (slot, f) in [a, b, cc].iter().enumerate() {
            let pt = partial_trace(&prod, 2, slot).unwrap();
            assert!(max_abs(&(pt - f.matrix())) < 1e-14);
        }
        let mixed = identity(4) * c(0.25);
        assert!(max_abs(&(partial_trace(&mixed, 2, 1).unwrap() - identity(2) * c(0.5))) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace_by_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random::density(4, 4, &mut rng);
        let pt = partial_trace(rho.matrix(), 2, 0).unwrap();
        // direct summation oracle: Tr_B ρ[a,b] = Σ_j ρ[(a,j),(b,j)]
        let mut oracle = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                for j in 0..2 {
                    oracle[(a, b)] += rho.matrix()[(2 * a + j, 2 * b + j)];
                }
            }
        }
        assert!(max_abs(&(&pt - &oracle)) < 1e-15);
        assert_abs_diff_eq!(trace(&pt).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_rejects_non_power() {
        assert!(partial_trace(&identity(6), 4, 0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(diag(&[0.6, 0.6])).is_err());
        assert!(matches!(DensityMatrix::new(diag(&[1.2, -0.2])), Err(Error::NotPsd(_))));
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn source_average() {
        let src = Source::classical(&[0.75, 0.25]).unwrap();
        assert!(max_abs(&(src.average().matrix() - diag(&[0.75, 0.25]))) < 1e-15);
        assert!(Source::classical(&[0.5, 0.6]).is_err());
    }
}
