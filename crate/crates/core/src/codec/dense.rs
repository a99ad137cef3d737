//! Literal matrix evaluation of the instrument `E_𝐤(ρ) = √M_𝐤 ρ √M_𝐤`
//! followed by the embedding decoder. Exponential in `n`; used for small
//! cases and as an independent check of the closed chain.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::VLCode;
use crate::error::{Error, Result};
use crate::linalg::{fidelity_psd, partial_trace, trace, trace_norm, ComplexMatrix, ProductState, Source, DEFAULT_MAX_DIM};
use crate::schur_weyl::young_projectors;

/// Largest number of atom sequences enumerated.
pub const MAX_SEQUENCES: usize = 1_000_000;

/// Post-measurement weight below which an outcome is skipped.
const NEGLIGIBLE: f64 = 1e-15;

pub struct DenseInstrument {
    n: usize,
    d: usize,
    /// `√M_𝐤 = P_𝐤/√C₁` for every point outcome.
    sqrt_m: Vec<ComplexMatrix>,
}

/// Which error functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `b²(ρ⃗, E_𝐤(ρ⃗)/t)` with `b² = 1 − Tr|√ρ√σ|`.
    Bures,
    /// `1 − (Tr|ρ⃗ σ|)²`.
    DoublePrime,
    /// `(1/n) Σ_i b²(ρ_i, Tr_{≠i} σ)`.
    Local,
}

impl DenseInstrument {
    pub fn new(code: &VLCode) -> Result<Self> {
        let (n, d) = (code.n(), code.d());
        let projectors = young_projectors(n, d)?;
        if projectors.iter().zip(code.young()).any(|(p, l)| p.lambda != *l) {
            return Err(Error::Numerical("projector order disagrees with the code".into()));
        }
        let dim = projectors.first().map_or(0, |p| p.dim());
        let scale = 1.0 / (code.c1() as f64).sqrt();
        let sqrt_m = code
            .outcomes()
            .iter()
            .map(|o| {
                let mut m: ComplexMatrix = DMatrix::zeros(dim, dim);
                for &i in &o.members {
                    m += &projectors[i].matrix;
                }
                m * Complex64::new(scale, 0.0)
            })
            .collect();
        Ok(Self { n, d, sqrt_m })
    }

    /// `Σ_𝐤 M_𝐤`, which must be `I` for an unrestricted code.
    pub fn instrument_sum(&self) -> ComplexMatrix {
        let dim = self.d.pow(self.n as u32);
        self.sqrt_m.iter().fold(DMatrix::zeros(dim, dim), |acc, s| acc + s * s)
    }

    /// Average error over `ρ⃗ ∼ p^n`; the reject outcome is charged 1.
    pub fn error(&self, source: &Source, criterion: Criterion) -> Result<f64> {
        if source.d() != self.d {
            return Err(Error::SizeMismatch { expected: self.d, got: source.d() });
        }
        let atoms = source.atoms();
        let a = atoms.len();
        let count = a.checked_pow(self.n as u32).filter(|&c| c <= MAX_SEQUENCES);
        let Some(count) = count else {
            return Err(Error::BudgetExceeded { requested: usize::MAX, max: MAX_SEQUENCES });
        };
        let mut total = 0.0;
        for seq in 0..count {
            let mut s = seq;
            let mut weight = 1.0;
            let mut factors = Vec::with_capacity(self.n);
            for _ in 0..self.n {
                let (w, rho) = &atoms[s % a];
                weight *= w;
                factors.push(rho.clone());
                s /= a;
            }
            if weight == 0.0 {
                continue;
            }
            total += weight * self.sequence_error(&factors, criterion)?;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    fn sequence_error(&self, factors: &[crate::linalg::DensityMatrix], criterion: Criterion) -> Result<f64> {
        let state = ProductState::new(factors.to_vec())?;
        let rho = state.dense_with_budget(DEFAULT_MAX_DIM)?;
        let mut kept = 0.0;
        let mut err = 0.0;
        for s in &self.sqrt_m {
            let post = s * &rho * s;
            let t = trace(&post).re;
            kept += t;
            if t <= NEGLIGIBLE {
                continue;
            }
            let sigma = post / Complex64::new(t, 0.0);
            let b2 = match criterion {
                Criterion::Bures => 1.0 - fidelity_psd(&rho, &sigma)?,
                Criterion::DoublePrime => 1.0 - trace_norm(&(&rho * &sigma)).powi(2),
                Criterion::Local => {
                    let mut local = 0.0;
                    for (i, f) in factors.iter().enumerate() {
                        let reduced = partial_trace(&sigma, self.d, i)?;
                        local += 1.0 - fidelity_psd(f.matrix(), &reduced)?;
                    }
                    local / self.n as f64
                }
            };
            err += t * b2.max(0.0);
        }
        // the reject operator I − Σ M_𝐤 carries the remaining weight
        Ok(err + (1.0 - kept).max(0.0))
    }
}

/// `ε′`: per-copy error from normalized partial traces of the
/// post-measurement state.
pub fn average_error_prime(code: &VLCode, source: &Source) -> Result<f64> {
    DenseInstrument::new(code)?.error(source, Criterion::Local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{average_error_dprime, average_error_exact, CodeParams, EvalOptions, SpectrumSet};
    use crate::info::ProbVector;
    use crate::linalg::{c, identity, max_abs, random, DensityMatrix, Ket};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(theta: f64) -> DensityMatrix {
        DensityMatrix::pure(&Ket::from_vec(vec![c(theta.cos()), c(theta.sin())])).unwrap()
    }

    #[test]
    fn instrument_is_complete() {
        for (n, d, delta) in [(3usize, 2usize, 0.4), (4, 2, 0.6), (3, 3, 0.5)] {
            let code = VLCode::new(CodeParams::new(n, d, delta)).unwrap();
            let inst = DenseInstrument::new(&code).unwrap();
            let dim = d.pow(n as u32);
            assert!(max_abs(&(inst.instrument_sum() - identity(dim))) < 1e-10);
        }
    }

    #[test]
    fn closed_chain_matches_instrument_for_pure_sources() {
        let source = Source::new(vec![(0.65, qubit(0.3)), (0.35, qubit(1.4))]).unwrap();
        for (n, delta) in [(2usize, 0.5), (3, 0.4), (4, 0.3), (4, 0.6)] {
            let code = VLCode::new(CodeParams::new(n, 2, delta)).unwrap();
            let inst = DenseInstrument::new(&code).unwrap();
            let opts = EvalOptions::default();
            let closed = average_error_exact(&code, &source, &opts).unwrap().value;
            assert_abs_diff_eq!(closed, inst.error(&source, Criterion::Bures).unwrap(), epsilon = 1e-9);
            let closed2 = average_error_dprime(&code, &source, &opts).unwrap().value;
            assert_abs_diff_eq!(closed2, inst.error(&source, Criterion::DoublePrime).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_chain_matches_instrument_for_mixed_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let source = Source::new(vec![(0.5, random::density(2, 2, &mut rng)), (0.5, random::density(2, 2, &mut rng))]).unwrap();
        // (√ρ√M√ρ)² = √ρ√Mρ√M√ρ, so the chain is exact for mixed atoms too
        for (n, delta) in [(2usize, 0.4), (3, 0.4), (4, 0.2)] {
            let code = VLCode::new(CodeParams::new(n, 2, delta)).unwrap();
            let inst = DenseInstrument::new(&code).unwrap();
            let closed = average_error_exact(&code, &source, &EvalOptions::default()).unwrap().value;
            assert_abs_diff_eq!(closed, inst.error(&source, Criterion::Bures).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn restricted_code_charges_reject() {
        let params = CodeParams::restricted(4, 2, 0.5, 0.2, SpectrumSet::Points(vec![ProbVector::new(vec![1.0, 0.0]).unwrap()]));
        let code = VLCode::new(params).unwrap();
        let inst = DenseInstrument::new(&code).unwrap();
        let source = Source::new(vec![(0.5, qubit(0.2)), (0.5, qubit(0.9))]).unwrap();
        let closed = average_error_exact(&code, &source, &EvalOptions::default()).unwrap().value;
        assert_abs_diff_eq!(closed, inst.error(&source, Criterion::Bures).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn local_error_edges() {
        let code = VLCode::new(CodeParams::new(1, 2, 0.3)).unwrap();
        let source = Source::new(vec![(0.3, qubit(0.7)), (0.7, DensityMatrix::maximally_mixed(2))]).unwrap();
        assert_abs_diff_eq!(average_error_prime(&code, &source).unwrap(), 0.0, epsilon = 1e-9);
        // a radius covering all of Y_n gives a single ball per outcome, all of them M ∝ I
        let wide = VLCode::new(CodeParams::new(3, 2, 0.0)).unwrap();
        let pure = Source::new(vec![(1.0, qubit(0.4))]).unwrap();
        assert_abs_diff_eq!(average_error_prime(&wide, &pure).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn local_error_below_global_for_cons_source() {
        let code = VLCode::new(CodeParams::new(3, 2, 0.0)).unwrap();
        let source = Source::classical(&[0.75, 0.25]).unwrap();
        let local = average_error_prime(&code, &source).unwrap();
        let global = average_error_exact(&code, &source, &EvalOptions::default()).unwrap().value;
        assert!(local <= global + 1e-12, "{local} vs {global}");
        assert!((0.0..=1.0).contains(&local));
    }
}
