//! Vectorized Lindblad generator.
//!
//! Vectorization is column stacking throughout: `vec(ρ)[i + D·j] = ρ[i, j]`,
//! so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`. This matches nalgebra's column-major
//! storage, which makes `vectorize`/`unvectorize` plain copies.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian_from_ops, SystemParams};
use crate::hilbert::{CompositeOperators, Level, OperatorMatrix};
use crate::linalg::CsrMatrix;

/// Linear map on vectorized `D × D` operators, stored sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: CsrMatrix,
}

impl Superoperator {
    pub fn zero(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self {
            hilbert_dim,
            matrix: CsrMatrix::zeros(n, n),
        }
    }

    pub fn from_csr(hilbert_dim: usize, matrix: CsrMatrix) -> Result<Self> {
        let n = hilbert_dim * hilbert_dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "superoperator",
                expected: format!("{n}x{n}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self {
            hilbert_dim,
            matrix,
        })
    }

    /// Dimension `D` of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Dimension `D²` of the vectorized space.
    pub fn dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(v)
    }

    pub fn apply(&self, rho: &OperatorMatrix) -> Result<OperatorMatrix> {
        check_dim(rho, self.hilbert_dim)?;
        unvectorize(&self.apply_vec(&vectorize(rho)))
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.hilbert_dim != other.hilbert_dim {
            return Err(Error::DimensionMismatch {
                context: "superoperator sum",
                expected: self.hilbert_dim.to_string(),
                found: other.hilbert_dim.to_string(),
            });
        }
        Ok(Self {
            hilbert_dim: self.hilbert_dim,
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn scale(&self, factor: f64) -> Superoperator {
        Self {
            hilbert_dim: self.hilbert_dim,
            matrix: self.matrix.scale(C64::new(factor, 0.0)),
        }
    }

    /// Largest entry of `vec(I)† L`; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        let mut acc = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..d {
            for (col, v) in self.matrix.row(i + d * i) {
                acc[col] += v;
            }
        }
        acc.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Full spectrum by dense Schur decomposition. Only sensible for small `D`.
    pub fn eigenvalues(&self) -> Option<Vec<C64>> {
        let schur = Schur::try_new(self.to_dense(), f64::EPSILON, 0)?;
        schur.eigenvalues().map(|ev| ev.iter().copied().collect())
    }
}

fn check_dim(op: &OperatorMatrix, d: usize) -> Result<()> {
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "operator",
            expected: d.to_string(),
            found: op.dim().to_string(),
        });
    }
    Ok(())
}

/// Column-stacked `vec(ρ)`.
pub fn vectorize(op: &OperatorMatrix) -> Vec<C64> {
    op.matrix().as_slice().to_vec()
}

pub fn unvectorize(v: &[C64]) -> Result<OperatorMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::DimensionMismatch {
            context: "vectorized operator",
            expected: "a positive square length".to_string(),
            found: v.len().to_string(),
        });
    }
    OperatorMatrix::from_matrix(DMatrix::from_column_slice(d, d, v))
}

/// `ρ ↦ A ρ B`
pub fn sandwich(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<Superoperator> {
    let d = a.dim();
    check_dim(b, d)?;
    let mut triplets = Vec::new();
    let bnz = b.nonzeros();
    for (i, k, av) in a.nonzeros() {
        for &(l, j, bv) in &bnz {
            triplets.push((i + d * j, k + d * l, av * bv));
        }
    }
    Superoperator::from_csr(d, CsrMatrix::from_triplets(d * d, d * d, triplets))
}

/// `ρ ↦ A ρ`
pub fn left(a: &OperatorMatrix) -> Superoperator {
    sandwich(a, &OperatorMatrix::identity(a.dim())).expect("matching dimensions")
}

/// `ρ ↦ ρ B`
pub fn right(b: &OperatorMatrix) -> Superoperator {
    sandwich(&OperatorMatrix::identity(b.dim()), b).expect("matching dimensions")
}

/// `ρ ↦ −i [H, ρ]`
pub fn hamiltonian_part(h: &OperatorMatrix) -> Superoperator {
    let comm = left(h)
        .add(&right(h).scale(-1.0))
        .expect("matching dimensions");
    Superoperator {
        hilbert_dim: comm.hilbert_dim,
        matrix: comm.matrix.scale(C64::new(0.0, -1.0)),
    }
}

/// `ρ ↦ rate · (2 C ρ C† − C†C ρ − ρ C†C)`.
///
/// Note there is no ½: for `C = a` at unit rate, `⟨a†a⟩` decays as `e^{−2t}`.
pub fn dissipator(c: &OperatorMatrix, rate: f64) -> Result<Superoperator> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter {
            field: "rate",
            reason: format!("decay rate must be finite and non-negative, got {rate}"),
        });
    }
    let d = c.dim();
    if rate == 0.0 {
        return Ok(Superoperator::zero(d));
    }
    let cdag = c.adjoint();
    let cdc = &cdag * c;
    let jump = sandwich(c, &cdag)?.scale(2.0);
    let total = jump.add(&left(&cdc).scale(-1.0))?.add(&right(&cdc).scale(-1.0))?;
    Ok(total.scale(rate))
}

/// A collapse operator with its physical rate.
#[derive(Clone, Debug)]
pub struct DecayChannel {
    pub name: &'static str,
    pub operator: OperatorMatrix,
    pub rate: f64,
}

/// Cavity leakage `a` at κ plus the three atomic decays `σ_ge`, `σ_me`, `σ_gm`.
pub fn decay_channels(p: &SystemParams, ops: &CompositeOperators) -> Vec<DecayChannel> {
    use Level::{E, G, M};
    vec![
        DecayChannel {
            name: "cavity",
            operator: ops.a().clone(),
            rate: p.kappa,
        },
        DecayChannel {
            name: "gamma_ge",
            operator: ops.sigma(G, E).clone(),
            rate: p.gamma_ge,
        },
        DecayChannel {
            name: "gamma_me",
            operator: ops.sigma(M, E).clone(),
            rate: p.gamma_me,
        },
        DecayChannel {
            name: "gamma_gm",
            operator: ops.sigma(G, M).clone(),
            rate: p.gamma_gm,
        },
    ]
}

/// Full generator `L` with `vec(dρ/dt) = L vec(ρ)`.
pub fn assemble_liouvillian(p: &SystemParams) -> Result<Superoperator> {
    p.validate()?;
    let ops = CompositeOperators::new(p.truncation()?);
    liouvillian_from_ops(p, &ops)
}

pub(crate) fn liouvillian_from_ops(
    p: &SystemParams,
    ops: &CompositeOperators,
) -> Result<Superoperator> {
    let h = hamiltonian_from_ops(p, ops);
    let weight = p.decay_convention.dissipator_weight();
    let mut l = hamiltonian_part(&h);
    for ch in decay_channels(p, ops) {
        l = l.add(&dissipator(&ch.operator, weight * ch.rate)?)?;
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{assemble_hamiltonian, DecayConvention};
    use crate::hilbert::{annihilation, FockTruncation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_op(d: usize, rng: &mut impl Rng) -> OperatorMatrix {
        OperatorMatrix::from_matrix(DMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))
        .unwrap()
    }

    #[test]
    fn vec_round_trip_and_column_stacking() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let rho = random_op(4, &mut rng);
        let v = vectorize(&rho);
        assert_eq!(v[1 + 4 * 2], rho.get(1, 2));
        assert_eq!(unvectorize(&v).unwrap(), rho);
        assert!(unvectorize(&v[..15]).is_err());
    }

    #[test]
    fn sandwich_matches_dense_product() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let (a, b, rho) = (
            random_op(5, &mut rng),
            random_op(5, &mut rng),
            random_op(5, &mut rng),
        );
        let via_super = sandwich(&a, &b).unwrap().apply(&rho).unwrap();
        let direct = &(&a * &rho) * &b;
        assert!((&via_super - &direct).max_abs() < 1e-12);
    }

    #[test]
    fn cavity_decay_rate_convention() {
        let t = FockTruncation::new(2).unwrap();
        let a = annihilation(t);
        let mut rho = OperatorMatrix::zeros(3);
        rho.set(1, 1, C64::new(1.0, 0.0));
        let drho = dissipator(&a, 1.0).unwrap().apply(&rho).unwrap();
        let n = &a.adjoint() * &a;
        let dn = n.trace_product(&drho);
        assert!((dn - C64::new(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_rate_and_negative_rate() {
        let a = annihilation(FockTruncation::new(2).unwrap());
        assert_eq!(dissipator(&a, 0.0).unwrap().matrix().nnz(), 0);
        assert!(dissipator(&a, -0.1).is_err());
        assert!(dissipator(&a, f64::NAN).is_err());
    }

    #[test]
    fn empty_dark_state_is_stationary() {
        let p = SystemParams {
            eta: 0.0,
            omega_l: 0.0,
            n_max: 3,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        let t = p.truncation().unwrap();
        let mut rho = OperatorMatrix::zeros(t.composite_dim());
        let g0 = t.index(Level::G, 0);
        rho.set(g0, g0, C64::new(1.0, 0.0));
        let out = l.apply(&rho).unwrap();
        assert!(out.max_abs() < 1e-15);
    }

    #[test]
    fn unitary_limit_has_imaginary_spectrum() {
        let p = SystemParams {
            gamma_ge: 0.0,
            gamma_me: 0.0,
            gamma_gm: 0.0,
            kappa: 0.0,
            omega_l: 3.0,
            delta_p: -2.0,
            n_max: 2,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        let ev = l.eigenvalues().unwrap();
        assert!(ev.iter().all(|z| z.re.abs() < 1e-9));
        assert!(ev.iter().any(|z| z.im.abs() > 1.0));
    }

    #[test]
    fn spectrum_is_contractive_at_reference_parameters() {
        for convention in [DecayConvention::Standard, DecayConvention::Doubled] {
            let p = SystemParams {
                omega_l: 11.0,
                delta_p: -10.0,
                n_max: 3,
                decay_convention: convention,
                ..SystemParams::default()
            };
            let ev = assemble_liouvillian(&p).unwrap().eigenvalues().unwrap();
            let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            assert!(max_re.abs() < 1e-8, "{convention:?}: max Re = {max_re}");
        }
    }

    #[test]
    fn doubled_convention_is_twice_the_standard_dissipation() {
        let p = |c| SystemParams {
            n_max: 2,
            omega_l: 3.0,
            decay_convention: c,
            ..SystemParams::default()
        };
        let std = assemble_liouvillian(&p(DecayConvention::Standard)).unwrap();
        let dbl = assemble_liouvillian(&p(DecayConvention::Doubled)).unwrap();
        let h = hamiltonian_part(&assemble_hamiltonian(&p(DecayConvention::Standard)).unwrap());
        let diff = dbl.add(&std.scale(-2.0)).unwrap().add(&h).unwrap();
        assert!(diff.matrix().max_abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn dissipator_is_trace_preserving(seed in any::<u64>(), rate in 0.0..5.0f64) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let c = random_op(4, &mut rng);
            prop_assert!(dissipator(&c, rate).unwrap().trace_defect() < 1e-10);
        }

        #[test]
        fn liouvillian_is_trace_preserving(
            g in 0.5..20.0f64,
            eta in 0.0..1.0f64,
            omega_l in 0.0..15.0f64,
            delta_p in -20.0..20.0f64,
            delta_l in -15.0..15.0f64,
        ) {
            let p = SystemParams { g, eta, omega_l, delta_p, delta_l, n_max: 3, ..SystemParams::default() };
            prop_assert!(assemble_liouvillian(&p).unwrap().trace_defect() < 1e-10);
        }
    }
}
