//! Stationary state of the master equation and its photon statistics.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SystemParams;
use crate::hilbert::{CompositeOperators, FockTruncation, Level, OperatorMatrix};
use crate::linalg::{self, BandedLu};
use crate::liouvillian::{liouvillian_from_ops, unvectorize, vectorize, Superoperator};

/// Below this photon number `g²(0)` is reported as undefined.
pub const VACUUM_GUARD: f64 = 1e-14;
/// Most negative eigenvalue tolerated in a returned state.
pub const POSITIVITY_TOL: f64 = -1e-8;
/// Accepted `‖L vec ρ‖ / ‖L‖_F`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(OperatorMatrix);

impl DensityMatrix {
    /// Validates Hermiticity (1e-10), unit trace (1e-8) and positivity.
    pub fn new(op: OperatorMatrix) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::InvalidParameter {
                field: "rho",
                reason: format!("not Hermitian (defect {herm:e})"),
            });
        }
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidParameter {
                field: "rho",
                reason: format!("trace {tr} differs from 1"),
            });
        }
        let rho = Self(op);
        let min = rho.min_eigenvalue();
        if min < POSITIVITY_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(rho)
    }

    /// Skips validation; for intermediate states whose checks are done by
    /// the caller.
    pub fn new_unchecked(op: OperatorMatrix) -> Self {
        Self(op)
    }

    /// `|level, n⟩⟨level, n|`
    pub fn basis_state(trunc: FockTruncation, level: Level, n: usize) -> Self {
        let mut op = OperatorMatrix::zeros(trunc.composite_dim());
        let k = trunc.index(level, n);
        op.set(k, k, C64::new(1.0, 0.0));
        Self(op)
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = linalg::norm(psi);
        if norm == 0.0 {
            return Err(Error::InvalidParameter {
                field: "psi",
                reason: "zero vector".to_string(),
            });
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(OperatorMatrix::from_matrix(&v * v.adjoint())?)
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.0
    }

    pub fn into_operator(self) -> OperatorMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.hermitian_eigenvalues()[0]
    }

    /// `Re Tr(ρ O)`
    pub fn expectation(&self, op: &OperatorMatrix) -> f64 {
        self.0.trace_product(op).re
    }

    /// `½ ‖ρ − σ‖₁`
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.0 - &other.0;
        0.5 * diff.hermitian_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
    }
}

/// Linear-algebra route to the stationary state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SteadySolver {
    /// Trace-constrained solve on the RCM-reordered banded system. The
    /// redundant population equation of `|g,0⟩⟨g,0|` is traded for the
    /// normalization, which is equivalent to replacing that row of `L` by
    /// the trace functional. Falls back to [`SteadySolver::DenseTraceRow`]
    /// if that population vanishes.
    #[default]
    BandedTraceRow,
    /// Row 0 of dense `L` replaced by `vec(I)†`, then dense LU.
    DenseTraceRow,
    /// Right singular vector of the smallest singular value of `L`.
    NullSpaceSvd,
}

pub fn solve_steady(l: &Superoperator) -> Result<DensityMatrix> {
    solve_steady_with(l, SteadySolver::default())
}

pub fn solve_steady_with(l: &Superoperator, method: SteadySolver) -> Result<DensityMatrix> {
    let raw = match method {
        SteadySolver::BandedTraceRow => match banded_trace_row(l) {
            Some(v) => v,
            None => dense_trace_row(l)?,
        },
        SteadySolver::DenseTraceRow => dense_trace_row(l)?,
        SteadySolver::NullSpaceSvd => null_space(l)?,
    };
    finalize(l, raw)
}

fn banded_trace_row(l: &Superoperator) -> Option<Vec<C64>> {
    let m = l.matrix();
    let reduced = m.without_row_col(0);
    let rhs: Vec<C64> = m.column(0).into_iter().skip(1).map(|z| -z).collect();
    let perm = linalg::reverse_cuthill_mckee(&reduced);
    let lu = BandedLu::factor(&reduced, &perm).ok()?;
    let z = lu.solve(&rhs, &perm);
    let mut x = Vec::with_capacity(m.nrows());
    x.push(C64::new(1.0, 0.0));
    x.extend(z);
    Some(x)
}

fn trace_row_matrix(l: &Superoperator) -> DMatrix<C64> {
    let d = l.hilbert_dim();
    let mut dense = l.to_dense();
    dense.row_mut(0).fill(C64::new(0.0, 0.0));
    for i in 0..d {
        dense[(0, i + d * i)] = C64::new(1.0, 0.0);
    }
    dense
}

fn dense_trace_row(l: &Superoperator) -> Result<Vec<C64>> {
    let dense = trace_row_matrix(l);
    let scale = dense.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let lu = dense.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if min_pivot <= 1e-13 * scale {
        return Err(Error::NonUniqueSteadyState(format!(
            "trace-constrained generator is singular (pivot {min_pivot:e})"
        )));
    }
    let mut b = DVector::zeros(l.dim());
    b[0] = C64::new(1.0, 0.0);
    let x = lu
        .solve(&b)
        .ok_or_else(|| Error::NonUniqueSteadyState("singular LU factor".to_string()))?;
    Ok(x.iter().copied().collect())
}

fn null_space(l: &Superoperator) -> Result<Vec<C64>> {
    let svd = SVD::new(l.to_dense(), false, true);
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let largest = sv[order[sv.len() - 1]];
    if sv.len() > 1 && sv[order[1]] <= 1e-11 * largest {
        return Err(Error::NonUniqueSteadyState(format!(
            "two singular values below tolerance ({:e}, {:e})",
            sv[order[0]],
            sv[order[1]]
        )));
    }
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    Ok(v_t.row(order[0]).iter().map(|z| z.conj()).collect())
}

fn finalize(l: &Superoperator, raw: Vec<C64>) -> Result<DensityMatrix> {
    let op = unvectorize(&raw)?;
    let tr = op.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::NonUniqueSteadyState(
            "null vector has zero trace".to_string(),
        ));
    }
    let mut m = op.into_matrix().map(|z| z / tr);
    m = (&m + m.adjoint()).scale(0.5);
    let tr = m.trace().re;
    m = m.scale(1.0 / tr);
    let rho = OperatorMatrix::from_matrix(m)?;

    let residual = linalg::norm(&l.apply_vec(&vectorize(&rho)));
    let tolerance = RESIDUAL_TOL * l.matrix().frobenius_norm().max(1.0);
    if residual > tolerance {
        return Err(Error::InaccurateSteadyState {
            residual,
            tolerance,
        });
    }
    let rho = DensityMatrix::new_unchecked(rho);
    let min = rho.min_eigenvalue();
    if min < POSITIVITY_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(rho)
}

/// Stationary expectation values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyObservables {
    /// `⟨a†a⟩`
    pub n_cav: f64,
    /// `⟨a†a†aa⟩ / ⟨a†a⟩²`, `None` in the vacuum.
    pub g2_zero: Option<f64>,
    pub pop_g: f64,
    pub pop_e: f64,
    pub pop_m: f64,
    /// Set when `n_cav > n_max / 2`, i.e. the Fock cutoff is likely too low.
    pub truncation_suspect: bool,
}

/// Photon number, `g²(0)` and level populations of `rho`.
pub fn observables(rho: &DensityMatrix, trunc: FockTruncation) -> Result<SteadyObservables> {
    if rho.dim() != trunc.composite_dim() {
        return Err(Error::DimensionMismatch {
            context: "density matrix",
            expected: trunc.composite_dim().to_string(),
            found: rho.dim().to_string(),
        });
    }
    let op = rho.operator();
    let mut pops = [0.0; 3];
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for level in Level::ALL {
        for n in 0..=trunc.n_max() {
            let k = trunc.index(level, n);
            let p = op.get(k, k).re;
            pops[level.index()] += p;
            let nf = n as f64;
            n1 += nf * p;
            n2 += nf * (nf - 1.0) * p;
        }
    }
    let g2_zero = if n1 < VACUUM_GUARD {
        None
    } else {
        Some(n2 / (n1 * n1))
    };
    Ok(SteadyObservables {
        n_cav: n1,
        g2_zero,
        pop_g: pops[0],
        pop_e: pops[1],
        pop_m: pops[2],
        truncation_suspect: n1 > 0.5 * trunc.n_max() as f64,
    })
}

/// Builds the generator for `p`, solves it, and evaluates the observables.
pub fn steady_state(p: &SystemParams) -> Result<(DensityMatrix, SteadyObservables)> {
    p.validate()?;
    let trunc = p.truncation()?;
    let ops = CompositeOperators::new(trunc);
    let l = liouvillian_from_ops(p, &ops)?;
    let rho = solve_steady(&l)?;
    let obs = observables(&rho, trunc)?;
    Ok((rho, obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{atomic_sigma, embed};
    use crate::liouvillian::assemble_liouvillian;

    fn field_state(trunc: FockTruncation, weights: &[C64]) -> OperatorMatrix {
        // |g⟩⟨g| ⊗ |ψ⟩⟨ψ| with unnormalized amplitudes `weights`
        let d = trunc.field_dim();
        let psi = DVector::from_fn(d, |n, _| weights.get(n).copied().unwrap_or_default());
        let norm = psi.norm();
        let psi = psi / C64::new(norm, 0.0);
        let field = OperatorMatrix::from_matrix(&psi * psi.adjoint()).unwrap();
        embed(&atomic_sigma(Level::G, Level::G), &field).unwrap()
    }

    #[test]
    fn fock_state_observables() {
        let t = FockTruncation::new(4).unwrap();
        let rho = DensityMatrix::basis_state(t, Level::G, 1);
        let obs = observables(&rho, t).unwrap();
        assert_eq!(obs.n_cav, 1.0);
        assert_eq!(obs.g2_zero, Some(0.0));
        assert_eq!((obs.pop_g, obs.pop_e, obs.pop_m), (1.0, 0.0, 0.0));
    }

    #[test]
    fn thermal_field_has_g2_two() {
        let t = FockTruncation::new(30).unwrap();
        let nbar: f64 = 0.1;
        let q = nbar / (1.0 + nbar);
        let mut field = OperatorMatrix::zeros(t.field_dim());
        let mut z = 0.0;
        for n in 0..=t.n_max() {
            z += q.powi(n as i32);
        }
        for n in 0..=t.n_max() {
            field.set(n, n, C64::new(q.powi(n as i32) / z, 0.0));
        }
        let op = embed(&atomic_sigma(Level::G, Level::G), &field).unwrap();
        let rho = DensityMatrix::new(op).unwrap();
        let obs = observables(&rho, t).unwrap();
        assert!((obs.g2_zero.unwrap() - 2.0).abs() < 1e-6);
        assert!((obs.n_cav - nbar).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_has_g2_one() {
        // Oracle: c_n = α^n / sqrt(n!) expanded directly.
        let t = FockTruncation::new(10).unwrap();
        let alpha: f64 = 0.3;
        let mut amps = Vec::new();
        let mut fact = 1.0;
        for n in 0..=10 {
            if n > 0 {
                fact *= n as f64;
            }
            amps.push(C64::new(alpha.powi(n) / fact.sqrt(), 0.0));
        }
        let rho = DensityMatrix::new(field_state(t, &amps)).unwrap();
        let obs = observables(&rho, t).unwrap();
        assert!((obs.g2_zero.unwrap() - 1.0).abs() < 1e-4);
        assert!((obs.n_cav - alpha * alpha).abs() < 1e-8);
    }

    #[test]
    fn vacuum_has_undefined_g2() {
        let t = FockTruncation::new(2).unwrap();
        let rho = DensityMatrix::basis_state(t, Level::M, 0);
        assert_eq!(observables(&rho, t).unwrap().g2_zero, None);
    }

    #[test]
    fn density_matrix_validation() {
        let t = FockTruncation::new(1).unwrap();
        let mut op = OperatorMatrix::zeros(6);
        op.set(0, 0, C64::new(2.0, 0.0));
        assert!(DensityMatrix::new(op.clone()).is_err());
        op.set(0, 0, C64::new(1.5, 0.0));
        op.set(1, 1, C64::new(-0.5, 0.0));
        assert!(matches!(
            DensityMatrix::new(op),
            Err(Error::NotPositive { .. })
        ));
        let mut op = DensityMatrix::basis_state(t, Level::G, 0).into_operator();
        op.set(0, 1, C64::new(0.0, 0.1));
        assert!(DensityMatrix::new(op).is_err());
    }

    #[test]
    fn undriven_system_relaxes_to_empty_ground_state() {
        let p = SystemParams {
            eta: 0.0,
            omega_l: 4.0,
            n_max: 3,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        let t = p.truncation().unwrap();
        let target = DensityMatrix::basis_state(t, Level::G, 0);
        for method in [
            SteadySolver::BandedTraceRow,
            SteadySolver::DenseTraceRow,
            SteadySolver::NullSpaceSvd,
        ] {
            let rho = solve_steady_with(&l, method).unwrap();
            assert!(rho.trace_distance(&target) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn solvers_agree() {
        let p = SystemParams {
            omega_l: 11.0,
            delta_p: -14.0,
            n_max: 3,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        let a = solve_steady_with(&l, SteadySolver::BandedTraceRow).unwrap();
        let b = solve_steady_with(&l, SteadySolver::DenseTraceRow).unwrap();
        let c = solve_steady_with(&l, SteadySolver::NullSpaceSvd).unwrap();
        assert!((a.operator() - b.operator()).max_abs() < 1e-12);
        assert!((a.operator() - c.operator()).max_abs() < 1e-9);
    }

    #[test]
    fn trapped_metastable_population_is_non_unique() {
        // Without the m → g decay and without a control field, both |g,0⟩ and
        // |m,0⟩ are stationary.
        let p = SystemParams {
            eta: 0.0,
            omega_l: 0.0,
            gamma_gm: 0.0,
            n_max: 2,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        for method in [
            SteadySolver::BandedTraceRow,
            SteadySolver::DenseTraceRow,
            SteadySolver::NullSpaceSvd,
        ] {
            assert!(
                matches!(
                    solve_steady_with(&l, method),
                    Err(Error::NonUniqueSteadyState(_))
                ),
                "{method:?}"
            );
        }
    }

    #[test]
    fn empty_ground_population_falls_back_to_dense() {
        // Pump g → m with a strong probe and no m → g return; the stationary
        // state is |m,0⟩, which has no |g,0⟩ population to pin.
        let p = SystemParams {
            eta: 1.0,
            omega_l: 0.0,
            gamma_gm: 0.0,
            n_max: 2,
            ..SystemParams::default()
        };
        let l = assemble_liouvillian(&p).unwrap();
        let rho = solve_steady(&l).unwrap();
        let t = p.truncation().unwrap();
        let target = DensityMatrix::basis_state(t, Level::M, 0);
        assert!(rho.trace_distance(&target) < 1e-8);
    }

    #[test]
    fn one_photon_resonance_is_a_local_maximum() {
        let n_at = |dp: f64| {
            steady_state(&SystemParams::default().with_delta_p(dp).with_n_max(4))
                .unwrap()
                .1
                .n_cav
        };
        let (left, mid, right) = (n_at(-9.4), n_at(-9.15), n_at(-8.9));
        assert!(mid > left && mid > right, "{left} {mid} {right}");
    }
}
