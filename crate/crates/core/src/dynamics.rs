//! Time evolution of the master equation and the delayed intensity correlation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, embed, FockTruncation, OperatorMatrix};
use crate::liouvillian::{unvectorize, vectorize, Superoperator};
use crate::steadystate::{observables, DensityMatrix, VACUUM_GUARD};

pub const RTOL: f64 = 1e-8;
pub const ATOL: f64 = 1e-10;
/// Largest superoperator dimension accepted by [`expm_propagate`].
pub const DENSE_EXPM_MAX_DIM: usize = 2500;
const MAX_STEPS: usize = 10_000_000;

/// Adaptive Dormand–Prince 5(4) integrator for `dv/dt = L v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rtol: RTOL,
            atol: ATOL,
        }
    }
}

// Dormand–Prince tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth- minus fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn check_grid(times: &[f64], name: &str) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if !times.iter().all(|t| t.is_finite()) || times[0] < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "{name} grid must be finite and start at or after 0"
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl Integrator {
    /// `exp(L t) v0` at every time in `times`, starting from `t = 0`.
    pub fn propagate(&self, l: &Superoperator, v0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
        check_grid(times, "time")?;
        let n = l.dim();
        if v0.len() != n {
            return Err(Error::DimensionMismatch {
                context: "propagated vector",
                expected: n.to_string(),
                found: v0.len().to_string(),
            });
        }
        let m = l.matrix();
        let mut y = v0.to_vec();
        let mut out = Vec::with_capacity(times.len());
        let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::default(); n]);
        let mut tmp = vec![C64::default(); n];
        let mut y_new = vec![C64::default(); n];
        m.mul_vec_into(&y, &mut k[0]);

        let row_bound = (0..n)
            .map(|i| m.row(i).map(|(_, z)| z.norm()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        let mut h = if row_bound > 0.0 { 0.5 / row_bound } else { 1.0 };
        let mut t = 0.0_f64;
        let mut steps = 0usize;

        for &target in times {
            while t < target {
                let last = target - t <= h * (1.0 + 1e-12);
                let step = if last { target - t } else { h };
                if step < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::IntegrationFailure {
                        time: t,
                        reason: format!("step size underflow ({step:e})"),
                    });
                }
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::IntegrationFailure {
                        time: t,
                        reason: "step budget exhausted".to_string(),
                    });
                }

                let stage = |coeffs: &[(usize, f64)], k: &[Vec<C64>; 7], tmp: &mut Vec<C64>| {
                    for i in 0..n {
                        let mut acc = y[i];
                        for &(j, a) in coeffs {
                            acc += k[j][i] * (a * step);
                        }
                        tmp[i] = acc;
                    }
                };
                stage(&[(0, A21)], &k, &mut tmp);
                m.mul_vec_into(&tmp, &mut k[1]);
                stage(&[(0, A31), (1, A32)], &k, &mut tmp);
                m.mul_vec_into(&tmp, &mut k[2]);
                stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
                m.mul_vec_into(&tmp, &mut k[3]);
                stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
                m.mul_vec_into(&tmp, &mut k[4]);
                stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
                m.mul_vec_into(&tmp, &mut k[5]);
                stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k, &mut y_new);
                m.mul_vec_into(&y_new, &mut k[6]);

                let mut err2 = 0.0;
                for i in 0..n {
                    let e = (k[0][i] * E1
                        + k[2][i] * E3
                        + k[3][i] * E4
                        + k[4][i] * E5
                        + k[5][i] * E6
                        + k[6][i] * E7)
                        * step;
                    let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                    err2 += (e.norm() / sc).powi(2);
                }
                let err = (err2 / n as f64).sqrt();

                if err <= 1.0 {
                    t = if last { target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6);
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                    // A clipped final step says nothing about the natural step size.
                    if !last || step * grow > h {
                        h = step * grow;
                    }
                } else {
                    h = step * (0.9 * err.powf(-0.2)).max(0.2);
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}

/// States and observable tracks along a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub n_cav: Vec<f64>,
    /// `[p_g, p_e, p_m]` at each time.
    pub populations: Vec<[f64; 3]>,
}

fn check_state(rho0: &DensityMatrix, l: &Superoperator) -> Result<FockTruncation> {
    if rho0.dim() != l.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: l.hilbert_dim().to_string(),
            found: rho0.dim().to_string(),
        });
    }
    FockTruncation::from_composite_dim(rho0.dim())
}

fn trajectory(times: &[f64], states: Vec<DensityMatrix>, trunc: FockTruncation) -> Result<Trajectory> {
    let mut n_cav = Vec::with_capacity(states.len());
    let mut populations = Vec::with_capacity(states.len());
    for s in &states {
        let o = observables(s, trunc)?;
        n_cav.push(o.n_cav);
        populations.push([o.pop_g, o.pop_e, o.pop_m]);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        n_cav,
        populations,
    })
}

/// Integrates `dρ/dt = L ρ` from `rho0` at `t = 0`.
pub fn evolve(rho0: &DensityMatrix, l: &Superoperator, t_grid: &[f64]) -> Result<Trajectory> {
    evolve_with(&Integrator::default(), rho0, l, t_grid)
}

pub fn evolve_with(
    integrator: &Integrator,
    rho0: &DensityMatrix,
    l: &Superoperator,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let trunc = check_state(rho0, l)?;
    let vs = integrator.propagate(l, &vectorize(rho0.operator()), t_grid)?;
    let states = vs
        .iter()
        .map(|v| unvectorize(v).map(DensityMatrix::new_unchecked))
        .collect::<Result<Vec<_>>>()?;
    trajectory(t_grid, states, trunc)
}

/// Dense `exp(L t)` propagation; the independent reference for [`evolve`].
pub fn expm_propagate(rho0: &DensityMatrix, l: &Superoperator, t_grid: &[f64]) -> Result<Trajectory> {
    let trunc = check_state(rho0, l)?;
    check_grid(t_grid, "time")?;
    if l.dim() > DENSE_EXPM_MAX_DIM {
        return Err(Error::DimensionMismatch {
            context: "dense matrix exponential",
            expected: format!("at most {DENSE_EXPM_MAX_DIM}"),
            found: l.dim().to_string(),
        });
    }
    let dense = l.to_dense();
    let v0 = nalgebra::DVector::from_vec(vectorize(rho0.operator()));
    let states = t_grid
        .iter()
        .map(|&t| {
            let v = (&dense * C64::new(t, 0.0)).exp() * &v0;
            unvectorize(v.as_slice()).map(DensityMatrix::new_unchecked)
        })
        .collect::<Result<Vec<_>>>()?;
    trajectory(t_grid, states, trunc)
}

/// `τ = 0` followed by 199 log-spaced delays on `[10⁻³, 20]`.
pub fn default_tau_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3_f64.log10(), 20f64.log10());
    std::iter::once(0.0)
        .chain((0..199).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / 198.0)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Point {
    pub tau: f64,
    pub g2_tau: f64,
}

/// Delayed intensity correlation from the regression theorem:
/// `g²(τ) = Tr[a†a e^{Lτ}(a ρ a†)] / ⟨a†a⟩²`.
pub fn g2_tau(rho_ss: &DensityMatrix, l: &Superoperator, tau_grid: &[f64]) -> Result<Vec<G2Point>> {
    let trunc = check_state(rho_ss, l)?;
    let n_cav = observables(rho_ss, trunc)?.n_cav;
    if n_cav < VACUUM_GUARD {
        return Err(Error::VacuumCorrelation { n_cav });
    }
    let a = embed(&OperatorMatrix::identity(3), &annihilation(trunc))?;
    let seeded = &(&a * rho_ss.operator()) * &a.adjoint();
    let vs = Integrator::default().propagate(l, &vectorize(&seeded), tau_grid)?;
    let d = trunc.composite_dim();
    Ok(tau_grid
        .iter()
        .zip(&vs)
        .map(|(&tau, v)| {
            // Tr[a†a X] only involves the diagonal of X.
            let num: f64 = (0..d)
                .map(|k| trunc.split(k).map_or(0, |(_, n)| n) as f64 * v[k + d * k].re)
                .sum();
            G2Point {
                tau,
                g2_tau: num / (n_cav * n_cav),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::SystemParams;
    use crate::hilbert::Level;
    use crate::liouvillian::{assemble_liouvillian, dissipator};
    use crate::steadystate::steady_state;

    fn fig3(omega_l: f64, delta_p: f64) -> SystemParams {
        SystemParams::default().with_omega_l(omega_l).with_delta_p(delta_p)
    }

    #[test]
    fn single_photon_decay() {
        let t = FockTruncation::new(2).unwrap();
        let a = embed(&OperatorMatrix::identity(3), &annihilation(t)).unwrap();
        let l = dissipator(&a, 1.0).unwrap();
        let rho0 = DensityMatrix::basis_state(t, Level::G, 1);
        let grid: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
        let traj = evolve(&rho0, &l, &grid).unwrap();
        for (time, n) in traj.times.iter().zip(&traj.n_cav) {
            assert!((n - (-2.0 * time).exp()).abs() < 1e-6, "t = {time}");
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let t = FockTruncation::new(2).unwrap();
        let l = Superoperator::zero(t.composite_dim());
        let rho0 = DensityMatrix::basis_state(t, Level::M, 2);
        let traj = evolve(&rho0, &l, &[0.0, 1.0, 10.0]).unwrap();
        for s in &traj.states {
            assert_eq!(s, &rho0);
        }
    }

    #[test]
    fn agrees_with_matrix_exponential() {
        let p = fig3(11.0, -5.0).with_n_max(3);
        let p = SystemParams { eta: 0.8, ..p };
        let l = assemble_liouvillian(&p).unwrap();
        let rho0 = DensityMatrix::basis_state(p.truncation().unwrap(), Level::G, 0);
        let grid = [0.0, 0.1, 0.7, 2.0, 5.0];
        let a = evolve(&rho0, &l, &grid).unwrap();
        let b = expm_propagate(&rho0, &l, &grid).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let diff = (x.operator() - y.operator()).max_abs();
            assert!(diff < 1e-7, "diff {diff:e}");
        }
    }

    #[test]
    fn states_stay_physical() {
        let p = fig3(11.0, -14.0).with_n_max(4);
        let l = assemble_liouvillian(&p).unwrap();
        let rho0 = DensityMatrix::basis_state(p.truncation().unwrap(), Level::G, 0);
        let traj = evolve(&rho0, &l, &[0.5, 3.0, 9.0]).unwrap();
        for s in &traj.states {
            assert!((s.trace().re - 1.0).abs() < 1e-8);
            assert!(s.operator().hermiticity_defect() < 1e-10);
        }
    }

    #[test]
    fn relaxes_to_steady_state() {
        let p = fig3(11.0, -14.0);
        let l = assemble_liouvillian(&p).unwrap();
        let (rho_ss, _) = steady_state(&p).unwrap();
        let rho0 = DensityMatrix::basis_state(p.truncation().unwrap(), Level::G, 0);
        let traj = evolve(&rho0, &l, &[50.0]).unwrap();
        let d = traj.states[0].trace_distance(&rho_ss);
        assert!(d < 1e-6, "trace distance {d:e}");
    }

    #[test]
    fn rejects_bad_grids() {
        let t = FockTruncation::new(1).unwrap();
        let l = Superoperator::zero(t.composite_dim());
        let rho0 = DensityMatrix::basis_state(t, Level::G, 0);
        assert!(matches!(evolve(&rho0, &l, &[]), Err(Error::InvalidGrid(_))));
        assert!(matches!(evolve(&rho0, &l, &[1.0, 1.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(evolve(&rho0, &l, &[-1.0]), Err(Error::InvalidGrid(_))));
        let wrong = DensityMatrix::basis_state(FockTruncation::new(2).unwrap(), Level::G, 0);
        assert!(evolve(&wrong, &l, &[1.0]).is_err());
    }

    #[test]
    fn tight_tolerances_underflow() {
        let p = fig3(11.0, 0.0).with_n_max(2);
        let l = assemble_liouvillian(&p).unwrap();
        let rho0 = DensityMatrix::basis_state(p.truncation().unwrap(), Level::G, 0);
        let strict = Integrator {
            rtol: 0.0,
            atol: 1e-300,
        };
        assert!(matches!(
            evolve_with(&strict, &rho0, &l, &[1.0]),
            Err(Error::IntegrationFailure { .. })
        ));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert!((g[199] - 20.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_delay_matches_steady_state() {
        let p = fig3(11.0, -(221f64).sqrt());
        let l = assemble_liouvillian(&p).unwrap();
        let (rho, obs) = steady_state(&p).unwrap();
        let g = g2_tau(&rho, &l, &[0.0]).unwrap();
        assert!((g[0].g2_tau - obs.g2_zero.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn correlations_factorize_and_stay_non_negative() {
        let p = fig3(11.0, -(221f64).sqrt());
        let l = assemble_liouvillian(&p).unwrap();
        let (rho, obs) = steady_state(&p).unwrap();
        let grid = default_tau_grid();
        let g = g2_tau(&rho, &l, &grid).unwrap();
        assert!(g.iter().all(|pt| pt.g2_tau >= 0.0));
        assert!((g[199].g2_tau - 1.0).abs() < 2e-2, "g2(20) = {}", g[199].g2_tau);
        // Antibunching at the one-photon resonance. The correlation first dips
        // with the dressed-state beat, then exceeds g²(0) within a cavity lifetime.
        let g0 = obs.g2_zero.unwrap();
        assert!(g.iter().any(|pt| pt.tau <= 1.0 && pt.g2_tau > g0));
        assert!(g.iter().filter(|pt| pt.tau >= 0.5).all(|pt| pt.g2_tau > g0));
    }

    #[test]
    fn seeded_trace_is_conserved() {
        let p = fig3(4.5, -10.8).with_n_max(5);
        let l = assemble_liouvillian(&p).unwrap();
        let (rho, _) = steady_state(&p).unwrap();
        let t = p.truncation().unwrap();
        let a = embed(&OperatorMatrix::identity(3), &annihilation(t)).unwrap();
        let seeded = &(&a * rho.operator()) * &a.adjoint();
        let tr0 = seeded.trace().re;
        let vs = Integrator::default()
            .propagate(&l, &vectorize(&seeded), &[0.01, 1.0, 10.0])
            .unwrap();
        for v in vs {
            let tr = unvectorize(&v).unwrap().trace();
            assert!((tr.re - tr0).abs() < 1e-8 * tr0 && tr.im.abs() < 1e-8 * tr0);
        }
    }

    #[test]
    fn vacuum_is_rejected() {
        let p = SystemParams {
            eta: 0.0,
            ..fig3(0.0, 0.0)
        }
        .with_n_max(2);
        let l = assemble_liouvillian(&p).unwrap();
        let rho = DensityMatrix::basis_state(p.truncation().unwrap(), Level::G, 0);
        assert!(matches!(g2_tau(&rho, &l, &[0.0]), Err(Error::VacuumCorrelation { .. })));
    }
}
