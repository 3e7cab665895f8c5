//! Dressed-state structure of the undriven system in a fixed photon sector.
//!
//! With the probe off and the cavity resonant, the `n`-excitation manifold is
//! spanned by `|g,n⟩, |e,n−1⟩, |m,n−1⟩`. The block Hamiltonian is written in
//! the rotated basis `{|g,n⟩, |+,n−1⟩, |−,n−1⟩}` with
//! `|±⟩ = (|m⟩ ± |e⟩)/√2`; [`dressed_to_bare`] maps back to the bare basis
//! `{|g,n⟩, |e,n−1⟩, |m,n−1⟩}` used by [`AnalyticEigen`] and [`JcDoublet`].

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::OperatorMatrix;

const DEGENERACY_TOL: f64 = 1e-12;

fn check_sector(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidSector(n));
    }
    Ok(())
}

fn check_finite(fields: &[(&'static str, f64)]) -> Result<()> {
    for &(field, v) in fields {
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                field,
                reason: format!("must be finite, got {v}"),
            });
        }
    }
    Ok(())
}

fn block_real(n: usize, g: f64, omega_l: f64, delta_l: f64) -> Matrix3<f64> {
    let c = g * (n as f64 / 2.0).sqrt();
    let h = delta_l / 2.0;
    Matrix3::new(
        0.0,
        c,
        -c,
        c,
        omega_l + h,
        h,
        -c,
        h,
        -omega_l + h,
    )
}

/// Block Hamiltonian of the `n`-photon sector in the `{|g,n⟩, |+,n−1⟩, |−,n−1⟩}` basis.
pub fn block_hamiltonian(n: usize, g: f64, omega_l: f64, delta_l: f64) -> Result<OperatorMatrix> {
    check_sector(n)?;
    check_finite(&[("g", g), ("omega_l", omega_l), ("delta_l", delta_l)])?;
    let m = block_real(n, g, omega_l, delta_l);
    OperatorMatrix::from_matrix(nalgebra::DMatrix::from_fn(3, 3, |i, j| {
        C64::new(m[(i, j)], 0.0)
    }))
}

/// Columns are the dressed basis vectors expressed in the bare basis.
pub fn dressed_to_bare() -> Matrix3<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, s, -s, //
        0.0, s, s,
    )
}

pub fn to_bare(v: &[f64; 3]) -> [f64; 3] {
    let b = dressed_to_bare() * Vector3::from_column_slice(v);
    [b[0], b[1], b[2]]
}

/// Numeric eigen-decomposition of one photon sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorEigen {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors in the dressed basis, matching `eigenvalues`.
    pub eigenvectors: [[f64; 3]; 3],
}

impl SectorEigen {
    pub fn compute(n: usize, g: f64, omega_l: f64, delta_l: f64) -> Result<Self> {
        check_sector(n)?;
        check_finite(&[("g", g), ("omega_l", omega_l), ("delta_l", delta_l)])?;
        let eig = block_real(n, g, omega_l, delta_l).symmetric_eigen();
        let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
            .map(|k| {
                let col = eig.eigenvectors.column(k);
                (eig.eigenvalues[k], fix_sign([col[0], col[1], col[2]]))
            })
            .collect();
        let scale = pairs.iter().fold(1.0_f64, |m, p| m.max(p.0.abs()));
        pairs.sort_by(|a, b| {
            if (a.0 - b.0).abs() <= DEGENERACY_TOL * scale {
                b.1[0].abs().total_cmp(&a.1[0].abs())
            } else {
                a.0.total_cmp(&b.0)
            }
        });
        Ok(Self {
            n,
            eigenvalues: [pairs[0].0, pairs[1].0, pairs[2].0],
            eigenvectors: [pairs[0].1, pairs[1].1, pairs[2].1],
        })
    }

    pub fn bare_eigenvectors(&self) -> [[f64; 3]; 3] {
        self.eigenvectors.map(|v| to_bare(&v))
    }
}

/// Positive `|g,n⟩` amplitude, or positive leading component if that vanishes.
fn fix_sign(v: [f64; 3]) -> [f64; 3] {
    let pivot = v
        .iter()
        .copied()
        .find(|x| x.abs() > 1e-12)
        .unwrap_or(1.0);
    if pivot < 0.0 {
        v.map(|x| -x)
    } else {
        v
    }
}

/// Eigen-decompositions of consecutive photon sectors at fixed control field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenLadder {
    pub g: f64,
    pub omega_l: f64,
    pub delta_l: f64,
    pub entries: Vec<SectorEigen>,
}

impl EigenLadder {
    pub fn compute(
        g: f64,
        omega_l: f64,
        delta_l: f64,
        sectors: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let entries = sectors
            .into_iter()
            .map(|n| SectorEigen::compute(n, g, omega_l, delta_l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            g,
            omega_l,
            delta_l,
            entries,
        })
    }
}

/// Closed-form eigensystem at `Δ_L = 0`, vectors in the bare basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticEigen {
    pub lambda_zero: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub psi_zero: [f64; 3],
    pub psi_minus: [f64; 3],
    pub psi_plus: [f64; 3],
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / norm)
}

/// `λ₀ = 0`, `λ± = ±√(Ω_L² + n g²)` and their eigenvectors.
///
/// The dark state is `|g,n⟩ − (g√n / Ω_L)|m,n−1⟩`: it has no `|e⟩` amplitude
/// and is the `λ → 0` member of the same family as the bright states.
pub fn analytic_eigen(n: usize, g: f64, omega_l: f64) -> Result<AnalyticEigen> {
    check_sector(n)?;
    check_finite(&[("g", g), ("omega_l", omega_l)])?;
    if omega_l <= 0.0 {
        return Err(Error::DegenerateLimit);
    }
    let nf = n as f64;
    let lambda = (omega_l * omega_l + nf * g * g).sqrt();
    let psi_zero = normalized([1.0, 0.0, -g * nf.sqrt() / omega_l]);
    let c = g * (nf / 2.0).sqrt();
    let bright = |l: f64| {
        let plus = c / (l - omega_l);
        let minus = -c / (l + omega_l);
        normalized(to_bare(&[1.0, plus, minus]))
    };
    Ok(AnalyticEigen {
        lambda_zero: 0.0,
        lambda_minus: -lambda,
        lambda_plus: lambda,
        psi_zero,
        psi_minus: bright(-lambda),
        psi_plus: bright(lambda),
    })
}

/// Bare atom–cavity doublet of the `n`-photon sector, bare basis.
#[derive(Clone, Debug, PartialEq)]
pub struct JcDoublet {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub phi_minus: [f64; 3],
    pub phi_plus: [f64; 3],
}

pub fn jc_ladder(n: usize, g: f64) -> Result<JcDoublet> {
    check_sector(n)?;
    check_finite(&[("g", g)])?;
    let split = g * (n as f64).sqrt();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(JcDoublet {
        lambda_minus: -split,
        lambda_plus: split,
        phi_minus: [-s, s, 0.0],
        phi_plus: [s, s, 0.0],
    })
}

/// One row of an eigenvalue scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub omega_l: f64,
    pub n: usize,
    pub lambda_minus: f64,
    pub lambda_zero: f64,
    pub lambda_plus: f64,
}

/// Sorted sector eigenvalues over a control-field grid; `omega_l` is the outer
/// loop and `n` the inner one.
pub fn ladder_scan(
    g: f64,
    delta_l: f64,
    omega_l_grid: &[f64],
    sectors: &[usize],
) -> Result<Vec<LadderRow>> {
    if omega_l_grid.is_empty() || sectors.is_empty() {
        return Err(Error::InvalidGrid("ladder scan needs non-empty grids".to_string()));
    }
    let points: Vec<(f64, usize)> = omega_l_grid
        .iter()
        .flat_map(|&w| sectors.iter().map(move |&n| (w, n)))
        .collect();
    points
        .par_iter()
        .map(|&(omega_l, n)| {
            let e = SectorEigen::compute(n, g, omega_l, delta_l)?;
            Ok(LadderRow {
                omega_l,
                n,
                lambda_minus: e.eigenvalues[0],
                lambda_zero: e.eigenvalues[1],
                lambda_plus: e.eigenvalues[2],
            })
        })
        .collect()
}
