//! Truncated atom ⊗ cavity-field Hilbert space and its elementary operators.
//!
//! Composite basis ordering is fixed everywhere in this crate: the atom is the
//! slow index and the Fock number the fast one,
//! `index = atom_index * (n_max + 1) + n` with `g → 0, e → 1, m → 2`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of atomic levels.
pub const ATOM_DIM: usize = 3;

/// Atomic level of the Λ system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Ground state.
    G,
    /// Excited state.
    E,
    /// Metastable state.
    M,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G, Level::E, Level::M];

    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::M => 2,
        }
    }

    pub fn from_index(idx: usize) -> Option<Level> {
        Level::ALL.get(idx).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::G => "g",
            Level::E => "e",
            Level::M => "m",
        };
        f.write_str(s)
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g" | "G" => Ok(Level::G),
            "e" | "E" => Ok(Level::E),
            "m" | "M" => Ok(Level::M),
            other => Err(Error::InvalidLevel(other.to_string())),
        }
    }
}

/// Highest retained Fock state of the cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter {
                field: "n_max",
                reason: format!("must be at least 1, got {n_max}"),
            });
        }
        Ok(Self { n_max })
    }

    /// Recovers the truncation from a composite-space dimension `3 (n_max + 1)`.
    pub fn from_composite_dim(dim: usize) -> Result<Self> {
        if dim % ATOM_DIM != 0 || dim / ATOM_DIM < 2 {
            return Err(Error::DimensionMismatch {
                context: "composite dimension",
                expected: "a multiple of 3 that is at least 6".to_string(),
                found: dim.to_string(),
            });
        }
        Self::new(dim / ATOM_DIM - 1)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn composite_dim(&self) -> usize {
        ATOM_DIM * self.field_dim()
    }

    /// Composite index of `|level, n⟩`.
    pub fn index(&self, level: Level, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        level.index() * self.field_dim() + n
    }

    /// Inverse of [`FockTruncation::index`].
    pub fn split(&self, index: usize) -> Option<(Level, usize)> {
        if index >= self.composite_dim() {
            return None;
        }
        let level = Level::from_index(index / self.field_dim())?;
        Some((level, index % self.field_dim()))
    }
}

/// Dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    data: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn from_matrix(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "operator",
                expected: "non-empty square matrix".to_string(),
                found: format!("{}x{}", data.nrows(), data.ncols()),
            });
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "operator entries",
                expected: (dim * dim).to_string(),
                found: entries.len().to_string(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.scale(factor),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entrywise modulus of `A − A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += self.data[(i, k)] * other.data[(k, i)];
            }
        }
        acc
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.data + self.data.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Nonzero entries as `(row, col, value)` in row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = self.data[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        OperatorMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

/// Field annihilation operator `a` on the `n_max + 1` dimensional Fock space.
pub fn annihilation(trunc: FockTruncation) -> OperatorMatrix {
    let d = trunc.field_dim();
    let mut a = OperatorMatrix::zeros(d);
    for n in 1..d {
        a.set(n - 1, n, C64::new((n as f64).sqrt(), 0.0));
    }
    a
}

/// Atomic transition operator `σ_ij = |i⟩⟨j|`.
pub fn atomic_sigma(i: Level, j: Level) -> OperatorMatrix {
    let mut s = OperatorMatrix::zeros(ATOM_DIM);
    s.set(i.index(), j.index(), C64::new(1.0, 0.0));
    s
}

/// Kronecker product `atom_op ⊗ field_op` in the composite basis.
pub fn embed(atom_op: &OperatorMatrix, field_op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if atom_op.dim() != ATOM_DIM {
        return Err(Error::DimensionMismatch {
            context: "atomic factor",
            expected: ATOM_DIM.to_string(),
            found: atom_op.dim().to_string(),
        });
    }
    if field_op.dim() < 2 {
        return Err(Error::DimensionMismatch {
            context: "field factor",
            expected: "at least 2".to_string(),
            found: field_op.dim().to_string(),
        });
    }
    Ok(OperatorMatrix {
        data: atom_op.data.kronecker(&field_op.data),
    })
}

/// The embedded operators every model needs, built once per truncation.
#[derive(Clone, Debug)]
pub struct CompositeOperators {
    trunc: FockTruncation,
    a: OperatorMatrix,
    number: OperatorMatrix,
    sigmas: Vec<OperatorMatrix>,
}

impl CompositeOperators {
    pub fn new(trunc: FockTruncation) -> Self {
        let field_id = OperatorMatrix::identity(trunc.field_dim());
        let a_field = annihilation(trunc);
        let a = embed(&OperatorMatrix::identity(ATOM_DIM), &a_field)
            .expect("dimensions fixed by construction");
        let number = &a.adjoint() * &a;
        let mut sigmas = Vec::with_capacity(ATOM_DIM * ATOM_DIM);
        for i in Level::ALL {
            for j in Level::ALL {
                sigmas.push(
                    embed(&atomic_sigma(i, j), &field_id)
                        .expect("dimensions fixed by construction"),
                );
            }
        }
        Self {
            trunc,
            a,
            number,
            sigmas,
        }
    }

    pub fn truncation(&self) -> FockTruncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.trunc.composite_dim()
    }

    /// `I ⊗ a`
    pub fn a(&self) -> &OperatorMatrix {
        &self.a
    }

    /// `I ⊗ a†a`
    pub fn number(&self) -> &OperatorMatrix {
        &self.number
    }

    /// `σ_ij ⊗ I`
    pub fn sigma(&self, i: Level, j: Level) -> &OperatorMatrix {
        &self.sigmas[i.index() * ATOM_DIM + j.index()]
    }
}
