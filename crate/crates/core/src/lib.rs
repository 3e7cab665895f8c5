//! Driven three-level Λ atom coupled to a lossy cavity.
//!
//! All rates and detunings are in units of the cavity decay rate κ.

pub mod dynamics;
pub mod eigenstructure;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod liouvillian;
pub mod output;
pub mod steadystate;
pub mod sweep;

pub use error::{Error, Result};
pub use hamiltonian::{assemble_hamiltonian, DecayConvention, SystemParams};
pub use hilbert::{FockTruncation, Level, OperatorMatrix};
pub use liouvillian::{assemble_liouvillian, Superoperator};
pub use steadystate::{steady_state, DensityMatrix, SteadyObservables};
pub use sweep::{GridSpec, MagicResult, SweepRecord};
