//! Single-channel transmission through double quantum dots in the
//! non-Hermitian effective-Hamiltonian formalism.
//!
//! A double dot consists of two single dots connected by a wire mode and
//! coupled to semi-infinite tight-binding leads. Opening the closed system
//! turns its real Hamiltonian into an energy-dependent complex symmetric
//! matrix whose eigenvalues carry resonance positions and widths. The
//! crate computes those eigenvalues, the Landauer-type transmission, and
//! the branch points (exceptional points) in the complex plane where two
//! eigenvalues and their eigenvectors coalesce.
//!
//! Modules:
//! - [`model`]: system definition, closed Hamiltonian, effective Hamiltonian
//! - [`spectral`]: complex symmetric eigensolver, biorthogonal normalization,
//!   trajectory tracking, resonance fixed points
//! - [`transmission`]: spectral and resolvent transmission amplitudes,
//!   scattering matrix, transmission-zero prediction
//! - [`branchpoints`]: analytic three-state coalescence conditions and a
//!   numeric two-parameter search
//! - [`sweep`]: parameter-sweep engine and CSV/JSON export
//! - [`presets`]: built-in figure-reproduction configurations

pub mod branchpoints;
pub mod error;
pub mod model;
pub mod presets;
pub mod spectral;
pub mod sweep;
pub mod transmission;

pub use branchpoints::{BranchPoint, BranchPointKind, DiscriminantF, EpSearch, Regime, SearchAxis};
pub use error::{Error, Result};
pub use model::{Channel, ClosedSpectrum, DoubleDotSpec, EffectiveHamiltonian};
pub use spectral::{AnalyticThreeState, EigenSet, ResonanceState, Trajectories};
pub use sweep::{Axis, Observable, SweepConfig, SweepParam, SweepResult};
pub use transmission::{ScatteringMatrix, TransmissionPoint, TransmissionZeros};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Format a float with 12 significant digits for reproducible data files.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" leaking into output files
        return "0.00000000000e0".to_string();
    }
    format!("{:.11e}", x)
}
