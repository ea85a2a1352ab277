//! Energy-constrained channel fidelity between ideal continuous-variable
//! teleportation channels (identity, SWAP) and additive-noise channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: twin-Fock spectra, truncated density matrices, photon statistics.
//! * [`channels`]: pure-loss, quantum-limited amplifier and additive-noise
//!   channels in the Fock basis, plus the closed-form overlap traces.
//! * [`fidelity`]: exact fidelity functionals, the Kraus-composition oracle,
//!   lower bounds and Gaussian baselines.
//! * [`closedform`]: optimal input states with their validity regimes,
//!   truncation sandwich bounds and the sub-multiplicativity gap.
//! * [`optimize`]: Frank-Wolfe minimisation over the energy-constrained
//!   simplex and a brute-force lattice oracle.

pub mod channels;
pub mod closedform;
mod error;
pub mod fidelity;
pub mod fock;
pub mod optimize;

pub use channels::{overlap_trace, ChannelParams};
pub use closedform::{
    optimal_bi_asym, optimal_bi_equal, optimal_uni, sandwich_bi, sandwich_uni, submult_gap,
    FidelityBounds, OptimalSolution, RegimeClause, RegimeVerdict,
};
pub use error::{Error, Result};
pub use fidelity::{
    coherent_fidelity, exact_bi_fidelity, exact_uni_fidelity, tmsv_fidelity, FidelityValue,
    Method,
};
pub use fock::{BipartiteSpectrum, DensityMatrix, EnergyBudget, SchmidtSpectrum, Spectrum};
pub use optimize::{MinimizeOptions, MinimizeResult, Mode, PolytopeSpec};

/// Complex scalar used for all operator entries.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix on a truncated Fock space.
pub type CMatrix = nalgebra::DMatrix<C64>;
