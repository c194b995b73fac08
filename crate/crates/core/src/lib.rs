//! Fisher-symmetric informationally complete measurements for pure states.
//!
//! * [`povm`]: pure states, local parameters, rank-one POVMs and their real decomposition.
//! * [`fisher`]: classical and quantum Fisher matrices at the fiducial state.
//! * [`constructions`]: minimal and two-basis PFSICs, orthogonal mixing.
//! * [`tomography`]: Monte Carlo local tomography and the trine ambiguity.

pub mod constructions;
pub mod error;
pub mod fisher;
pub mod povm;
pub mod tomography;

pub use constructions::{
    minimal_pfsic, orthogonal_mix, symmetric_real_basis, two_basis_pfsic, ConstructionDescriptor,
    MixMode, OrthogonalMatrix, RealBasisSpec,
};
pub use error::{Error, Result};
pub use fisher::{
    classical_fisher, classical_fisher_fd, fisher_symmetry_quantity, gill_massar, is_pfsic,
    quantum_fisher_pure, FisherReport, PfsicVerdict,
};
pub use povm::{LocalParams, PureState, RankOnePovm, RealDecomposition};
pub use tomography::{
    estimate_local, run_trials, sample_outcomes, trine_ambiguity_demo, SimConfig, SimReport,
};

/// Toolkit version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
