//! Jacobi coefficients from the resolvent data, orthogonal polynomials and
//! transfer matrices.

mod almost_periodic;
mod cf;
mod segment;
mod spectrum;
mod transfer;

pub use almost_periodic::{almost_periodicity_report, torus_distance, AlmostPeriodicityReport, NearPeriod};
pub use cf::{cf_step, dual_state, CfState, CfStep};
pub use segment::{coefficients, coefficients_from_state, coefficients_with_precision, JacobiSegment};
pub use spectrum::{ks_distance_to_dos, truncation_eigenvalues};
pub use transfer::{
    cd_kernel, cd_residual, det_residual, j_expanding_min_eigenvalue, j_matrix, j_unitarity_residual,
    orthogonal_polys, orthogonal_polys_upto, transfer_matrix, CMatrix2,
};
