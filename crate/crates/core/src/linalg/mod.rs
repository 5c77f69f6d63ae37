//! Kernel construction and the dense primitives everything else is built on:
//! spectra, elementary symmetric polynomials, principal minors, Schur
//! conditioning and kernel-induced distances.

mod kernel;
mod minors;
mod spectrum;

pub use kernel::{
    kernel_distance, linear_kernel, median_bandwidth, rbf_kernel, FeatureKernel, Kernel,
    KernelKind, KernelMatrix, PointSet,
};
pub(crate) use minors::check_subset;
pub(crate) use kernel::sq_dist;
pub use minors::{
    det_psd, elementary_symmetric, elementary_symmetric_all, log_det_psd,
    log_elementary_symmetric, matrix_elementary_symmetric, principal_minor_det, schur_condition,
};
pub use spectrum::Spectrum;

/// Relative tolerance for determinant / polynomial identities.
pub const IDENTITY_RTOL: f64 = 1e-8;
/// Pivots below this fraction of the largest diagonal are treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-12;
/// Symmetry tolerance, relative to max(1, |L_ij|).
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue, relative to the largest.
pub const PSD_TOL: f64 = 1e-8;
/// Radicands of kernel distances down to this value are clamped to zero.
pub const RADICAND_TOL: f64 = 1e-10;
