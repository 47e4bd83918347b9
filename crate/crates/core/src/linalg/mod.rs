//! Dense linear-algebra kernel for small real and complex square matrices:
//! eigendecomposition, singular values, norms, matrix exponential. All
//! operations are pure and safe to call concurrently.

pub mod eig;
pub mod expm;
pub mod matrix;
pub mod svd;
pub mod sym3;

pub use eig::{eig, eig_real, eigenvalue_order, eigenvalues, eigenvalues_real, EigenDecomposition};
pub use expm::{expm, expm_apply};
pub use matrix::{ComplexMatrix, RealMatrix};
pub use svd::{norm2, norm2_real, singular_values, smin, svd_with_right, Svd};
pub use sym3::{iso_plus_rank_one, mat3_max_abs, mat3_scale, sym3_eigvals, Mat3};
