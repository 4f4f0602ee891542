//! Dense linear algebra for small `p × p` problems.

mod eigen;
mod expm;
mod matrix;
mod qr;
mod svd;

pub use eigen::{spectral_decompose, sym_inverse_sqrt, SpectralDecomp};
pub use expm::{block_generator, structured_exp};
pub use matrix::{
    anti_sym_split, dot, frobenius_inner, orthogonality_defect, Matrix, OrthogonalMatrix, SymMatrix,
};
pub use qr::{least_squares, orthogonal_from_gaussian, orthonormal_columns};
pub use svd::{thin_svd, SvdFactors};
