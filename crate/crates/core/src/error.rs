use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scatter matrix had an eigenvalue at or below the numerical floor.
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// Every pair of observations coincided, so the pairwise scatter is empty.
    DegeneratePairs,
    InvalidIndices(&'static str),
    InvalidConfig(&'static str),
    /// The least-squares design matrix is rank deficient.
    SingularDesign,
    InvalidSpec(&'static str),
    TooFewObservations {
        n: usize,
        p: usize,
    },
    NonFinite {
        row: usize,
        col: usize,
    },
    StageMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPositiveDefinite {
                min_eigenvalue,
                max_eigenvalue,
            } => write!(
                f,
                "matrix is not positive definite (eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}])"
            ),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in {what}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::DegeneratePairs => f.write_str("all pairwise differences vanish"),
            Error::InvalidIndices(msg) => write!(f, "invalid indices: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::SingularDesign => f.write_str("least-squares design matrix is singular"),
            Error::InvalidSpec(msg) => write!(f, "invalid generator spec: {msg}"),
            Error::TooFewObservations { n, p } => {
                write!(f, "too few observations: n = {n}, p = {p}")
            }
            Error::NonFinite { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            Error::StageMismatch { expected, found } => {
                write!(f, "data set is at stage {found}, expected {expected}")
            }
        }
    }
}

impl core::error::Error for Error {}
