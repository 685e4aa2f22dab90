use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Smallest singular value at or below the relative rank tolerance.
    #[error("matrix is rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("exhaustive enumeration of {k}! permutations is not supported (k > {max})")]
    TooLarge { k: usize, max: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid permutation")]
    InvalidPermutation,
}

pub type Result<T> = core::result::Result<T, Error>;
