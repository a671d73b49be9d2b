use alloc::string::String;
use thiserror::Error;

/// Errors raised by core operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoranError {
    #[error("invalid stage {index}: {reason}")]
    InvalidStage { index: usize, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tolerance {tol:e} unreachable within depth cap {depth_cap}")]
    TolUnreachable { tol: f64, depth_cap: usize },
    #[error("stage index {0} out of range")]
    OutOfRange(usize),
    #[error("atom count {count} exceeds cap {cap}")]
    AtomExplosion { count: usize, cap: usize },
    #[error("k = {k} needs more than {digits} mixed-radix digits")]
    RadixOverflow { k: String, digits: usize },
    #[error("residues of B are not distinct mod {modulus}")]
    DuplicateResidue { modulus: u64 },
    #[error("#B = {digits} but #L = {spectrum}")]
    SizeMismatch { digits: usize, spectrum: usize },
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("no shift within window for x = {x} at level {level}")]
    NoShiftFound { x: String, level: usize },
    #[error("measure has non-rational atoms")]
    NonRationalAtoms,
    #[error("weights do not sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("empty set")]
    EmptySet,
    #[error("stage {0} has no spectrum L attached")]
    MissingL(usize),
    #[error("integer overflow building stage {0}")]
    StageOverflow(usize),
}

pub type Result<T> = core::result::Result<T, MoranError>;
