use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-homothetic dilation of a ball is not representable")]
    NonHomotheticBall,
    #[error("direction parallel to boundary segment")]
    DirectionParallel,
    #[error("chord length {requested} exceeds maximal chord {max}")]
    ChordTooLong { requested: f64, max: f64 },
    #[error("enumeration budget exceeded in {what}: {needed} > {cap}")]
    Budget { what: &'static str, needed: u128, cap: u64 },
    #[error("numeric certification failed: {0}")]
    Certification(String),
    #[error("small integer relation detected among 1, alpha: {0:?}")]
    Relation(Vec<i64>),
    #[error("singular matrix")]
    Singular,
    #[error("point is not in the interior of the body")]
    NotInterior,
    #[error("return time exceeds cap {0}")]
    CapExceeded(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Candidate-count cap for every enumeration routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(50_000_000)
    }
}

impl Budget {
    pub fn check(self, what: &'static str, needed: u128) -> Result<()> {
        if needed > u128::from(self.0) {
            Err(Error::Budget {
                what,
                needed,
                cap: self.0,
            })
        } else {
            Ok(())
        }
    }
}
