use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no safe prime of {bits} bits found within {attempts} candidates")]
    GenerationTimeout { bits: u64, attempts: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),

    #[error("plaintext is not a member of the order-q subgroup")]
    PlaintextNotInGroup,

    #[error("value {x} quantizes to zero with step {delta}; zero has no multiplicative encoding")]
    ZeroEncoding { x: f64, delta: f64 },

    #[error("value {x} exceeds the codec bound {bound}")]
    OutOfBounds { x: f64, bound: f64 },

    #[error("invalid codec configuration: {0}")]
    InvalidCodec(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix is not Schur stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("matrix dimension {n} exceeds the dense Lyapunov solver limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("regressor matrix is rank deficient (rank {rank} of {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("security check inconclusive: gamma({n_max}) = {gamma} does not drop below gamma_c = {gamma_c}")]
    Inconclusive { n_max: u64, gamma: f64, gamma_c: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("control loop failed at step {step}: {source}")]
    LoopStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::LoopStep {
            step,
            source: Box::new(self),
        }
    }
}
