use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inadmissible pressure {p} (p_min = {p_min})")]
    Admissibility { p: f64, p_min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("lifespan exceeded at t = {t}, x = ({x1}, {x2}): {reason}")]
    LifespanExceeded { t: f64, x1: f64, x2: f64, reason: String },

    #[error("wall condition violated: |v_d| = {defect} at the wall")]
    WallCondition { defect: f64 },

    #[error("decay lost: |U(X_max)| = {tail} exceeds {bound}")]
    DecayLost { tail: f64, bound: f64 },

    #[error("polarization violated: max |(Id - P0) U| = {max_violation}")]
    Polarization { max_violation: f64 },

    #[error("source not in range(Id - P0): P0 component {max}")]
    SourceNotNonpolarized { max: f64 },

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("positivity lost at cell ({i}, {j}): rho = {rho}, p = {p}")]
    Positivity { i: usize, j: usize, rho: f64, p: f64 },

    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
