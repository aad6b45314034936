use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numerical,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Numerical => 3,
            Category::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Numerical => "numerical",
            Category::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("convex hull construction is degenerate: {0}")]
    HullDegenerate(String),

    #[error("time step rejected by CFL condition: dt = {dt:e}, admissible dt = {admissible_dt:e}")]
    StepRejected { dt: f64, admissible_dt: f64 },

    #[error("shock forms at t* = {t_star}; requested t = {t} needs the hodograph module")]
    ShockFormed { t_star: f64, t: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("data not invertible on [{x_lo}, {x_hi}]: plateau wider than one cell")]
    NonInvertible { x_lo: f64, x_hi: f64 },

    #[error("shock degenerate at t = {t}: vanishing ODE denominator")]
    ShockDegenerate { t: f64 },

    #[error("shock vanished at t = {t}: u1 = u2 = {u}")]
    ShockVanished { t: f64, u: f64 },

    #[error("assembly left [{x_lo}, {x_hi}] uncovered")]
    Assembly { x_lo: f64, x_hi: f64 },

    #[error("solution multi-valued at x = {x} (t = {t}) without a shock cut")]
    MultiValued { x: f64, t: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("unstable mode {index}: |lambda| = {modulus} overflows at step {step}")]
    UnstableMode { index: usize, modulus: f64, step: usize },

    #[error("observable assembly failed: {0}")]
    ObservableAssembly(String),

    #[error("reconstruction failed in slot {slot} at t = {t}: {reason}")]
    Reconstruction { slot: usize, t: f64, reason: String },

    #[error("POD Newton iteration diverged at step {step} (residual {residual:e})")]
    PodDiverged { step: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::ParameterDomain(_) | Error::Config(_) | Error::UnknownScenario(_) => Category::Config,
            Error::Io(_) | Error::Csv(_) => Category::Io,
            Error::Json(e) if e.is_io() => Category::Io,
            Error::Json(_) => Category::Config,
            Error::Scenario { source, .. } => source.category(),
            _ => Category::Numerical,
        }
    }

    pub fn in_scenario(self, scenario: &str) -> Error {
        match self {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario { scenario: scenario.to_string(), source: Box::new(e) },
        }
    }
}
