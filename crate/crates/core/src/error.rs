use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input outside the domain: {0}")]
    InputDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical underflow in cocycle growth at iterate {iterate}")]
    Underflow { iterate: usize },

    #[error("degenerate splitting: cu/cs planes meet at angle {angle:e}")]
    DegenerateSplitting { angle: f64 },

    #[error("periodic point search did not converge in {steps} Newton steps (last residual {residual:e})")]
    SearchFailure { steps: usize, residual: f64 },

    #[error("non-hyperbolic periodic point: |det(DF^k - I)| = {det:e}")]
    NonHyperbolic { det: f64 },

    #[error("leaf tracing failed: {0}")]
    Tracing(String),

    #[error("holonomy failed: {0}")]
    Holonomy(String),

    #[error("foliation coherence lost: landed point {distance:e} from target leaf (limit {limit:e})")]
    Coherence { distance: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
