use thiserror::Error;

/// Errors produced anywhere in the fractal pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("prefractal level {level} exceeds the configured cap {cap}")]
    LevelTooHigh { level: u32, cap: u32 },

    #[error("snowflake does not close: endpoint gap {gap:e}")]
    Closure { gap: f64 },

    #[error("polyline has no segments")]
    EmptyPolyline,

    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(f64),

    #[error("epsilon {eps} exceeds the inradius {inradius}; erosion formula invalid")]
    InradiusExceeded { eps: f64, inradius: f64 },

    #[error("polygon is not convex")]
    NotConvex,

    #[error("argument {arg} (ratio {ratio}) lies outside the table range [{lo}, {hi}]")]
    OutOfTableRange { ratio: f64, arg: f64, lo: f64, hi: f64 },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("evaluation at s = {re}{im:+}i is within the pole guard (|1 - sum| = {magnitude:e})")]
    NearPole { re: f64, im: f64, magnitude: f64 },

    #[error("operator is not lattice")]
    NotLattice,

    #[error("winding number {value} is not close to an integer")]
    NonIntegerWinding { value: f64 },

    #[error("a root lies on or near the window boundary after {attempts} nudges")]
    BoundaryRoot { attempts: u32 },

    #[error("contour subdivision exceeded depth {0}")]
    SubdivisionDepth(u32),

    #[error("Mellin integral diverges at s = {re}{im:+}i: {reason}")]
    Divergent { re: f64, im: f64, reason: String },

    #[error("pole at {re}{im:+}i is not simple (|derivative| = {derivative:e})")]
    NotSimple { re: f64, im: f64, derivative: f64 },

    #[error("Re(s) = {re} is not right of D + margin = {bound}; use the continued path")]
    DirectPathInvalid { re: f64, bound: f64 },

    #[error("rejection sampling failed after {0} attempts")]
    RejectionSampling(u64),

    #[error("residue terms are not closed under conjugation")]
    NotConjugateClosed,

    #[error("curve is not certified self-avoiding: r = {r} >= threshold {threshold}")]
    NotSelfAvoiding { r: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
