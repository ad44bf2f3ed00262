use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular geometry at x = {x:?}, t = {t}: level-set gradient vanishes")]
    SingularGeometry { x: [f64; 3], t: f64 },

    #[error("no cut elements: the surface does not meet the mesh")]
    EmptyCutSet,

    #[error("point {0:?} lies outside the mesh")]
    Outside([f64; 3]),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("slab {slab}: {source}")]
    Slab {
        slab: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_slab(self, slab: usize) -> Error {
        match self {
            e @ Error::Slab { .. } => e,
            e => Error::Slab { slab, source: Box::new(e) },
        }
    }
}
