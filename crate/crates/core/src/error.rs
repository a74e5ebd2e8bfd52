use thiserror::Error;

pub type Result<T> = std::result::Result<T, PipeError>;

#[derive(Debug, Error)]
pub enum PipeError {
    #[error("invalid input: {0}")]
    InvalidSpec(String),

    #[error("centerline is not arc-length parameterized: |c'(s)| = {speed} at s = {s}")]
    NonUnitSpeed { s: f64, speed: f64 },

    #[error("tabulated input needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("frame transport drift {drift:.3e} exceeds {tolerance:.1e}; refine the s-grid")]
    FrameDrift { drift: f64, tolerance: f64 },

    #[error("radius is not positive (R = {radius}) at s = {s}, theta = {theta}")]
    NonPositiveRadius { s: f64, theta: f64, radius: f64 },

    #[error("scale factor beta = {beta:.4} <= 0 at station {station} (s = {s:.4}, theta = {theta:.4}): the pipe curves into itself")]
    NonPositiveBeta {
        station: usize,
        s: f64,
        theta: f64,
        beta: f64,
    },

    #[error("mesh too coarse: {what} = {got}, need at least {needed}")]
    MeshTooCoarse {
        what: &'static str,
        got: usize,
        needed: usize,
    },

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("rigidity G = {value} is not positive at s = {s}")]
    NonPositiveRigidity { s: f64, value: f64 },

    #[error("compatibility condition violated: |int g| = {residual:.3e} > {threshold:.3e}")]
    Compatibility { residual: f64, threshold: f64 },

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("incompatible inputs: {0}")]
    Mismatch(String),

    #[error("{module} failed at station {station} (s = {s:.4}): {source}")]
    AtStation {
        module: &'static str,
        station: usize,
        s: f64,
        #[source]
        source: Box<PipeError>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipeError {
    pub fn at_station(self, module: &'static str, station: usize, s: f64) -> Self {
        PipeError::AtStation {
            module,
            station,
            s,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the user's input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            PipeError::Config(_)
            | PipeError::InvalidSpec(_)
            | PipeError::TooFewPoints { .. }
            | PipeError::TooFew { .. }
            | PipeError::MeshTooCoarse { .. }
            | PipeError::NonPositiveRadius { .. }
            | PipeError::NonPositiveBeta { .. }
            | PipeError::NonUnitSpeed { .. }
            | PipeError::Io(_) => true,
            PipeError::AtStation { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
