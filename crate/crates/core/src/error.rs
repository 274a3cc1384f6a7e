use thiserror::Error;

/// Unified error type for the verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported intrinsic dimension n = {0}; only n = 1 and n = 2 are built in")]
    UnsupportedDimension(usize),

    #[error("grid too small: {got} nodes per axis, need at least {min}")]
    GridTooSmall { got: usize, min: usize },

    #[error("geometry is disconnected ({components} components); split the input and run per component")]
    Disconnected { components: usize },

    #[error("mesh is not closed: edge ({0}, {1}) is shared by {2} faces")]
    NotClosed(usize, usize, usize),

    #[error("degenerate face {face}: area {area:.3e}")]
    DegenerateFace { face: usize, area: f64 },

    #[error("non-immersion point at sample {sample}: metric determinant {det:.3e}")]
    NonImmersion { sample: usize, det: f64 },

    #[error("rank-deficient local fit at vertex {vertex} (neighborhood too small or degenerate)")]
    RankDeficientFit { vertex: usize },

    #[error("mean curvature is not unit: max ||H| - 1| = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotUnitMeanCurvature { deviation: f64, tol: f64 },

    #[error("density must be strictly positive; minimum value {0:.3e}")]
    NonPositiveDensity(f64),

    #[error("field length {field_len} does not match geometry sample count {samples}")]
    FieldLengthMismatch { field_len: usize, samples: usize },

    #[error("field is bound to a different geometry (field id {field_id}, geometry id {geometry_id})")]
    GeometryMismatch { field_id: u64, geometry_id: u64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("incompatible right-hand side: integral {integral:.3e} exceeds tolerance {tol:.3e}")]
    IncompatibleRhs { integral: f64, tol: f64 },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("invalid theta {0}; need 0 < theta <= 1")]
    InvalidTheta(f64),

    #[error("geometry is not a submanifold of the unit sphere: max ||x| - 1| = {0:.3e}")]
    NotInUnitSphere(f64),

    #[error("geometry is not the round unit sphere S^n required by this baseline")]
    NotRoundSphere,

    #[error("chart grid has a non-orthogonal parameterization (|g_12| = {0:.3e}); assembly requires a diagonal metric")]
    NonOrthogonalChart(f64),

    #[error("operation needs a chart backend with second derivatives; mesh backend has none")]
    HessianUnavailable,

    #[error("transport sweep needs a fully periodic chart or a constant density (got a non-periodic chart with varying potential)")]
    InterpolantUnavailable,

    #[error("finite-difference step underflow (h = {0:.3e})")]
    FdStepUnderflow(f64),

    #[error("sample is not a transport-domain member; jacobian bound does not apply")]
    NotAMember,

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("expression error: {0}")]
    Expr(String),

    #[error("geometry file error: {0}")]
    GeometryFile(String),

    #[error("refinement study needs at least 2 levels, got {0}")]
    TooFewLevels(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("in pipeline stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Annotate an error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
