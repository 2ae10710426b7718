use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Error, Debug)]
pub enum MxError {
    #[error("axis {0} out of range (expected 0..3)")]
    AxisOutOfRange(usize),

    #[error("field too small for stencil: axis {axis} has {n} cells, need {need}")]
    FieldTooSmall { axis: usize, n: usize, need: usize },

    #[error("derivative margin exhausted: {0}")]
    MarginExhausted(String),

    #[error("sphere of radius {radius} exits the grid's valid interpolation region")]
    SphereExitsGrid { radius: f64 },

    #[error("quadrature order {0} below minimum 4")]
    QuadratureOrderTooLow(usize),

    #[error("point ({x}, {y}, {z}; t={t}) outside the masked cone region")]
    OutOfCone { x: f64, y: f64, z: f64, t: f64 },

    #[error("slicing broken: gamma^00 = {value} >= 0 at grid point {index}")]
    SlicingBroken { value: f64, index: usize },

    #[error("slab is not spacelike-sliced: alpha^2 - |beta|^2 = {0} <= 0")]
    NotSpacelikeSliced(f64),

    #[error("graph exits slab: |u| = {umax} exceeds height bound {bound}")]
    GraphExitsSlab { umax: f64, bound: f64 },

    #[error("graph not spacelike: |U|_g = {umax} exceeds 1/2")]
    GraphNotSpacelike { umax: f64 },

    #[error("gauge denominator 1 + <beta, Du> = {0} below 1/2")]
    GraphDenominator(f64),

    #[error("CFL violation: dt = {dt} exceeds bound {bound} (c_cfl * h)")]
    CflViolation { dt: f64, bound: f64 },

    #[error("hyperbolicity lost at level {level}: a = {a}, b = {b}")]
    HyperbolicityLost { level: i64, a: f64, b: f64 },

    #[error("mask empty after erosion at level {0}")]
    MaskEmpty(i64),

    #[error("level {0} at slab boundary: no centered time derivative")]
    LevelAtBoundary(i64),

    #[error("slice parameter tau = {tau} outside (-theta, theta) = (-{theta}, {theta})")]
    TauOutsideSlab { tau: f64, theta: f64 },

    #[error("derivative order {s} unsupported by grid margin {margin}")]
    WeightOrderTooLarge { s: usize, margin: usize },

    #[error("linear solve did not converge: residual {residual} after {iters} iterations")]
    SolveNonConvergence { residual: f64, iters: usize },

    #[error("near-singular operator: projected residual stagnated at {0}")]
    NearSingularOperator(f64),

    #[error("trust-region exit: |u| = {norm} exceeds radius {radius}")]
    TrustRegionExit { norm: f64, radius: f64 },

    #[error("contraction ceiling exceeded: ratio {ratio} > {ceiling} at iteration {iter}")]
    ContractionCeiling { ratio: f64, ceiling: f64, iter: usize },

    #[error("smallness gate failed: |tr_g k| = {value} exceeds gate {gate}")]
    SmallnessGate { value: f64, gate: f64 },

    #[error("[{stage}] gate failed: {detail}")]
    GateFailure { stage: String, detail: String },

    #[error("dataset parameter error: {0}")]
    DatasetParam(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error("unsupported report version {0}")]
    ReportVersion(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MxError>;
