//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the ambient-geometry layer.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid chart point: height must be positive, got z = {z}")]
    InvalidChartPoint { z: f64 },
    #[error("vector is not unit: |v| = {norm}")]
    NonUnitVector { norm: f64 },
    #[error("geodesic integrator failed: {reason}")]
    IntegratorFailure { reason: String },
    #[error("curvature certification failed: sectional curvature {found} > -{bound} + tol at sample {sample}")]
    CurvatureCertification { found: f64, bound: f64, sample: usize },
    #[error("Busemann ray truncation did not converge (last delta {delta})")]
    BusemannTruncation { delta: f64 },
    #[error("model surface radius must be positive, got {r}")]
    NonPositiveRadius { r: f64 },
}

/// Errors raised while building or validating meshes.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh is not a disk: Euler characteristic {chi}, expected 1")]
    NotADisk { chi: i64 },
    #[error("mesh has empty boundary; closed surfaces carry no admissible problem")]
    EmptyBoundary,
    #[error("boundary is not a single simple cycle")]
    BadBoundary,
    #[error("inconsistent triangle orientation at edge ({a}, {b})")]
    BadOrientation { a: usize, b: usize },
    #[error("OBJ parse error at line {line}: {reason}")]
    ObjParse { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by per-vertex differential fitting.
#[derive(Debug, Error)]
pub enum FitError {
    #[error("underdetermined fit at vertex {vertex}: only {neighbors} neighbors in two rings")]
    Underdetermined { vertex: usize, neighbors: usize },
    #[error("degenerate tangent fit at vertex {vertex}")]
    DegenerateTangent { vertex: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Errors raised by the linearized-operator layer.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("extrinsic curvature outside (0, c) at {count} vertices (first: vertex {first}, kappa = {kappa})")]
    CurvatureOutOfRange { count: usize, first: usize, kappa: f64 },
    #[error("shape operator is singular at vertex {vertex} (min eigenvalue {min_eig})")]
    SingularShape { vertex: usize, min_eig: f64 },
    #[error("zeroth-order certificate failed: min J = {min_j} at vertex {vertex}")]
    SignCertificate { min_j: f64, vertex: usize },
    #[error("assembled stencil violates the discrete maximum principle at {count} rows (worst ratio {worst})")]
    MaxPrincipleViolation { count: usize, worst: f64 },
    #[error("linear solver breakdown: {reason}")]
    SolverBreakdown { reason: String },
    #[error("forms missing: call fit_fundamental_forms first")]
    FormsMissing,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Errors raised by the nonlinear solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("precondition violated: {0}")]
    Precondition(#[from] PreconditionError),
    #[error("ellipticity lost: curvature left ({lo}, {hi}) at vertex {vertex} (kappa = {kappa})")]
    EllipticityLost { vertex: usize, kappa: f64, lo: f64, hi: f64 },
    #[error("line search stalled at residual {residual} (iteration {iteration})")]
    LineSearchStall { residual: f64, iteration: usize },
    #[error("Newton did not converge: residual {residual} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("homotopy stage {stage} (t = {t}) failed: {source}")]
    StageFailure { stage: usize, t: f64, #[source] source: Box<SolveError> },
    #[error("domination violated at {witnesses} vertices (worst gap {worst})")]
    DominationViolation { witnesses: usize, worst: f64 },
    #[error("exhaustion heights decreased by {gap} at vertex {vertex} between stages")]
    MonotonicityViolation { vertex: usize, gap: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Typed preconditions whose violation refuses a problem before any solve.
///
/// Each case names the mathematical obstruction so reports can cite it.
#[derive(Debug, Error, Clone, serde::Serialize)]
pub enum PreconditionError {
    #[error("target curvature k = {k} outside the admissible window (0, c = {c}); deformation theory requires 0 < k < c")]
    CurvatureWindow { k: f64, c: f64 },
    #[error("base surface has empty boundary; a closed k-surface cannot exist since the induced metric would have negative curvature on a sphere")]
    ClosedSurface,
    #[error("base curvature below required bound at vertex {vertex}: kappa = {kappa}, need > {required}")]
    BaseCurvature { vertex: usize, kappa: f64, required: f64 },
    #[error("base surface is not locally convex at vertex {vertex}")]
    NotConvex { vertex: usize },
    #[error("asymptotic data covering the whole ideal sphere admits no solution (case: {case}); the same holds minus one point (horospherical limit) or two points (tube limit)")]
    GlobalIdealData { case: GlobalDataKind },
    #[error("ideal data invalid: {reason}")]
    BadIdealData { reason: String },
    #[error("configuration invalid: {reason}")]
    BadConfig { reason: String },
}

/// The three refused global asymptotic data classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalDataKind {
    FullSphere,
    SphereMinus1,
    SphereMinus2,
}

impl std::fmt::Display for GlobalDataKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GlobalDataKind::FullSphere => "full_sphere",
            GlobalDataKind::SphereMinus1 => "sphere_minus_1",
            GlobalDataKind::SphereMinus2 => "sphere_minus_2",
        };
        f.write_str(s)
    }
}
