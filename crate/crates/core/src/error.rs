use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// An expression could not be evaluated at the requested point, or the
    /// point lies outside (or too close to the boundary of) the chart box.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative order {requested} not supported (maximum {max})")]
    Order { requested: usize, max: usize },

    /// A jet argument carries fewer derivative components than the operation needs.
    #[error("jet of order {have} given, order {need} required")]
    JetOrder { have: usize, need: usize },

    #[error("arrow is singular (|det f1| = {det:e})")]
    SingularArrow { det: f64 },

    #[error("frame w is singular at {point:?} (|det w| = {det:e})")]
    SingularFrame { point: Vec<f64>, det: f64 },

    #[error("metric is degenerate at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("arrow does not preserve the metric (residual {residual:e})")]
    NotMetricArrow { residual: f64 },

    #[error("jet violates the linearized metric condition (residual {residual:e})")]
    NotMetricJet { residual: f64 },

    /// A transported state left the chart box during integration.
    #[error("integration left the chart domain at {point:?}")]
    DomainEscape { point: Vec<f64> },

    #[error("reference curvature tensor vanishes (norm {norm:e})")]
    ZeroReference { norm: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("symmetry error: {0}")]
    Symmetry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl GeometryError {
    /// True for failures that come from the numerics rather than from bad
    /// input: domain escapes, singular frames and arrows, degenerate metrics.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GeometryError::Domain(_)
                | GeometryError::SingularArrow { .. }
                | GeometryError::SingularFrame { .. }
                | GeometryError::DegenerateMetric { .. }
                | GeometryError::DomainEscape { .. }
                | GeometryError::ZeroReference { .. }
        )
    }
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
