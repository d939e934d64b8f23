use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Contraction of a 0-form.
    #[error("cannot contract a scalar")]
    ContractScalar,

    /// Grades of the operands do not fit the operation.
    #[error("grade mismatch: {0}")]
    Grade(String),

    /// A form literal could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A black-box field cannot be differentiated exactly.
    #[error("field has no structured representation; enable finite differences to differentiate it")]
    NotDifferentiable,

    /// The metric or bilinear form is singular.
    #[error("degenerate metric")]
    DegenerateMetric,

    /// A form lies outside the required open orbit.
    #[error("form is not stable ({0})")]
    Unstable(String),

    /// Orbit membership failed at a quadrature node or grid point.
    #[error("orbit violation at point {point:?}: {detail}")]
    OrbitViolation {
        /// Coordinates of the offending point.
        point: [f64; 7],
        /// Reason reported by the classifier.
        detail: String,
    },

    /// Fixed-point recovery of a metric did not converge.
    #[error("metric recovery did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Last residual.
        residual: f64,
    },

    /// The linear map does not preserve the structure.
    #[error("not an automorphism of the structure (residual {0:e})")]
    NotAutomorphism(f64),

    /// The auxiliary bilinear form of a candidate involution is not positive definite.
    #[error("not a Cartan involution: {0}")]
    NotCartan(String),

    /// A type label is not valid for the grade.
    #[error("no component of type {label} in degree {grade}")]
    InvalidLabel {
        /// Form degree.
        grade: usize,
        /// Module dimension label.
        label: usize,
    },

    /// A quadrature method was asked for something it cannot do.
    #[error("quadrature: {0}")]
    Quadrature(String),

    /// Support of a variation is not contained in the domain.
    #[error("support check failed: {0}")]
    Support(String),

    /// Balls of a packing overlap or leave the domain.
    #[error("invalid packing: {0}")]
    Packing(String),

    /// Covered fraction of a packing is below the requirement.
    #[error("covered fraction {covered:.4} is below the required {required:.4} (deficit {deficit:.4})")]
    Coverage {
        /// Fraction of the domain covered by the balls.
        covered: f64,
        /// Required fraction 1 - nu.
        required: f64,
        /// Shortfall.
        deficit: f64,
    },

    /// Input form is not closed.
    #[error("input is not closed (residual {0:e})")]
    NotClosed(f64),

    /// No parameter in a search grid met the requirement.
    #[error("search failed: {0}")]
    SearchFailed(String),

    /// A time step left the open orbit.
    #[error("orbit exit at node {node} (try dt <= {suggested_dt:e})")]
    OrbitExit {
        /// Grid node index.
        node: usize,
        /// Suggested smaller step.
        suggested_dt: f64,
    },

    /// Invalid argument.
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
