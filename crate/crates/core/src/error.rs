use alloc::string::String;
use core::fmt;

/// Errors raised by the numeric routines.
///
/// Every variant that concerns a specific sample carries enough coordinates
/// to locate it, since most failures in this crate are "the exponent blew up
/// at one node" rather than global misconfiguration.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    InvalidParameter { name: &'static str, reason: String },
    /// Too few nodes along an axis for the requested stencil.
    AxisTooSmall { axis: &'static str, nodes: usize, required: usize },
    /// A non-finite value appeared at a spacetime node.
    NonFinite { what: &'static str, x: f64, t: f64 },
    /// A non-finite sample in a one-dimensional quadrature.
    NonFiniteSample { abscissa: f64 },
    /// Every node of a field is excluded or stencil-invalid.
    NoValidNodes,
    /// Two inputs disagree on the grid or lattice they live on.
    Mismatch(&'static str),
    /// The time grid reaches t <= 0 without an exclusion window covering it.
    NonPositiveTime { t: f64 },
    /// Scale factor at or below zero.
    NonPositiveScaleFactor { a: f64 },
    /// Initial data violate the Friedmann constraint.
    ConstraintViolated { residual: f64, tolerance: f64 },
    /// A lattice operator has a (near-)zero mode.
    SingularOperator { momentum: alloc::vec::Vec<usize>, eigenvalue: f64 },
    /// Dense solve hit a vanishing pivot.
    SingularMatrix { column: usize },
    /// Explicit time step exceeds the lattice spacing.
    CflViolation { dt: f64, spacing: f64 },
    /// A pointwise function that must stay away from zero (or negativity) did not.
    SiteCondition { what: &'static str, site: usize, value: f64 },
    /// Kernel propagation requested without a normalisation reference.
    UnnormalizedKernel,
    /// A two-point (x, x0) representation is required but absent.
    MissingTwoPoint,
    /// A fit had nothing to work with.
    DegenerateFit(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::AxisTooSmall { axis, nodes, required } => write!(
                f,
                "{axis} axis has {nodes} nodes, stencil needs at least {required}"
            ),
            Error::NonFinite { what, x, t } => {
                write!(f, "non-finite {what} at node x = {x}, t = {t}")
            }
            Error::NonFiniteSample { abscissa } => {
                write!(f, "non-finite integrand sample at x = {abscissa}")
            }
            Error::NoValidNodes => write!(f, "no stencil-valid nodes on the grid"),
            Error::Mismatch(what) => write!(f, "mismatched inputs: {what}"),
            Error::NonPositiveTime { t } => write!(
                f,
                "time grid reaches t = {t} <= 0 without an exclusion window"
            ),
            Error::NonPositiveScaleFactor { a } => {
                write!(f, "scale factor a = {a} is not positive")
            }
            Error::ConstraintViolated { residual, tolerance } => write!(
                f,
                "initial data violate the Friedmann constraint: residual {residual:e} > {tolerance:e}"
            ),
            Error::SingularOperator { momentum, eigenvalue } => write!(
                f,
                "lattice operator is singular: mode with momentum index {momentum:?} has eigenvalue {eigenvalue:e}"
            ),
            Error::SingularMatrix { column } => {
                write!(f, "dense solve: vanishing pivot in column {column}")
            }
            Error::CflViolation { dt, spacing } => {
                write!(f, "time step {dt} exceeds lattice spacing {spacing}")
            }
            Error::SiteCondition { what, site, value } => {
                write!(f, "{what} violated at site {site} (value {value})")
            }
            Error::UnnormalizedKernel => {
                write!(f, "kernel has no normalisation reference configured")
            }
            Error::MissingTwoPoint => write!(
                f,
                "operation needs S as a function of both x and x0 (closed-form family)"
            ),
            Error::DegenerateFit(what) => write!(f, "degenerate fit: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
