//! Constructive converse Lyapunov analysis for polynomial vector fields.
//!
//! The pipeline: approximate the flow map of `x' = f(x)` by Picard iteration
//! ([`picard`]), extend the approximation piecewise past the contraction
//! horizon, integrate its squared norm to obtain a sum-of-squares Lyapunov
//! candidate with an exact rational Gram certificate ([`lyapunov`]), and bound
//! the approximation error and the polynomial degree a priori ([`bounds`]).
//! [`dynamics`] supplies a Runge-Kutta reference solver plus estimators for
//! the stability constants, and [`verify`] cross-checks every constructed
//! object and every inequality against that reference on sampled points.

// `!(x > 0.0)` rejects NaN along with nonpositive values; the partial_cmp
// spelling clippy prefers would bury that. Error enums carry rational values
// for exact diagnostics and only travel on cold paths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod bounds;
pub mod dynamics;
pub mod lyapunov;
pub mod picard;
pub mod polyalg;
pub mod ratio;
pub mod sampling;
pub mod verify;

pub use bounds::{BoundCertificate, BoundsError, ConditionOutcome, QuadraticReport, SearchMode, SearchOutcome, StabilityData};
pub use dynamics::{DynamicsError, EstimateReport, Trajectory};
pub use lyapunov::{GramBlock, GramForm, LyapunovError, LyapunovResult, PsdOutcome};
pub use picard::{GkEvaluator, PicardError, PiecewiseApprox, PolyTrajectory};
pub use polyalg::{Monomial, PolyError, Polynomial, VectorField};
pub use verify::{ExtensionOutcome, LemmaRow, VerificationReport, VerifyError};
