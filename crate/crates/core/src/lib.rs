//! Accurate initial and transfer conditions for linear higher-index DAEs
//! `A (D x)' + B x = q`, and a windowed least-squares collocation solver
//! for their initial value problems.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`). The aliases below fix it to `f64`, which is what the
//! documented tolerances refer to.

pub mod collocation;
pub mod error;
pub mod matfun;
pub mod problems;
pub mod reduction;
pub mod scalar;
pub mod specdiff;
pub mod stepper;
pub mod subspace;

pub use error::{DaeError, Result};
pub use scalar::Real;

pub type MatrixFunction = matfun::MatrixFunction<f64>;
pub type DaePair = matfun::DaePair<f64>;
pub type SampledMatrixStack = matfun::SampledMatrixStack<f64>;
pub type DiffOperator = specdiff::DiffOperator<f64>;
pub type SubspaceBasis = subspace::SubspaceBasis<f64>;
pub type SmoothBasisTrack = subspace::SmoothBasisTrack<f64>;
pub type RankPolicy = subspace::RankPolicy<f64>;
pub type ReductionConfig = reduction::ReductionConfig<f64>;
pub type ReductionOutcome = reduction::ReductionOutcome<f64>;
pub type WindowGrid = collocation::WindowGrid<f64>;
pub type PiecewisePolySolution = collocation::PiecewisePolySolution<f64>;
pub type IvpConfig = stepper::IvpConfig<f64>;
pub type IvpSolution = stepper::IvpSolution<f64>;
pub type ProblemBundle = problems::ProblemBundle<f64>;
