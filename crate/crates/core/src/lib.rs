//! Continuous utility games toolkit.
//!
//! Building blocks for analyzing continuous games whose social function is
//! (approximately) monotone DR-submodular: feasible-set geometry over
//! box-plus-budget polytopes, submodularity/curvature checkers, valid-utility
//! game validation with price-of-anarchy bound calculators, the paper-standard
//! budget-allocation and sensor-coverage instances, and the maximization
//! dynamics (simultaneous projected online gradient ascent, Frank-Wolfe,
//! random baselines, grid oracles).
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! concrete `f64` aliases are exported at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub mod dynamics;
pub mod functions;
pub mod games;
pub mod instances;
pub mod vectorspace;

/// Scalar type the toolkit operates on: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from a literal; panics only on NaN inputs.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Errors shared across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projection root-finder failed to converge after {0} bisection steps (malformed polytope?)")]
    NonConvergence(usize),
    #[error("negative gradient coordinate {index} passed to lmo; caller must clamp")]
    NegativeGradient { index: usize },
    #[error("curvature undefined: gradient at 0 vanishes on coordinate {index} while the function varies elsewhere")]
    UndefinedCoordinate { index: usize },
    #[error("PoA bound undefined: {0}")]
    UndefinedBound(String),
    #[error("payoff oracle has no own-block gradient; d_no_regret requires one")]
    UnsupportedGame,
    #[error("grid of {0} points exceeds the 1e7 enforcement limit")]
    GridTooLarge(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Concrete aliases for the common double-precision instantiation.
pub type Vector64 = vectorspace::Vector<f64>;
pub type BudgetPolytope64 = vectorspace::BudgetPolytope<f64>;
pub type JointProfile64 = vectorspace::JointProfile<f64>;
pub type SocialFunction64 = functions::SocialFunction<f64>;
pub type BoxRegion64 = functions::BoxRegion<f64>;
pub type ContinuousGame64 = games::ContinuousGame<f64>;
pub type EmpiricalDistribution64 = games::EmpiricalDistribution<f64>;
pub type Trace64 = dynamics::Trace<f64>;
