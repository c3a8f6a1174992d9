//! Iterative regularization toolkit.
//!
//! This crate implements first-order iterative algorithms (gradient descent,
//! projected gradient descent, exponentiated gradient descent, generic mirror
//! descent, ISTA, NoLips) with full trace recording, per-iterate
//! basic-inequality verification, and training-envelope evaluation. It pairs
//! each algorithm with its explicit-regularization counterpart on generalized
//! linear models (ridge, KL-on-the-simplex, lasso) and provides the
//! statistical machinery that relates the two: spectral noise terms,
//! regularization-coefficient selection rules, stopping times,
//! high-probability risk bounds, and Monte Carlo coverage experiments.
//!
//! All core numerics are generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); every type defaults to `f64`, and the experiment layers
//! ([`datagen`], [`risk`] Monte Carlo, CSV I/O) work in `f64` throughout.

pub mod aggregate;
pub mod bounds;
pub mod datagen;
pub mod error;
pub mod explicit;
pub mod geometry;
pub mod glm;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod risk;

use ndarray::{Array1, Array2};
use num_traits::FromPrimitive;
use std::iter::Sum;

/// Scalar type for all core numerics: `f32` or `f64`.
pub trait Scalar: ndarray::NdFloat + FromPrimitive + Sum {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense vector at the default precision.
pub type Vector = Array1<f64>;
/// Dense matrix at the default precision.
pub type Matrix = Array2<f64>;

pub use error::{Error, Result};
pub use geometry::{BregmanGeometry, BurgPositiveOrthant, Euclidean, GeometryKind, NegativeEntropySimplex};
pub use glm::{Design, GlmFamily, GlmProblem, SpectralTerms};
pub use optim::{IterateTrace, Objective, StepSchedule};

pub(crate) fn c<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("constant representable in scalar type")
}
