//! Exact ReLU network realizations of iterated refinement operators on piecewise-linear curves.
//!
//! The library is generic over the scalar type ([`Scalar`]); `f64` drives the command line and
//! [`Rational`] gives exact evaluation.

pub mod compiler;
pub mod cpwl;
pub mod error;
pub mod gallery;
pub mod instance;
pub mod io;
pub mod loop_controller;
pub mod lowering;
pub mod matrix;
pub mod network;
pub mod reductions;
pub mod refinement;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;

pub type Curve = cpwl::CpwlCurve<f64>;
pub type Operator = refinement::RefinementOp<f64>;
pub type Network = network::ReluNetwork<f64>;
pub type Controller = loop_controller::LoopController<f64>;
pub type Config = loop_controller::LoopConfig<f64>;
pub type Compiled = compiler::CompiledIterate<f64>;
pub type ExactCurve = cpwl::CpwlCurve<Rational>;
pub type ExactOperator = refinement::RefinementOp<Rational>;
pub type ExactNetwork = network::ReluNetwork<Rational>;
pub type ExactController = loop_controller::LoopController<Rational>;
pub type ExactConfig = loop_controller::LoopConfig<Rational>;
