//! Finite-difference laboratory for the damped, time-delayed Kawahara equation
//!
//! ```text
//! u_t + u_x + u_xxx - u_xxxxx + u u_x + a(x) u + b(x) u(t - h) = 0,   x in (0, L),
//! u(0) = u(L) = u_x(0) = u_x(L) = u_xx(L) = 0,
//! ```
//!
//! together with its feedback variants, the energies and Lyapunov functionals
//! attached to them, closed-form stability constants, and a dense spectral
//! view of the delay-augmented generator.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod delay;
pub mod discretization;
pub mod error;
pub mod functionals;
pub mod model;
pub mod scalar;
pub mod scenario;
pub mod spectral;
pub mod stepper;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = discretization::SpatialGrid<f64>;
pub type Params = model::SimParams<f64>;
pub type Profile = model::CoefficientProfile<f64>;
pub type History = delay::DelayHistory<f64>;
pub type Operator = discretization::BandedOperator<f64>;
pub type Trace = functionals::EnergyTrace<f64>;
pub type Run = stepper::Trajectory<f64>;

pub type GridF32 = discretization::SpatialGrid<f32>;
pub type ParamsF32 = model::SimParams<f32>;
