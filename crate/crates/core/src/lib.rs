//! Hug: an explicit reflection integrator that keeps iterates close to the
//! level sets of a smooth map `f : R^n -> R^m`.
//!
//! The crate is organised bottom-up:
//!
//! * [`constraint`]: constraint maps with Jacobians and second-derivative forms.
//! * [`projector`]: normal/tangent projectors, pseudoinverse, reflection and
//!   projector derivatives at a point.
//! * [`hug`]: the three-substep Hug timestepping and its trajectory diagnostics.
//! * [`ode`]: the continuous system approximated by Hug, a fixed-step RK4
//!   reference solver and the consistency/convergence harness.
//! * [`ellipse`]: the reduced `(phi, p)` phase-plane model for planar quadrics.
//! * [`sampler`]: the Hug Markov kernel and chain runner.
//! * [`experiments`]: reproducible studies and their CSV emitters.

pub mod constraint;
pub mod ellipse;
pub mod error;
pub mod experiments;
pub mod hug;
pub mod linalg;
pub mod ode;
pub mod projector;
pub mod sampler;

pub use constraint::{ConstraintMap, CustomMap, Linear, Quadric, SineQuadric};
pub use error::{HugError, Result};
pub use hug::{HugParams, PhaseState, Trajectory};
pub use projector::ProjectorBundle;

/// Dense column vector used throughout.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout.
pub type Matrix = nalgebra::DMatrix<f64>;
