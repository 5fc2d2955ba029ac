//! Simulation toolkit for turning a torque-controlled collaborative arm into
//! a transparent haptic display, without hardware in the loop.
//!
//! The pieces, bottom to top:
//!
//! - [`rigid_body`] — serial-chain kinematics and the link-side dynamics
//!   terms `M(q)`, `C(q,q̇)q̇`, `g(q)` (composite-rigid-body mass matrix,
//!   recursive Newton-Euler inverse dynamics).
//! - [`fjr`] — fixed-step forward simulation of a flexible-joint robot with
//!   motor-side friction, plus exact energy accounting.
//! - [`control`] — the haptic control stack: joint-torque-feedback inertia
//!   reshaping, model-free energy-based friction estimation/compensation,
//!   gravity compensation, and Cartesian wrench rendering.
//! - [`setup_opt`] — scoring and derivative-free optimization of the arm's
//!   base placement and grab angle against workspace coverage, dexterity,
//!   renderable wrench, and human-collision safety.
//! - [`teleop`] — bilateral master/slave sessions against a remote arm or a
//!   virtual wall, including bimanual mirrored channels.
//! - [`scenario`] — the scenario-driven harness behind the `haptic-arm-lab`
//!   CLI; every experiment is a JSON file in, CSV/JSON out, bit-reproducible
//!   from its emitted metadata.

// Validation guards use `!(x > 0.0)` on purpose: the negated form is true
// for NaN, which must be rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod fjr;
pub mod rigid_body;
pub mod scenario;
pub mod setup_opt;
pub mod teleop;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
