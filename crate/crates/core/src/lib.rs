//! Numerical laboratory for the polar-decomposition dynamics of bipartite
//! quantum states.
//!
//! The crate is organized around three pillars:
//!
//! - [`hilbert`]: finite-dimensional complex linear algebra for bipartite
//!   states — polar (Schmidt) decomposition with complex amplitudes, reduced
//!   traces, the moment map, and measurement-update primitives.
//! - [`connection`] / [`polar_flow`]: Schrödinger propagation, horizontal
//!   lifts with respect to the canonical and dynamical connections, and the
//!   coupled evolution of polar frames and amplitudes (both as an explicit
//!   ODE system and as SVD re-decomposition with phase transport).
//! - [`toroid`] / [`tracker`]: the right toroid of amplitude phases, its
//!   unique natural convex partition with arcs proportional to the squared
//!   radii, point location in the quotient, and the resulting label timeline
//!   ("which conditional state obtains now") with jump detection.
//!
//! The two-spin hyperfine model is solved in closed form in [`hyperfine`]
//! and serves as the analytic oracle for every dynamic module; the elliptic
//! integrals it needs live in [`elliptic`].

pub mod connection;
pub mod elliptic;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod hyperfine;
pub mod linalg;
pub mod ode;
pub mod polar_flow;
pub mod toroid;
pub mod tracker;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
