//! Symbolic tractor calculus for conformal geometry.
//!
//! The crate is organized bottom-up:
//!
//! * [`exprkit`]: hash-consed symbolic expression DAGs over a coordinate
//!   chart, with exact differentiation and deterministic numeric evaluation.
//! * [`geocalc`]: metric geometry built on exprkit; Christoffel symbols,
//!   Riemann/Ricci/Schouten/Weyl/Cotton, covariant derivatives of arbitrary
//!   tensor fields, conformal Killing and insertion residuals.
//! * [`tractor`]: the standard tractor bundle in a fixed scale; tractor
//!   metric, injectors, the coupled connection and its curvature computed two
//!   independent ways.
//! * [`adjoint`]: adjoint tractors built from a candidate vector field, the
//!   Sparling scalar, and the identity battery around them.
//! * [`holonomy`]: parallel transport of tractor frames around closed loops
//!   and conformal holonomy probes.
//!
//! Everything numeric is plain `f64` dense arrays; matrices never exceed
//! (n+2) x (n+2) for chart dimension n. The crate is `no_std` (with `alloc`)
//! so the symbolic core stays free of IO and platform dependencies; all float
//! transcendentals go through `libm` for identical results everywhere.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod exprkit;
pub mod geocalc;
pub mod tractor;
pub mod adjoint;
pub mod holonomy;
pub mod linalg;
pub mod rng;
pub mod tol;
