//! Verification toolkit for constant-coefficient homogeneous differential operators.
//!
//! The crate decides ellipticity and ℂ-ellipticity exactly, builds nullspace
//! projections from averaged Taylor polynomials, decomposes functions along chain
//! covers of John domains, and measures the constants in trace, Poincaré,
//! Fefferman–Stein and Korn-type inequalities on lattice domains.

pub mod besov_trace;
pub mod decomposition;
pub mod domains;
pub mod fd;
pub mod ellipticity;
pub mod numerics;
pub mod korn_bench;
pub mod maximal_weights;
pub mod poly_core;
pub mod projection;
pub mod rng;
