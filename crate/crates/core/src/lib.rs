//! Weak Galerkin finite element laboratory for the Poisson problem with
//! Dirichlet data on the unit square.
//!
//! A weak Galerkin element is the triple `(P_l(T), P_s(e), G_m(T))` plus a
//! stabilizer exponent `j`: interior polynomials of degree `l`, single-valued
//! edge polynomials of degree `s`, and a local vector space (`[P_m]^2` or
//! `RT_m`) in which the discrete weak gradient is computed. The crate builds
//! the uniform meshes, the local operators, the global system and a
//! convergence-study harness that measures supercloseness rates.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod polyspace;
pub mod study;
pub mod weakop;

pub use assembly::{assemble, build_dof_map, residual_check, solve, DofMap, ElementConfig, LinearSystem, SolveReport, SolverOptions, WeakCoeffVector};
pub use error::{Result, WgError};
pub use mesh::{build_mesh, Mesh, MeshKind};
pub use polyspace::{GradFamily, GradientSpaceDesc};
pub use study::{emit_table, run_study, Classification, ConvergenceReport, ConvergenceRow, ManufacturedSolution, TableFormat};
pub use weakop::StabilizerExponent;
