//! Numerical workbench for the weighted Neumann eigenvalue problem
//! `−div(σ∇u) = μ ρ u`.
//!
//! The crate discretizes domains with piecewise-linear elements, computes
//! the lowest eigenpairs of the resulting pencils, builds the density
//! families used to probe how the spectrum depends on ρ and σ, and checks
//! isoperimetric and conformal bounds on the computed values.

// Negated float comparisons are deliberate: `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod cheeger;
pub mod config;
pub mod densities;
pub mod discretize;
pub mod eigen;
pub mod error;
pub mod extremal;
pub mod hersch;
pub mod linalg;
pub mod modal;
pub mod schur;
pub mod table;

pub use discretize::{
    assemble, build_domain, AssembledForms, BoundaryCondition, DensityField, Domain, DomainDescriptor, DomainKind,
};
pub use eigen::{rayleigh_quotient, solve_lowest, SolveOptions, Spectrum};
pub use error::{Error, Result};
pub use certify::{run_certificate, Certificate, CertificateReport, SweepRow, Verdict};
pub use config::{Command, RunConfig, SPEC_VERSION};

#[cfg(test)]
mod properties;
