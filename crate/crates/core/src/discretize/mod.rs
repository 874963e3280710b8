//! Discrete domains and the weighted stiffness and mass forms of the
//! Rayleigh quotient `∫|∇u|²σ / ∫u²ρ` with piecewise-linear elements.

mod assemble;
mod domain;
mod grid;
mod quadrature;
mod warp;

pub use assemble::{
    assemble, assemble_mass, assemble_mass_masked, assemble_raw, assemble_stiffness, constrained_nodes, mass_sensitivity,
    stiffness_sensitivity, AssembledForms, BoundaryCondition, DensityField,
};
pub use domain::{
    build_domain, circle, disc, flat_torus, interval, parse_off, write_off, Cells, Domain, DomainDescriptor,
    DomainKind,
};
pub use grid::{graded_nodes, Grading};
pub(crate) use quadrature::GAUSS3;
pub use warp::{angular_eigenvalue, ball_volume, harmonic_multiplicity, sphere_area, WarpProfile};
