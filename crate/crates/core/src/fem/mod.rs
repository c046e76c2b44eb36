//! Reference-element machinery and assembly for the mixed P2-P1 Stokes
//! discretization and the P1 phase field.

mod assembly;
mod fields;
mod quadrature;
mod space;
mod transfer;

pub use assembly::{
    assemble_divergence, assemble_p1_load, assemble_p1_mass, assemble_p1_stiffness,
    assemble_p2_vector_mass, assemble_p2_vector_stiffness, assemble_weighted_p1_mass,
    assemble_weighted_p2_vector_mass,
};
pub use fields::{ScalarFieldP1, ScalarPressureP1, VectorFieldP2};
pub use quadrature::QuadratureRule;
pub use space::{p2_values, DofMapP1, DofMapP2, FeSpace};
pub use transfer::{p1_to_p2_interpolate, p2_to_p1_project, velocity_at_vertices};
