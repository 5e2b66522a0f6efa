//! Discrete elastic rod energies, anchor terms and their derivatives.

pub mod anchor_derivs;
pub mod assembly;
pub mod kernels;
pub(crate) mod stencil;

pub use anchor_derivs::{hessian_anchor_direction, jacobian_anchor_direction, jacobian_anchor_position, DirectionConfig};
pub use assembly::{
    assemble_derivatives, chart_gradient, corner_anchor_sites, energy_gradient, eval_anchor_energy, eval_elastic_terms, total_energy, DerivativeBundle,
    Residual, ResidualKind,
};
pub use kernels::phi;
