//! Potentials and drift models: convex potentials with prescribed Hessian
//! ranges, classical and generalized kinetic Langevin drifts, oscillator
//! chains and order-`K` lifted systems.

mod chain;
mod drift;
mod potential;

pub use chain::{
    chain_bounds_pinned, chain_bounds_unpinned, chain_potential, pinned_chain_langevin, site_temperatures,
    unpinned_chain_langevin, unpinned_projection, ChainPotential, Projected, UnpinnedChain,
};
pub use drift::{affine_drift, glangevin_drift, langevin_drift, order_k_system, DriftModel, Dynamics, Family, GlNoise};
pub use potential::{
    cosine_modulated_potential, cosine_modulated_range, flat_potential, quadratic_potential, CosineModulated, Flat,
    HessianBounds, HessianRange, Potential, Quadratic, SharedPotential,
};
