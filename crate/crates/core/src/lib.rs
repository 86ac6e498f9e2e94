//! Reduced-order simulation of stimulus-driven morphing in bilayer
//! composite shells.
//!
//! A planar composite of a heat-shrinking substrate and a patterned stiff
//! layer is collapsed onto a single triangle mesh. Edges carry stretching
//! energy against prescribed thermal strains; hinges carry bending energy
//! whose rest angle is driven by the in-plane strain mismatch across the
//! hinge, so non-uniform contraction buys out-of-plane curvature. Damped
//! Newton continuation walks the stimulus from zero to its target and
//! returns the equilibrium 3D shape, which the metrics module can compare
//! against reference scans.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line live in the companion `morphshell-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod checks;
pub mod energy;
pub mod lattice;
pub mod linalg;
pub mod material;
pub mod math;
pub mod mesh;
pub mod metrics;
pub mod solver;
pub mod stimulus;

pub use energy::{delta_strain, energy_gradient, energy_hessian, total_energy, EnergyParams, EnergyReport};
pub use material::{assemble_material, bilayer_stiffness, layer_stiffness, LayerSpec, MaterialModel};
pub use mesh::{DofVector, Mesh, MeshError, Region};
pub use metrics::{align, aspect_ratio, aspect_ratio_about, ssim, voxelize, TriSurface, VoxelVolume};
pub use solver::{
    dynamic_step, newton_step, solve_equilibrium, solve_equilibrium_with, solve_static,
    ConstraintScheme, SolveMode, SolverConfig, SolverError, SolverState,
};
pub use stimulus::{plan_steps, thermal_field, ShrinkCurve, StimulusSchedule, ThermalField};
