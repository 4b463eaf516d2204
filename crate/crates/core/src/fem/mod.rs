//! Piecewise-linear finite elements for the Neumann Laplacian on convex
//! polygons.

pub mod mesh;
pub mod solve;

pub use mesh::{refine, triangulate, triangulate_with, Mesh, MeshOptions};
pub use solve::{
    assemble, directional_profile, gradient_bound_check, solve_converged, solve_neumann_eig,
    solve_neumann_eig_with, ConvergedSolution, DirectionalProfile, GradientBoundReport, MeshSolution,
    SolveOptions,
};
