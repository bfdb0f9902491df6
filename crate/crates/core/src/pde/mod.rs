//! P1 finite elements for `-div(A(x/ε)∇u) = 0`, periodic cell problems and linear solvers.

pub mod assembly;
pub mod cell_problem;
pub mod coefficient;
pub mod dirichlet;
pub mod field;
pub mod solver;
pub mod sparse;

pub use cell_problem::{solve_cell_problems, Correctors};
pub use coefficient::{CoefficientField, CoefficientPreset};
pub use dirichlet::{comparison_solution, galerkin_residual, solve_dirichlet, DirichletReport};
pub use field::DiscreteField;
pub use solver::{PreconditionerKind, SolveStats, SolverOptions};
