//! k-CNF satisfiability as 0/1 feasibility programs and bipartite graphs.
//!
//! The pipeline runs formula ([`cnf`]) → program `A x >= b` ([`milp`]) →
//! weighted bipartite graph ([`graph`]). [`wl`] implements 1-WL colour
//! refinement on those graphs, [`sat`] is the labelling solver and
//! [`generator`] builds balanced datasets near the 3-SAT phase transition.

pub mod cnf;
pub mod error;
pub mod generator;
pub mod graph;
pub mod milp;
pub mod sat;
pub mod wl;

pub use cnf::{emit_dimacs, enumerate_models, parse_dimacs, Clause, Formula, FormulaPermutation, Literal, World};
pub use error::{CnfError, GenError, GraphError, MilpError, WlError};
pub use graph::{apply_rni, batch, to_graph, BatchedGraph, BipartiteGraph, RniConfig};
pub use milp::{encode, feasible_bruteforce, to_mps, MilpInstance};
pub use sat::{solve, SolveBudget, SolveResult, SolveStatus};
