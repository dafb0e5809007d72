//! Finite-element assembly and solution of nonlocal Poisson problems with a
//! mollified constant kernel and adaptive outer quadrature.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod fe_space;
pub mod harness;
pub mod kernel;
pub mod mesh;
pub mod parallel;
pub mod quadrature;
pub mod solver;

pub use assembly::{assemble, assemble_barycenter, assemble_rhs, AssemblyConfig, Method, RowScope, SparseMatrix};
pub use error::{Error, Result};
pub use fe_space::{FeSpace, NormRegion};
pub use kernel::KernelParams;
pub use mesh::{build_mesh, refine, BoundingBox, Mesh, MeshKind};
pub use parallel::parallel_assemble;
pub use solver::{solve, SolveReport};
