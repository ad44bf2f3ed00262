//! Space-time trace finite elements for transport-diffusion on evolving
//! surfaces given as the zero level of a function `phi(x, t)`.
//!
//! The solver marches over time slabs `I_n = (t_(n-1), t_n]`. On each slab
//! the space-time surface is reconstructed from the piecewise linear
//! interpolant of `phi` on prisms `T x I_n`, split into simplices and cut.
//! Trial and test functions are P1 in space times P1 in time, restricted to
//! the surface, with upwind coupling between slabs.
//!
//! All numerics are generic over [`Real`] (`f32`, `f64`); the aliases below
//! fix `f64`.

pub mod assembly;
pub mod config;
pub mod cutgeom;
pub mod driver;
pub mod error;
pub mod fespace;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod scalar;

pub use config::RunConfig;
pub use driver::{convergence_study, march, MarchOptions, RunReport, SigmaPolicy};
pub use error::{Error, Result};
pub use problems::{builtin, LevelSetField, ProblemDefinition, ProblemParams};
pub use scalar::Real;

pub type Mesh = mesh::SpatialMesh<f64>;
pub type Partition = mesh::TimePartition<f64>;
pub type Geometry = cutgeom::SlabGeometry<f64>;
pub type FeFunction = fespace::FEFunctionSlab<f64>;
pub type Matrix = linalg::CsrMatrix<f64>;
pub type Trajectory = driver::SolutionTrajectory<f64>;
pub type Problem = Box<dyn ProblemDefinition<f64>>;
