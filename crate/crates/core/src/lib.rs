//! Bernardi–Raugel / weak Galerkin discretization of Biot poroelasticity with
//! block-preconditioned MINRES and GMRES solvers.

pub mod error;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod scenario;
pub mod sparse;
pub mod assembly;
pub mod spaces;
pub mod system;
pub mod precond;
pub mod krylov;
pub mod manufactured;
pub mod driver;
pub mod diagnostics;
pub mod export;

pub use error::{PoroError, Result};
pub use mesh::{build_structured_simplicial, BoxDomain, ElementGeometry, Mesh, Point};
pub use scenario::{DisplacementBc, PressureBc, ProblemData, ScenarioSpec};
pub use sparse::{CooBuilder, CsrMatrix};
