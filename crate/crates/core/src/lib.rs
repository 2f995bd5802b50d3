//! Finite-element laboratory for heat semigroups with generalised Robin
//! boundary operators.
//!
//! Pipeline: [`mesh`] builds a Kuhn simplicial mesh, [`coefficients`] holds
//! the diffusion matrix and the boundary operator, [`assembly`] produces the
//! discrete forms, [`semigroup`] exponentiates them, and [`verify`] runs the
//! inequality checks.

pub mod assembly;
pub mod coefficients;
pub mod expm;
pub mod mesh;
pub mod semigroup;
pub mod status;
pub mod verify;

pub use assembly::{assemble_system, AssembledSystem, AssemblyError};
pub use coefficients::{
    build_boundary_operator, check_admissibility, Admissibility, BoundaryOperatorSpec, BoundaryRepr,
    CoefficientError, CoefficientField, KernelShape,
};
pub use mesh::{build_box_mesh, build_lshape_mesh, Mesh, MeshError};
pub use semigroup::{build_evaluator, SemigroupError, SemigroupEvaluator};
pub use status::Status;
pub use verify::VerifyError;
