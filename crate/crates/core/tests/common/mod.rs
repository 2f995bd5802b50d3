#![allow(dead_code)]

use nalgebra::DVector;
use robinlab_core::{
    assemble_system, build_boundary_operator, build_box_mesh, AssembledSystem, BoundaryOperatorSpec, BoundaryRepr,
    CoefficientField, KernelShape, Mesh,
};

/// Mesh, operator and assembled system for one experiment.
pub struct Case {
    pub name: &'static str,
    pub mesh: Mesh,
    pub field: CoefficientField,
    pub spec: BoundaryOperatorSpec,
    pub sys: AssembledSystem,
}

pub fn unit_cube(divisions: usize) -> Mesh {
    build_box_mesh(&[1.0; 3], &[divisions; 3]).unwrap()
}

pub fn case(name: &'static str, mesh: Mesh, diffusivity: f64, repr: BoundaryRepr) -> Case {
    let field = CoefficientField::isotropic(&mesh, diffusivity).unwrap();
    let spec = build_boundary_operator(repr, &mesh).unwrap();
    let sys = assemble_system(&mesh, &field, &spec, field.alpha()).unwrap();
    Case { name, mesh, field, spec, sys }
}

pub fn robin(mesh: &Mesh, beta: f64) -> BoundaryRepr {
    BoundaryRepr::Multiplication(DVector::from_element(mesh.boundary_vertices().len(), beta))
}

/// Antisymmetric cosine kernel scaled to use `fill` of the admissibility
/// budget `α − 1`.
pub fn antisymmetric_case(name: &'static str, mesh: Mesh, diffusivity: f64, fill: f64) -> Case {
    let unit = build_boundary_operator(BoundaryRepr::Kernel(KernelShape::AntisymmetricCosine.sample(&mesh, 1.0)), &mesh)
        .unwrap();
    let probe = case(name, mesh, diffusivity, BoundaryRepr::Zero);
    let per_unit = (unit.norm_inf_bar + unit.norm2_bar) * probe.sys.trace_norm_sq;
    let scale = fill * (probe.sys.alpha - 1.0) / per_unit;
    let kernel = KernelShape::AntisymmetricCosine.sample(&probe.mesh, scale);
    case(name, probe.mesh, diffusivity, BoundaryRepr::Kernel(kernel))
}
