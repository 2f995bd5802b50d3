//! P1 assembly of the forms `a(B)`, `ã(B) = a(B) + α⟨·,·⟩` and their
//! adjoints.
//!
//! Conventions: for nodal vectors `u, v` the discrete form is
//! `a(u, v) = vᵀ FormA u`, so `vᵀ K u = ∫ (A∇u)·∇v` and the boundary term is
//! `(Γv)ᵀ Bw (Γu)`. All `L²` quantities use the lumped mass `M`; the boundary
//! uses the lumped boundary mass `Mb`.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coefficients::{check_admissibility, Admissibility, BoundaryOperatorSpec, CoefficientField};
use crate::mesh::Mesh;
use crate::status::Status;

pub const TRACE_TOL: f64 = 1e-10;
pub const TRACE_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("cell {cell} is degenerate (singular Jacobian)")]
    DegenerateCell { cell: usize },
    #[error("coefficient field has {got} cells, mesh has {expected}")]
    CellCount { expected: usize, got: usize },
    #[error("boundary operator sized {got}, mesh has {expected} boundary vertices")]
    BoundarySize { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("trace-norm power iteration did not converge in {iterations} iterations")]
    TraceNotConverged { iterations: usize },
}

/// Gradients of the barycentric coordinates of cell `c`, one row per vertex.
fn barycentric_gradients(mesh: &Mesh, c: usize) -> Result<DMatrix<f64>, AssemblyError> {
    let d = mesh.dim();
    let cell = mesh.cell(c);
    let p0 = mesh.vertex(cell[0]);
    let jac = DMatrix::from_fn(d, d, |r, k| mesh.vertex(cell[k + 1])[r] - p0[r]);
    let inv = jac.try_inverse().ok_or(AssemblyError::DegenerateCell { cell: c })?;
    let mut grads = DMatrix::zeros(d + 1, d);
    for k in 0..d {
        for r in 0..d {
            grads[(k + 1, r)] = inv[(k, r)];
            grads[(0, r)] -= inv[(k, r)];
        }
    }
    Ok(grads)
}

/// `K_ij = Σ_c |c| ∇φ_iᵀ A_c ∇φ_j`.
pub fn assemble_stiffness(mesh: &Mesh, field: &CoefficientField) -> Result<DMatrix<f64>, AssemblyError> {
    if field.num_cells() != mesh.num_cells() {
        return Err(AssemblyError::CellCount { expected: mesh.num_cells(), got: field.num_cells() });
    }
    let n = mesh.num_vertices();
    let vols = mesh.cell_volumes();
    let mut k = DMatrix::zeros(n, n);
    for c in 0..mesh.num_cells() {
        if !(vols[c] > 0.0) {
            return Err(AssemblyError::DegenerateCell { cell: c });
        }
        let g = barycentric_gradients(mesh, c)?;
        let local = &g * field.matrix(c) * g.transpose() * vols[c];
        let cell = mesh.cell(c);
        for (a, &i) in cell.iter().enumerate() {
            for (b, &j) in cell.iter().enumerate() {
                k[(i, j)] += local[(a, b)];
            }
        }
    }
    Ok(k)
}

/// Vertex-lumped mass: each vertex receives `|c| / (d + 1)` from each cell.
pub fn assemble_lumped_mass(mesh: &Mesh) -> DVector<f64> {
    let d = mesh.dim();
    let mut m = DVector::zeros(mesh.num_vertices());
    for (cell, vol) in mesh.cells().zip(mesh.cell_volumes()) {
        for &i in cell {
            m[i] += vol / (d + 1) as f64;
        }
    }
    m
}

pub fn assemble_consistent_mass(mesh: &Mesh) -> DMatrix<f64> {
    let d = mesh.dim();
    let n = mesh.num_vertices();
    let mut m = DMatrix::zeros(n, n);
    let denom = ((d + 1) * (d + 2)) as f64;
    for (cell, vol) in mesh.cells().zip(mesh.cell_volumes()) {
        for &i in cell {
            for &j in cell {
                m[(i, j)] += vol / denom * if i == j { 2.0 } else { 1.0 };
            }
        }
    }
    m
}

/// `nb x n` selection of boundary vertex values.
pub fn trace_map(mesh: &Mesh) -> DMatrix<f64> {
    let bv = mesh.boundary_vertices();
    let mut g = DMatrix::zeros(bv.len(), mesh.num_vertices());
    for (r, &v) in bv.iter().enumerate() {
        g[(r, v)] = 1.0;
    }
    g
}

/// `Bw = Mb · op(B)`, so that `(Γv)ᵀ Bw (Γu) = ∫_∂Ω Bγ(u) γ(v) dσ` with
/// vertex-lumped quadrature.
pub fn assemble_boundary_term(mesh: &Mesh, spec: &BoundaryOperatorSpec) -> Result<DMatrix<f64>, AssemblyError> {
    let nb = mesh.boundary_vertices().len();
    if spec.num_boundary() != nb {
        return Err(AssemblyError::BoundarySize { expected: nb, got: spec.num_boundary() });
    }
    Ok(weak_boundary(spec))
}

fn weak_boundary(spec: &BoundaryOperatorSpec) -> DMatrix<f64> {
    let mut bw = spec.operator_matrix();
    for (i, mut row) in bw.row_iter_mut().enumerate() {
        row *= spec.measures()[i];
    }
    bw
}

/// Every discrete object needed downstream.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub dim: usize,
    pub alpha: f64,
    /// Volume index of each boundary vertex.
    pub boundary: Vec<usize>,
    pub k: DMatrix<f64>,
    pub k_id: DMatrix<f64>,
    /// Stiffness of the transposed coefficient.
    pub k_adj: DMatrix<f64>,
    pub m: DVector<f64>,
    pub m_consistent: DMatrix<f64>,
    pub mb: DVector<f64>,
    pub gamma: DMatrix<f64>,
    pub bw: DMatrix<f64>,
    pub bw_adj: DMatrix<f64>,
    pub form_a: DMatrix<f64>,
    pub form_a_tilde: DMatrix<f64>,
    pub form_a_adj: DMatrix<f64>,
    pub form_a_tilde_adj: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub trace_norm_sq: f64,
    pub admissibility: Admissibility,
}

pub fn assemble_system(
    mesh: &Mesh,
    field: &CoefficientField,
    spec: &BoundaryOperatorSpec,
    alpha: f64,
) -> Result<AssembledSystem, AssemblyError> {
    let d = mesh.dim();
    let k = assemble_stiffness(mesh, field)?;
    let k_adj = assemble_stiffness(mesh, &field.transposed())?;
    let identity = CoefficientField::isotropic(mesh, 1.0).expect("identity is elliptic");
    let k_id = assemble_stiffness(mesh, &identity)?;
    let m = assemble_lumped_mass(mesh);
    let mb = DVector::from_vec(mesh.boundary_vertex_measures());
    let mut h1 = k_id.clone();
    for i in 0..m.len() {
        h1[(i, i)] += m[i];
    }
    let boundary = mesh.boundary_vertices();
    let mut full_mb = DVector::zeros(m.len());
    for (r, &v) in boundary.iter().enumerate() {
        full_mb[v] = mb[r];
    }
    let trace_norm_sq = compute_trace_norm(&full_mb, &h1)?;
    let n = m.len();
    let empty = DMatrix::zeros(0, 0);
    let mut sys = AssembledSystem {
        dim: d,
        alpha,
        boundary,
        k,
        k_id,
        k_adj,
        m,
        m_consistent: assemble_consistent_mass(mesh),
        mb,
        gamma: trace_map(mesh),
        bw: empty.clone(),
        bw_adj: empty.clone(),
        form_a: empty.clone(),
        form_a_tilde: empty.clone(),
        form_a_adj: empty.clone(),
        form_a_tilde_adj: empty,
        h1,
        trace_norm_sq,
        admissibility: check_admissibility(spec, alpha, trace_norm_sq),
    };
    debug_assert_eq!(sys.gamma.ncols(), n);
    sys.install_boundary(mesh, spec)?;
    Ok(sys)
}

impl AssembledSystem {
    pub fn num_vertices(&self) -> usize {
        self.m.len()
    }

    fn install_boundary(&mut self, mesh: &Mesh, spec: &BoundaryOperatorSpec) -> Result<(), AssemblyError> {
        self.bw = assemble_boundary_term(mesh, spec)?;
        self.bw_adj = weak_boundary(&spec.adjoint());
        self.form_a = &self.k + self.lift(&self.bw);
        self.form_a_adj = &self.k_adj + self.lift(&self.bw_adj);
        self.form_a_tilde = self.add_mass(&self.form_a, self.alpha);
        self.form_a_tilde_adj = self.add_mass(&self.form_a_adj, self.alpha);
        self.admissibility = check_admissibility(spec, self.alpha, self.trace_norm_sq);
        Ok(())
    }

    /// Same mesh, coefficient and shift with a different boundary operator.
    pub fn with_boundary(&self, mesh: &Mesh, spec: &BoundaryOperatorSpec) -> Result<Self, AssemblyError> {
        let mut out = self.clone();
        out.install_boundary(mesh, spec)?;
        Ok(out)
    }

    /// `Γᵀ bw Γ` as an `n x n` matrix.
    pub fn lift(&self, bw: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut out = DMatrix::zeros(n, n);
        for (r, &i) in self.boundary.iter().enumerate() {
            for (s, &j) in self.boundary.iter().enumerate() {
                out[(i, j)] += bw[(r, s)];
            }
        }
        out
    }

    pub fn add_mass(&self, a: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
        let mut out = a.clone();
        for i in 0..self.num_vertices() {
            out[(i, i)] += s * self.m[i];
        }
        out
    }

    /// `K + Γᵀ Bw Γ + α M` for another boundary operator.
    pub fn form_tilde_for(&self, spec: &BoundaryOperatorSpec) -> Result<DMatrix<f64>, AssemblyError> {
        if spec.num_boundary() != self.boundary.len() {
            return Err(AssemblyError::BoundarySize { expected: self.boundary.len(), got: spec.num_boundary() });
        }
        Ok(self.add_mass(&(&self.k + self.lift(&weak_boundary(spec))), self.alpha))
    }

    pub fn trace(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.boundary.len(), self.boundary.iter().map(|&i| u[i]))
    }

    pub fn l1_norm(&self, u: &DVector<f64>) -> f64 {
        u.iter().zip(self.m.iter()).map(|(x, m)| m * x.abs()).sum()
    }

    pub fn l2_norm(&self, u: &DVector<f64>) -> f64 {
        u.iter().zip(self.m.iter()).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
    }

    pub fn h1_norm(&self, u: &DVector<f64>) -> f64 {
        (&self.h1 * u).dot(u).max(0.0).sqrt()
    }

    pub fn integral(&self, u: &DVector<f64>) -> f64 {
        u.dot(&self.m)
    }

    pub fn volume(&self) -> f64 {
        self.m.sum()
    }

    /// Largest positive off-diagonal entry of `K` (zero for an M-matrix).
    pub fn stiffness_offdiag_max(&self) -> f64 {
        let n = self.num_vertices();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    worst = worst.max(self.k[(i, j)]);
                }
            }
        }
        worst
    }
}

/// Maximum absolute row sum.
pub fn matrix_norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest `λ` with `diag(g) u = λ H1 u`, by power iteration on `H1⁻¹ diag(g)`.
pub fn compute_trace_norm(g: &DVector<f64>, h1: &DMatrix<f64>) -> Result<f64, AssemblyError> {
    let chol = Cholesky::<f64, Dyn>::new(h1.clone()).ok_or(AssemblyError::NotPositiveDefinite)?;
    let n = g.len();
    // Deterministic start with a component along every boundary mode.
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.25 * ((i as f64) * 0.618_033_988_75).fract());
    let mut lambda_prev = f64::NAN;
    for it in 0..TRACE_MAX_ITER {
        let y = chol.solve(&g.component_mul(&x));
        let num = g.component_mul(&y).dot(&y);
        let den = (h1 * &y).dot(&y);
        if !(den > 0.0) {
            return Err(AssemblyError::NotPositiveDefinite);
        }
        let lambda = num / den;
        x = &y / den.sqrt();
        if it > 0 && (lambda - lambda_prev).abs() <= TRACE_TOL * lambda {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(AssemblyError::TraceNotConverged { iterations: TRACE_MAX_ITER })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccretivityReport {
    pub status: Status,
    pub lambda_min: f64,
    pub form_norm: f64,
    pub threshold: f64,
}

/// `λ_min(sym(FormAtilde − H1)) ≥ −1e-10 ‖FormAtilde‖`.
pub fn check_accretivity(sys: &AssembledSystem) -> AccretivityReport {
    let diff = &sys.form_a_tilde - &sys.h1;
    let sym = (&diff + diff.transpose()) * 0.5;
    let lambda_min = sym.symmetric_eigenvalues().min();
    let form_norm = matrix_norm_inf(&sys.form_a_tilde);
    let threshold = -1e-10 * form_norm;
    let status = if !sys.admissibility.admissible {
        Status::HypothesisUnmet
    } else {
        Status::from_bool(lambda_min >= threshold)
    };
    AccretivityReport { status, lambda_min, form_norm, threshold }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub status: Status,
    pub samples: usize,
    pub seed: u64,
    pub max_ratio: f64,
}

/// Sampled form bound
/// `|vᵀ F u| ≤ (d² ‖A‖_∞ + ‖B‖₂ ‖γ‖²) ‖u‖_{H¹} ‖v‖_{H¹} + α ‖u‖ ‖v‖`.
pub fn check_continuity(
    sys: &AssembledSystem,
    field: &CoefficientField,
    spec: &BoundaryOperatorSpec,
    samples: usize,
    seed: u64,
) -> ContinuityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.num_vertices();
    let d = sys.dim as f64;
    let c = d * d * field.sup_norm() + spec.norm2 * sys.trace_norm_sq;
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = (&sys.form_a_tilde * &u).dot(&v).abs();
        let rhs = c * sys.h1_norm(&u) * sys.h1_norm(&v) + sys.alpha * sys.l2_norm(&u) * sys.l2_norm(&v);
        max_ratio = max_ratio.max(lhs / rhs);
    }
    ContinuityReport {
        status: Status::from_bool(max_ratio <= 1.0 + 1e-12),
        samples,
        seed,
        max_ratio,
    }
}

/// Smallest sampled slack in
/// `0 ≤ ⟨Bw Γu, Γu⟩ + ‖B‖₂ ‖γ‖² ((1/α) uᵀ K u + ‖u‖²)`.
pub fn boundary_inclusion_slack(
    sys: &AssembledSystem,
    spec: &BoundaryOperatorSpec,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.num_vertices();
    let mut slack = f64::INFINITY;
    for _ in 0..samples {
        let u = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let gu = sys.trace(&u);
        let boundary = (&sys.bw * &gu).dot(&gu);
        let grad = (&sys.k * &u).dot(&u) / sys.alpha;
        let l2 = sys.l2_norm(&u).powi(2);
        slack = slack.min(boundary + spec.norm2 * sys.trace_norm_sq * (grad + l2));
    }
    slack
}

/// Coordinate text: `row col value` per nonzero entry, shortest round-trip
/// decimals.
pub fn to_coordinate_text(a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{i} {j} {v:?}");
            }
        }
    }
    out
}
