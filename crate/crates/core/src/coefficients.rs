//! Diffusion coefficients and boundary operators.
//!
//! The diffusion matrix `A` is piecewise constant (one `d x d` matrix per
//! cell). Its ellipticity constant is certified as the smallest eigenvalue of
//! the symmetric part over all cells, which is the exact lower bound of
//! `Re((A xi)^T conj(xi)) / |xi|^2` for real `A` and complex `xi`.
//!
//! Boundary operators act on functions sampled at boundary vertices. Four
//! representations are supported; each carries a structurally built
//! dominating positive operator `B̄` (entrywise absolute value of symbol,
//! kernel or matrix) together with `L^2(∂Ω)` and `L^∞(∂Ω)` norm bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("expected {expected} cell matrices, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell {cell}: matrix is {rows}x{cols}, expected {dim}x{dim}")]
    MatrixShape { cell: usize, rows: usize, cols: usize, dim: usize },
    #[error("cell {cell}: non-finite coefficient")]
    NonFinite { cell: usize },
    #[error("not uniformly elliptic: smallest symmetric-part eigenvalue {alpha} in cell {cell}")]
    NotElliptic { alpha: f64, cell: usize },
    #[error("boundary data sized {got}, mesh has {expected} boundary vertices")]
    BoundarySize { expected: usize, got: usize },
    #[error("non-finite boundary operator data")]
    NonFiniteBoundary,
}

/// Piecewise-constant diffusion matrix with certified ellipticity constant.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    dim: usize,
    matrices: Vec<DMatrix<f64>>,
    alpha: f64,
    sup_norm: f64,
}

impl CoefficientField {
    pub fn new(dim: usize, matrices: Vec<DMatrix<f64>>) -> Result<Self, CoefficientError> {
        for (cell, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(CoefficientError::MatrixShape {
                    cell,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    dim,
                });
            }
        }
        let alpha = certify_ellipticity(&matrices)?;
        let sup_norm = matrices.iter().flat_map(|m| m.iter()).fold(0.0f64, |acc, x| acc.max(x.abs()));
        Ok(Self { dim, matrices, alpha, sup_norm })
    }

    /// Same matrix on every cell of `mesh`.
    pub fn uniform(mesh: &Mesh, matrix: DMatrix<f64>) -> Result<Self, CoefficientError> {
        Self::new(mesh.dim(), vec![matrix; mesh.num_cells()])
    }

    pub fn isotropic(mesh: &Mesh, value: f64) -> Result<Self, CoefficientError> {
        Self::uniform(mesh, DMatrix::identity(mesh.dim(), mesh.dim()) * value)
    }

    pub fn diagonal(mesh: &Mesh, values: &[f64]) -> Result<Self, CoefficientError> {
        if values.len() != mesh.dim() {
            return Err(CoefficientError::MatrixShape {
                cell: 0,
                rows: values.len(),
                cols: values.len(),
                dim: mesh.dim(),
            });
        }
        Self::uniform(mesh, DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    /// Per-cell matrix chosen from the cell centroid.
    pub fn from_centroids(
        mesh: &Mesh,
        f: impl Fn(&[f64]) -> DMatrix<f64>,
    ) -> Result<Self, CoefficientError> {
        let matrices = (0..mesh.num_cells()).map(|c| f(&mesh.cell_centroid(c))).collect();
        Self::new(mesh.dim(), matrices)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, cell: usize) -> &DMatrix<f64> {
        &self.matrices[cell]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `max_c max_ij |A_c[i, j]|`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Field of transposed matrices (the coefficient of the adjoint form).
    pub fn transposed(&self) -> Self {
        Self {
            dim: self.dim,
            matrices: self.matrices.iter().map(|m| m.transpose()).collect(),
            alpha: self.alpha,
            sup_norm: self.sup_norm,
        }
    }

    pub fn scaled(&self, s: f64) -> Result<Self, CoefficientError> {
        Self::new(self.dim, self.matrices.iter().map(|m| m * s).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrices.iter().all(|m| m == &m.transpose())
    }

    /// Smallest `xi^T A_c xi` over every cell, a deterministic grid on the
    /// unit sphere, and the eigenvectors of each symmetric part.
    pub fn sampled_quadratic_floor(&self) -> f64 {
        let dirs = sphere_grid(self.dim);
        let mut floor = f64::INFINITY;
        for m in &self.matrices {
            let sym = (m + m.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let mut local = dirs.clone();
            local.extend(eig.eigenvectors.column_iter().map(|c| c.into_owned()));
            for xi in &local {
                floor = floor.min((m * xi).dot(xi));
            }
        }
        floor
    }
}

fn sphere_grid(dim: usize) -> Vec<DVector<f64>> {
    match dim {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..64)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 64.0;
                DVector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for i in 0..=16 {
                let th = PI * i as f64 / 16.0;
                for j in 0..32 {
                    let ph = 2.0 * PI * j as f64 / 32.0;
                    out.push(DVector::from_vec(vec![
                        th.sin() * ph.cos(),
                        th.sin() * ph.sin(),
                        th.cos(),
                    ]));
                }
            }
            out
        }
    }
}

/// Minimum over cells of the smallest eigenvalue of `(A_c + A_c^T) / 2`.
pub fn certify_ellipticity(matrices: &[DMatrix<f64>]) -> Result<f64, CoefficientError> {
    let mut alpha = f64::INFINITY;
    let mut worst = 0;
    for (cell, m) in matrices.iter().enumerate() {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(CoefficientError::NonFinite { cell });
        }
        let sym = (m + m.transpose()) * 0.5;
        let lmin = sym.symmetric_eigenvalues().min();
        if lmin < alpha {
            alpha = lmin;
            worst = cell;
        }
    }
    if !(alpha > 0.0) {
        return Err(CoefficientError::NotElliptic { alpha, cell: worst });
    }
    Ok(alpha)
}

/// Discrete representation of an operator on `L^2(∂Ω)`, indexed by boundary
/// vertices (see [`Mesh::boundary_vertices`]).
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRepr {
    Zero,
    /// Pointwise multiplication by `beta`.
    Multiplication(DVector<f64>),
    /// Integral operator `(Bu)(x) = ∫ k(x, y) u(y) dσ(y)`, kernel sampled at
    /// vertex pairs.
    Kernel(DMatrix<f64>),
    /// Explicit matrix on boundary vertex values.
    Dense(DMatrix<f64>),
}

impl BoundaryRepr {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BoundaryRepr::Zero => "zero",
            BoundaryRepr::Multiplication(_) => "multiplication",
            BoundaryRepr::Kernel(_) => "kernel",
            BoundaryRepr::Dense(_) => "dense",
        }
    }

    fn size(&self) -> Option<(usize, usize)> {
        match self {
            BoundaryRepr::Zero => None,
            BoundaryRepr::Multiplication(b) => Some((b.len(), b.len())),
            BoundaryRepr::Kernel(k) | BoundaryRepr::Dense(k) => Some((k.nrows(), k.ncols())),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            BoundaryRepr::Zero => true,
            BoundaryRepr::Multiplication(b) => b.iter().all(|x| x.is_finite()),
            BoundaryRepr::Kernel(k) | BoundaryRepr::Dense(k) => k.iter().all(|x| x.is_finite()),
        }
    }

    fn abs(&self) -> Self {
        match self {
            BoundaryRepr::Zero => BoundaryRepr::Zero,
            BoundaryRepr::Multiplication(b) => BoundaryRepr::Multiplication(b.abs()),
            BoundaryRepr::Kernel(k) => BoundaryRepr::Kernel(k.abs()),
            BoundaryRepr::Dense(m) => BoundaryRepr::Dense(m.abs()),
        }
    }

    /// Matrix of the operator acting on boundary vertex values.
    pub fn operator_matrix(&self, measures: &DVector<f64>) -> DMatrix<f64> {
        let nb = measures.len();
        match self {
            BoundaryRepr::Zero => DMatrix::zeros(nb, nb),
            BoundaryRepr::Multiplication(b) => DMatrix::from_diagonal(b),
            BoundaryRepr::Kernel(k) => {
                let mut op = k.clone();
                for (j, mut col) in op.column_iter_mut().enumerate() {
                    col *= measures[j];
                }
                op
            }
            BoundaryRepr::Dense(m) => m.clone(),
        }
    }
}

/// Closed-form kernels evaluated at boundary vertex coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    Constant,
    Gaussian { width: f64 },
    /// `cos(π |x - y|)`.
    Cosine,
    /// `f(x) g(y) - g(x) f(y)` with `f = cos(π x_0)`, `g = cos(π x_1)`, both
    /// centred to zero boundary mean, so that `B + B* = 0` and `B 1 = 0`.
    AntisymmetricCosine,
}

impl KernelShape {
    /// Kernel matrix `k(x_i, x_j)` times `scale`.
    pub fn sample(&self, mesh: &Mesh, scale: f64) -> DMatrix<f64> {
        let bverts = mesh.boundary_vertices();
        let pts: Vec<&[f64]> = bverts.iter().map(|&v| mesh.vertex(v)).collect();
        let nb = pts.len();
        let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        match *self {
            KernelShape::Constant => DMatrix::from_element(nb, nb, scale),
            KernelShape::Gaussian { width } => DMatrix::from_fn(nb, nb, |i, j| {
                scale * (-dist2(pts[i], pts[j]) / (width * width)).exp()
            }),
            KernelShape::Cosine => {
                DMatrix::from_fn(nb, nb, |i, j| scale * (PI * dist2(pts[i], pts[j]).sqrt()).cos())
            }
            KernelShape::AntisymmetricCosine => {
                let m = mesh.boundary_vertex_measures();
                let total: f64 = m.iter().sum();
                let d = mesh.dim();
                let centred = |axis: usize| {
                    let raw: Vec<f64> = pts.iter().map(|p| (PI * p[axis]).cos()).collect();
                    let mean = raw.iter().zip(&m).map(|(r, w)| r * w).sum::<f64>() / total;
                    raw.into_iter().map(|r| r - mean).collect::<Vec<_>>()
                };
                let f = centred(0);
                let g = centred(1 % d);
                DMatrix::from_fn(nb, nb, |i, j| scale * (f[i] * g[j] - g[i] * f[j]))
            }
        }
    }
}

/// A boundary operator `B`, its dominating positive operator `B̄`, and norm
/// bounds for both.
#[derive(Debug, Clone)]
pub struct BoundaryOperatorSpec {
    repr: BoundaryRepr,
    bar: BoundaryRepr,
    measures: DVector<f64>,
    pub norm2: f64,
    pub norm_inf: f64,
    pub norm2_bar: f64,
    pub norm_inf_bar: f64,
}

impl BoundaryOperatorSpec {
    pub fn repr(&self) -> &BoundaryRepr {
        &self.repr
    }

    pub fn bar(&self) -> &BoundaryRepr {
        &self.bar
    }

    /// Boundary vertex measures the operator was built against.
    pub fn measures(&self) -> &DVector<f64> {
        &self.measures
    }

    pub fn num_boundary(&self) -> usize {
        self.measures.len()
    }

    pub fn operator_matrix(&self) -> DMatrix<f64> {
        self.repr.operator_matrix(&self.measures)
    }

    pub fn bar_operator_matrix(&self) -> DMatrix<f64> {
        self.bar.operator_matrix(&self.measures)
    }

    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        self.operator_matrix() * w
    }

    pub fn apply_bar(&self, w: &DVector<f64>) -> DVector<f64> {
        self.bar_operator_matrix() * w
    }

    /// The `L^2(∂Ω)` adjoint: kernel transpose for kernels, the
    /// measure-weighted adjoint `Mb^{-1} B^T Mb` for dense matrices.
    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            BoundaryRepr::Zero => BoundaryRepr::Zero,
            BoundaryRepr::Multiplication(b) => BoundaryRepr::Multiplication(b.clone()),
            BoundaryRepr::Kernel(k) => BoundaryRepr::Kernel(k.transpose()),
            BoundaryRepr::Dense(m) => {
                let mut adj = m.transpose();
                for i in 0..adj.nrows() {
                    for j in 0..adj.ncols() {
                        adj[(i, j)] *= self.measures[j] / self.measures[i];
                    }
                }
                BoundaryRepr::Dense(adj)
            }
        };
        from_parts(repr, self.measures.clone())
    }

    /// The operator `‖B̄‖_∞ I + sign · B̄`, which enters the L^∞-contractivity
    /// criterion (`sign = ±1`) and the dominating semigroup (`sign = -1`).
    pub fn shifted_bar(&self, sign: f64) -> Self {
        let shift = self.norm_inf_bar;
        let repr = match &self.bar {
            BoundaryRepr::Zero => {
                BoundaryRepr::Multiplication(DVector::from_element(self.measures.len(), shift))
            }
            BoundaryRepr::Multiplication(b) => BoundaryRepr::Multiplication(b.map(|x| shift + sign * x)),
            other => {
                let mut m = other.operator_matrix(&self.measures) * sign;
                for i in 0..m.nrows() {
                    m[(i, i)] += shift;
                }
                BoundaryRepr::Dense(m)
            }
        };
        from_parts(repr, self.measures.clone())
    }

    /// `-B̄`, the boundary operator of the semigroup that dominates `e^{-tL(B)}`
    /// by the form comparison `Re ã(B)(u, v) ≥ ã(-B̄)(|u|, |v|)`.
    pub fn negated_bar(&self) -> Self {
        let repr = match &self.bar {
            BoundaryRepr::Zero => BoundaryRepr::Zero,
            BoundaryRepr::Multiplication(b) => BoundaryRepr::Multiplication(-b),
            BoundaryRepr::Kernel(k) => BoundaryRepr::Kernel(-k),
            BoundaryRepr::Dense(m) => BoundaryRepr::Dense(-m),
        };
        from_parts(repr, self.measures.clone())
    }

    /// Largest entrywise excess of `|B w|` over `B̄ |w|`.
    pub fn domination_defect(&self, w: &DVector<f64>) -> f64 {
        let lhs = self.apply(w).abs();
        let rhs = self.apply_bar(&w.abs());
        lhs.iter().zip(rhs.iter()).map(|(l, r)| l - r).fold(0.0f64, f64::max)
    }
}

/// Exact discrete `L^∞ -> L^∞` norm: maximum absolute row sum.
pub fn discrete_norm_inf(op: &DMatrix<f64>) -> f64 {
    op.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Discrete `L^2(∂Ω)` operator norm with the measure-weighted inner product:
/// the largest singular value of `Mb^{1/2} op Mb^{-1/2}`.
pub fn discrete_norm2(op: &DMatrix<f64>, measures: &DVector<f64>) -> f64 {
    if op.is_empty() {
        return 0.0;
    }
    let sq = measures.map(f64::sqrt);
    let weighted = DMatrix::from_fn(op.nrows(), op.ncols(), |i, j| sq[i] * op[(i, j)] / sq[j]);
    let normal = weighted.transpose() * &weighted;
    normal.symmetric_eigenvalues().max().max(0.0).sqrt()
}

fn norms_of(repr: &BoundaryRepr, measures: &DVector<f64>) -> (f64, f64) {
    match repr {
        BoundaryRepr::Zero => (0.0, 0.0),
        BoundaryRepr::Multiplication(b) => {
            let m = b.amax();
            (m, m)
        }
        other => {
            let op = other.operator_matrix(measures);
            (discrete_norm2(&op, measures), discrete_norm_inf(&op))
        }
    }
}

fn from_parts(repr: BoundaryRepr, measures: DVector<f64>) -> BoundaryOperatorSpec {
    let bar = repr.abs();
    let (norm2, norm_inf) = norms_of(&repr, &measures);
    let (norm2_bar, norm_inf_bar) = norms_of(&bar, &measures);
    BoundaryOperatorSpec { repr, bar, measures, norm2, norm_inf, norm2_bar, norm_inf_bar }
}

/// Validate `repr` against the boundary of `mesh` and attach `B̄` and norms.
pub fn build_boundary_operator(
    repr: BoundaryRepr,
    mesh: &Mesh,
) -> Result<BoundaryOperatorSpec, CoefficientError> {
    let measures = DVector::from_vec(mesh.boundary_vertex_measures());
    let nb = measures.len();
    if let Some((r, c)) = repr.size() {
        if r != nb || c != nb {
            return Err(CoefficientError::BoundarySize { expected: nb, got: r.max(c) });
        }
    }
    if !repr.is_finite() {
        return Err(CoefficientError::NonFiniteBoundary);
    }
    Ok(from_parts(repr, measures))
}

/// Outcome of the admissibility test on `(B, B̄, α, ‖γ‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `1 + (‖B̄‖_∞ + ‖B̄‖_2) ‖γ‖² ≤ α`.
    pub admissible: bool,
    pub margin: f64,
    /// `1 + ‖B‖_2 ‖γ‖² ≤ α` (enough for accretivity of the shifted form).
    pub weak_admissible: bool,
    pub weak_margin: f64,
}

pub fn check_admissibility(
    spec: &BoundaryOperatorSpec,
    alpha: f64,
    trace_norm_sq: f64,
) -> Admissibility {
    admissibility_from_norms(spec.norm_inf_bar, spec.norm2_bar, spec.norm2, alpha, trace_norm_sq)
}

pub fn admissibility_from_norms(
    norm_inf_bar: f64,
    norm2_bar: f64,
    norm2: f64,
    alpha: f64,
    trace_norm_sq: f64,
) -> Admissibility {
    let margin = alpha - (1.0 + (norm_inf_bar + norm2_bar) * trace_norm_sq);
    let weak_margin = alpha - (1.0 + norm2 * trace_norm_sq);
    Admissibility {
        admissible: margin >= 0.0,
        margin,
        weak_admissible: weak_margin >= 0.0,
        weak_margin,
    }
}
