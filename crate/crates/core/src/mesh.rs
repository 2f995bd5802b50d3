//! Structured simplicial meshes of boxes and L-shaped domains.
//!
//! Every hexahedral (or square, or interval) grid cell is split into `d!`
//! simplices along the main diagonal (Kuhn / Freudenthal subdivision). All
//! cells share the same diagonal direction, so the triangulation is
//! conforming, and the resulting path simplices are non-obtuse: the P1
//! Laplacian assembled on them has nonpositive off-diagonal entries.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("unsupported dimension {0}; expected 1, 2 or 3")]
    UnsupportedDimension(usize),
    #[error("got {extents} extents but {divisions} division counts")]
    ShapeMismatch { extents: usize, divisions: usize },
    #[error("extent along axis {axis} must be positive and finite, got {value}")]
    BadExtent { axis: usize, value: f64 },
    #[error("division count along axis {axis} must be at least 1")]
    ZeroDivisions { axis: usize },
    #[error("L-shape needs an even division count of at least 2, got {0}")]
    LShapeDivisions(usize),
    #[error("face shared by {count} cells; mesh is not a manifold")]
    NonManifoldFace { count: usize },
}

/// A boundary facet: `d` vertex indices plus the single cell that owns it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub cell: usize,
}

/// Immutable simplicial mesh in `R^d`, `d` in {1, 2, 3}.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    boundary_facets: Vec<BoundaryFacet>,
    cell_volumes: Vec<f64>,
    facet_areas: Vec<f64>,
    diameter: f64,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cell_volumes.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Vertex indices of cell `c`, positively oriented.
    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    /// `(d-1)`-dimensional measure of each boundary facet (counting measure
    /// in `d = 1`).
    pub fn facet_areas(&self) -> &[f64] {
        &self.facet_areas
    }

    pub fn volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.facet_areas.iter().sum()
    }

    /// Largest cell diameter (longest edge of any simplex).
    pub fn mesh_size(&self) -> f64 {
        self.diameter
    }

    /// Sorted, deduplicated vertex indices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on_boundary = vec![false; self.num_vertices()];
        for f in &self.boundary_facets {
            for &v in &f.vertices {
                on_boundary[v] = true;
            }
        }
        on_boundary
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Boundary measure share of each boundary vertex, aligned with
    /// [`Mesh::boundary_vertices`]: every facet hands `area / d` to each of
    /// its `d` vertices.
    pub fn boundary_vertex_measures(&self) -> Vec<f64> {
        let mut share = vec![0.0; self.num_vertices()];
        let d = self.dim as f64;
        for (f, &area) in self.boundary_facets.iter().zip(&self.facet_areas) {
            for &v in &f.vertices {
                share[v] += area / d;
            }
        }
        self.boundary_vertices().into_iter().map(|v| share[v]).collect()
    }

    pub fn cell_centroid(&self, c: usize) -> Vec<f64> {
        let cell = self.cell(c);
        let k = cell.len() as f64;
        (0..self.dim).map(|a| cell.iter().map(|&v| self.vertex(v)[a]).sum::<f64>() / k).collect()
    }

    /// Plain-text dump: `v x [y [z]]` per vertex, `c i0 .. id` per cell.
    /// Floats use the shortest representation that round-trips.
    pub fn dump_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.num_vertices() {
            out.push('v');
            for x in self.vertex(i) {
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
        for cell in self.cells() {
            out.push('c');
            for v in cell {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_dump<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.dump_string().as_bytes())
    }

    fn from_parts(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self, MeshError> {
        let mut mesh = Mesh {
            dim,
            coords,
            cells,
            boundary_facets: Vec::new(),
            cell_volumes: Vec::new(),
            facet_areas: Vec::new(),
            diameter: 0.0,
        };
        mesh.orient_and_measure();
        mesh.extract_boundary()?;
        Ok(mesh)
    }

    fn orient_and_measure(&mut self) {
        let d = self.dim;
        let k = d + 1;
        let fact = factorial(d);
        let ncells = self.cells.len() / k;
        let mut volumes = Vec::with_capacity(ncells);
        let mut diameter = 0.0f64;
        for c in 0..ncells {
            let mut det = self.edge_determinant(&self.cells[c * k..(c + 1) * k]);
            if det < 0.0 {
                self.cells.swap(c * k + d, c * k + d - 1);
                det = -det;
            }
            volumes.push(det / fact);
            let cell = &self.cells[c * k..(c + 1) * k];
            for a in 0..k {
                for b in a + 1..k {
                    let dist = distance(self.vertex(cell[a]), self.vertex(cell[b]));
                    diameter = diameter.max(dist);
                }
            }
        }
        self.cell_volumes = volumes;
        self.diameter = diameter;
    }

    fn edge_determinant(&self, cell: &[usize]) -> f64 {
        let d = self.dim;
        let p0 = self.vertex(cell[0]);
        let jac = nalgebra::DMatrix::from_fn(d, d, |r, c| self.vertex(cell[c + 1])[r] - p0[r]);
        jac.determinant()
    }

    fn extract_boundary(&mut self) -> Result<(), MeshError> {
        let d = self.dim;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for cell in self.cells.chunks_exact(d + 1) {
            for skip in 0..=d {
                counts.entry(face_key(cell, skip)).and_modify(|n| *n += 1).or_insert(1);
            }
        }
        if let Some(&count) = counts.values().find(|&&n| n > 2) {
            return Err(MeshError::NonManifoldFace { count });
        }
        let mut facets = Vec::new();
        for (c, cell) in self.cells.chunks_exact(d + 1).enumerate() {
            for skip in 0..=d {
                if counts[&face_key(cell, skip)] == 1 {
                    let vertices = (0..=d).filter(|&j| j != skip).map(|j| cell[j]).collect();
                    facets.push(BoundaryFacet { vertices, cell: c });
                }
            }
        }
        let fact = factorial(d - 1);
        self.facet_areas = facets.iter().map(|f| self.facet_measure(&f.vertices) / fact).collect();
        self.boundary_facets = facets;
        Ok(())
    }

    /// sqrt(det(E^T E)) for the `d-1` edge vectors of a facet.
    fn facet_measure(&self, vertices: &[usize]) -> f64 {
        let d = self.dim;
        if d == 1 {
            return 1.0;
        }
        let p0 = self.vertex(vertices[0]);
        let edges =
            nalgebra::DMatrix::from_fn(d, d - 1, |r, c| self.vertex(vertices[c + 1])[r] - p0[r]);
        (edges.transpose() * &edges).determinant().sqrt()
    }
}

fn face_key(cell: &[usize], skip: usize) -> Vec<usize> {
    let mut key: Vec<usize> =
        cell.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &v)| v).collect();
    key.sort_unstable();
    key
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Grid index helper for a tensor grid with `n[a] + 1` points per axis,
/// lexicographic with axis 0 fastest.
struct Grid {
    points: Vec<usize>,
}

impl Grid {
    fn index(&self, g: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (a, &ga) in g.iter().enumerate() {
            idx += ga * stride;
            stride *= self.points[a];
        }
        idx
    }
}

/// All multi-indices in `0..n[0] x .. x 0..n[d-1]`, axis 0 fastest.
fn multi_indices(n: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = n.iter().product();
    (0..total)
        .map(|mut flat| {
            n.iter()
                .map(|&na| {
                    let g = flat % na;
                    flat /= na;
                    g
                })
                .collect()
        })
        .collect()
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for a in 0..used.len() {
            if !used[a] {
                used[a] = true;
                prefix.push(a);
                rec(prefix, used, out);
                prefix.pop();
                used[a] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}

/// Kuhn subdivision of the grid cells accepted by `keep`. Returns vertex
/// coordinates of all grid points and the cell connectivity.
fn kuhn_grid(
    extents: &[f64],
    divisions: &[usize],
    keep: impl Fn(&[usize]) -> bool,
) -> (Vec<f64>, Vec<usize>) {
    let d = extents.len();
    let grid = Grid { points: divisions.iter().map(|n| n + 1).collect() };
    let mut coords = Vec::new();
    for g in multi_indices(&grid.points) {
        for a in 0..d {
            coords.push(extents[a] * g[a] as f64 / divisions[a] as f64);
        }
    }
    let perms = permutations(d);
    let mut cells = Vec::new();
    for g in multi_indices(divisions) {
        if !keep(&g) {
            continue;
        }
        for perm in &perms {
            let mut cur = g.clone();
            cells.push(grid.index(&cur));
            for &a in perm {
                cur[a] += 1;
                cells.push(grid.index(&cur));
            }
        }
    }
    (coords, cells)
}

/// Drop vertices not referenced by any cell, preserving relative order.
fn compact(dim: usize, coords: Vec<f64>, mut cells: Vec<usize>) -> (Vec<f64>, Vec<usize>) {
    let nv = coords.len() / dim;
    let mut used = vec![false; nv];
    for &v in &cells {
        used[v] = true;
    }
    let mut remap = vec![usize::MAX; nv];
    let mut kept = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = kept.len() / dim;
            kept.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
    }
    for v in &mut cells {
        *v = remap[*v];
    }
    (kept, cells)
}

/// Kuhn mesh of the box `[0, e_0] x .. x [0, e_{d-1}]`.
pub fn build_box_mesh(extents: &[f64], divisions: &[usize]) -> Result<Mesh, MeshError> {
    let d = extents.len();
    if !(1..=3).contains(&d) {
        return Err(MeshError::UnsupportedDimension(d));
    }
    if divisions.len() != d {
        return Err(MeshError::ShapeMismatch { extents: d, divisions: divisions.len() });
    }
    for (axis, &value) in extents.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(MeshError::BadExtent { axis, value });
        }
    }
    if let Some(axis) = divisions.iter().position(|&n| n == 0) {
        return Err(MeshError::ZeroDivisions { axis });
    }
    let (coords, cells) = kuhn_grid(extents, divisions, |_| true);
    Mesh::from_parts(d, coords, cells)
}

/// Kuhn mesh of `[0,1]^d \ [1/2,1]^d` with `divisions` grid cells per axis.
pub fn build_lshape_mesh(dim: usize, divisions: usize) -> Result<Mesh, MeshError> {
    if !(2..=3).contains(&dim) {
        return Err(MeshError::UnsupportedDimension(dim));
    }
    if divisions < 2 || divisions % 2 != 0 {
        return Err(MeshError::LShapeDivisions(divisions));
    }
    let half = divisions / 2;
    let extents = vec![1.0; dim];
    let divs = vec![divisions; dim];
    let (coords, cells) = kuhn_grid(&extents, &divs, |g| !g.iter().all(|&ga| ga >= half));
    let (coords, cells) = compact(dim, coords, cells);
    Mesh::from_parts(dim, coords, cells)
}
