//! Oriented triangle surfaces in `R^3` with Gaussian-weighted vertex
//! measures.
//!
//! Meshes are validated at construction: indices in range, consistent
//! winding (each directed edge used at most once), no isolated vertices, and
//! no triangle degenerate relative to the mean triangle area. Reductions over
//! vertices, edges, and triangles always run in fixed index order so results
//! are bit-identical run to run.

mod curvature;
mod generate;
mod io;

pub use curvature::{
    cotan_mean_curvature, curvature_pipeline, lambda_residual, lambda_residual_from,
    shape_operator, vertex_normals,
};
pub use generate::{generate, MeshSpec};
pub use io::{read_obj, read_off, write_obj, write_sidecar};

use nalgebra::Vector3;
use thiserror::Error;

/// Relative area threshold below which a triangle counts as degenerate.
const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least 3 vertices and 1 triangle, got {vertices} / {triangles}")]
    TooSmall { vertices: usize, triangles: usize },
    #[error("triangle {0} references vertex {1} out of bounds ({2} vertices)")]
    IndexOutOfBounds(usize, u32, usize),
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("non-finite vertex position at index {0}")]
    NonFinitePosition(usize),
    #[error("vertex {0} belongs to no triangle")]
    IsolatedVertex(usize),
    #[error("directed edge {0}->{1} appears twice; orientation is inconsistent")]
    OrientationViolation(u32, u32),
    #[error("triangle {index} has area {area:e}, below {threshold:e} of the mean")]
    DegenerateTriangle { index: usize, area: f64, threshold: f64 },
    #[error("mesh is fully degenerate (total area is zero)")]
    ZeroArea,
    #[error("vertex {0} has a degenerate star (normals cancel)")]
    DegenerateStar(usize),
    #[error("curvature fit at vertex {vertex} is rank deficient ({independent} independent neighbors)")]
    RankDeficientFit { vertex: usize, independent: usize },
    #[error("operation requires a closed mesh, but the mesh has a boundary")]
    OpenMesh,
    #[error("field length {got} does not match vertex count {expected}")]
    FieldLength { got: usize, expected: usize },
    #[error("position count {got} does not match vertex count {expected}")]
    PositionCount { got: usize, expected: usize },
    #[error("perturbation amplitude {amplitude} must stay below 0.3 r = {limit}")]
    AmplitudeTooLarge { amplitude: f64, limit: f64 },
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An oriented triangle surface with precomputed adjacency.
#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    vertex_triangles: Vec<Vec<u32>>,
    neighbors: Vec<Vec<u32>>,
    edges: Vec<[u32; 2]>,
    boundary_vertex: Vec<bool>,
    closed: bool,
    euler_characteristic: i64,
}

impl TriMesh {
    pub fn new(positions: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let nv = positions.len();
        if nv < 3 || triangles.is_empty() {
            return Err(MeshError::TooSmall { vertices: nv, triangles: triangles.len() });
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFinitePosition(i));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v as usize >= nv {
                    return Err(MeshError::IndexOutOfBounds(t, v, nv));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }

        // Orientation: every directed edge at most once. Undirected edges
        // seen once are boundary, twice (in opposite directions) interior.
        let mut directed = std::collections::HashSet::with_capacity(triangles.len() * 3);
        let mut undirected_count: std::collections::HashMap<[u32; 2], u8> =
            std::collections::HashMap::with_capacity(triangles.len() * 3 / 2);
        for tri in &triangles {
            for e in 0..3 {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                if !directed.insert((a, b)) {
                    return Err(MeshError::OrientationViolation(a, b));
                }
                let key = if a < b { [a, b] } else { [b, a] };
                *undirected_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut boundary_vertex = vec![false; nv];
        let mut closed = true;
        let mut edges: Vec<[u32; 2]> = undirected_count.keys().copied().collect();
        edges.sort_unstable();
        for (edge, count) in &undirected_count {
            if *count == 1 {
                closed = false;
                boundary_vertex[edge[0] as usize] = true;
                boundary_vertex[edge[1] as usize] = true;
            }
        }

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v as usize].push(t as u32);
            }
        }
        if let Some(idx) = vertex_triangles.iter().position(|ts| ts.is_empty()) {
            return Err(MeshError::IsolatedVertex(idx));
        }

        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for &[a, b] in &edges {
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let euler_characteristic = nv as i64 - edges.len() as i64 + triangles.len() as i64;

        let mesh = Self {
            positions,
            triangles,
            vertex_triangles,
            neighbors,
            edges,
            boundary_vertex,
            closed,
            euler_characteristic,
        };
        mesh.check_triangle_areas()?;
        Ok(mesh)
    }

    fn check_triangle_areas(&self) -> Result<(), MeshError> {
        let areas: Vec<f64> = (0..self.triangles.len()).map(|t| self.triangle_area(t)).collect();
        let total: f64 = areas.iter().sum();
        if !(total > 0.0) {
            return Err(MeshError::ZeroArea);
        }
        let mean = total / areas.len() as f64;
        let threshold = DEGENERATE_AREA_FRACTION * mean;
        for (index, &area) in areas.iter().enumerate() {
            if area < threshold {
                return Err(MeshError::DegenerateTriangle { index, area, threshold });
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Undirected edges, lexicographically sorted `[a, b]` with `a < b`.
    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// One-ring vertex neighbors, sorted.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[v]
    }

    /// Triangles incident to a vertex.
    pub fn vertex_triangles(&self, v: usize) -> &[u32] {
        &self.vertex_triangles[v]
    }

    /// Vertices within graph distance two, excluding `v` itself, sorted.
    pub fn two_ring(&self, v: usize) -> Vec<u32> {
        let mut ring: Vec<u32> = self.neighbors[v].to_vec();
        for &u in &self.neighbors[v] {
            ring.extend_from_slice(&self.neighbors[u as usize]);
        }
        ring.sort_unstable();
        ring.dedup();
        ring.retain(|&u| u as usize != v);
        ring
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler_characteristic
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.positions[a as usize];
        let pb = self.positions[b as usize];
        let pc = self.positions[c as usize];
        0.5 * (pb - pa).cross(&(pc - pa)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| (self.positions[a as usize] - self.positions[b as usize]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Replaces vertex positions in place, keeping connectivity. Only finiteness
    /// and the count are re-checked; callers evolving a mesh are responsible
    /// for keeping it non-degenerate.
    pub fn set_positions(&mut self, positions: Vec<Vector3<f64>>) -> Result<(), MeshError> {
        if positions.len() != self.positions.len() {
            return Err(MeshError::PositionCount { got: positions.len(), expected: self.positions.len() });
        }
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFinitePosition(i));
            }
        }
        self.positions = positions;
        Ok(())
    }
}

/// A scalar field sampled at mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    pub values: Vec<f64>,
}

impl VertexField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude over non-boundary vertices.
    pub fn max_abs_interior(&self, mesh: &TriMesh) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !mesh.is_boundary_vertex(*i))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for VertexField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Per-vertex lumped area and Gaussian weight `exp(-|X|^2/2) a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    pub lumped_area: Vec<f64>,
    pub gauss_weight: Vec<f64>,
}

impl WeightedMeasure {
    pub fn total_weight(&self) -> f64 {
        self.gauss_weight.iter().sum()
    }

    pub fn total_area(&self) -> f64 {
        self.lumped_area.iter().sum()
    }
}

/// Lumped (barycentric-third) vertex areas and Gaussian point weights.
/// The lumped split keeps every vertex area positive regardless of triangle
/// shape, and the weight sum approximates the Gaussian-weighted area.
pub fn gaussian_measure(mesh: &TriMesh) -> WeightedMeasure {
    let nv = mesh.vertex_count();
    let mut lumped_area = vec![0.0; nv];
    for t in 0..mesh.triangle_count() {
        let third = mesh.triangle_area(t) / 3.0;
        for &v in &mesh.triangles()[t] {
            lumped_area[v as usize] += third;
        }
    }
    let gauss_weight = mesh
        .positions()
        .iter()
        .zip(&lumped_area)
        .map(|(p, a)| (-p.norm_squared() / 2.0).exp() * a)
        .collect();
    WeightedMeasure { lumped_area, gauss_weight }
}

/// `sqrt(sum_i f_i^2 w_i)` against a vertex measure.
pub fn weighted_l2_norm(field: &VertexField, weights: &[f64]) -> f64 {
    field
        .values
        .iter()
        .zip(weights)
        .map(|(f, w)| f * f * w)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
pub(crate) fn flat_patch(n: usize, spacing: f64) -> TriMesh {
    // (n+1) x (n+1) grid in the z = 0 plane, wound so normals point to -z
    let mut positions = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            positions.push(Vector3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let idx = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i, j + 1), idx(i + 1, j)]);
            triangles.push([idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)]);
        }
    }
    TriMesh::new(positions, triangles).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{generate, MeshSpec};

    fn unit_sphere(level: u32) -> TriMesh {
        generate(&MeshSpec::Sphere { r: 1.0, level }).unwrap()
    }

    #[test]
    fn rejects_flipped_triangle() {
        let mut positions = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
        ];
        positions.iter_mut().for_each(|p| p.z = 0.0);
        // second triangle flipped: directed edge (1,2) repeats
        let triangles = vec![[0, 1, 2], [1, 2, 3]];
        assert!(matches!(
            TriMesh::new(positions, triangles),
            Err(MeshError::OrientationViolation(1, 2))
        ));
    }

    #[test]
    fn rejects_degenerate_and_invalid_input() {
        let positions = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            TriMesh::new(positions.clone(), vec![[0, 1, 5]]),
            Err(MeshError::IndexOutOfBounds(0, 5, 3))
        ));
        assert!(matches!(
            TriMesh::new(positions.clone(), vec![[0, 1, 1]]),
            Err(MeshError::RepeatedVertex(0))
        ));
        // scaling everything to the origin produces zero total area
        let zeros = vec![Vector3::zeros(); 3];
        assert!(matches!(TriMesh::new(zeros, vec![[0, 1, 2]]), Err(MeshError::RepeatedVertex(_)) | Err(MeshError::ZeroArea)));
    }

    #[test]
    fn zero_scaled_mesh_is_rejected() {
        let sphere = unit_sphere(1);
        let zeroed: Vec<_> = sphere.positions().iter().map(|p| p * 0.0).collect();
        assert!(matches!(
            TriMesh::new(zeroed, sphere.triangles().to_vec()),
            Err(MeshError::ZeroArea)
        ));
    }

    #[test]
    fn sphere_topology() {
        let mesh = unit_sphere(3);
        assert_eq!(mesh.vertex_count(), 642);
        assert_eq!(mesh.triangle_count(), 1280);
        assert_eq!(mesh.euler_characteristic(), 2);
        assert!(mesh.is_closed());
    }

    #[test]
    fn lumped_areas_sum_to_total_area() {
        let mesh = unit_sphere(2);
        let measure = gaussian_measure(&mesh);
        let total = mesh.total_area();
        assert!(measure.lumped_area.iter().all(|&a| a > 0.0));
        assert!((measure.total_area() - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn gaussian_weight_converges_to_model_area() {
        use crate::analytic::CanonicalSurface;
        let expected = CanonicalSurface::sphere(2, 1.0).unwrap().weighted_functionals().area;
        let mesh = unit_sphere(4);
        let got = gaussian_measure(&mesh).total_weight();
        assert!(
            (got - expected).abs() <= 5e-3 * expected,
            "weight {got} vs model {expected}"
        );
    }

    #[test]
    fn gaussian_weight_refines_at_second_order() {
        use crate::analytic::CanonicalSurface;
        let expected = CanonicalSurface::sphere(2, 1.0).unwrap().weighted_functionals().area;
        let err = |level| {
            let mesh = unit_sphere(level);
            (gaussian_measure(&mesh).total_weight() - expected).abs()
        };
        let (e2, e3, e4) = (err(2), err(3), err(4));
        let order23 = (e2 / e3).log2();
        let order34 = (e3 / e4).log2();
        assert!(order23 >= 1.8, "observed order {order23}");
        assert!(order34 >= 1.8, "observed order {order34}");
    }

    #[test]
    fn rotations_preserve_weight_translations_do_not() {
        let mesh = unit_sphere(3);
        let base = gaussian_measure(&mesh).total_weight();

        let axis = nalgebra::Unit::new_normalize(Vector3::new(1.0, 2.0, 3.0));
        let rot = nalgebra::Rotation3::from_axis_angle(&axis, 0.7);
        let rotated: Vec<_> = mesh.positions().iter().map(|p| rot * p).collect();
        let rotated_mesh = TriMesh::new(rotated, mesh.triangles().to_vec()).unwrap();
        let w_rot = gaussian_measure(&rotated_mesh).total_weight();
        assert!((w_rot - base).abs() <= 1e-10 * base);

        let shift = Vector3::new(0.5, 0.0, 0.0);
        let translated: Vec<_> = mesh.positions().iter().map(|p| p + shift).collect();
        let translated_mesh = TriMesh::new(translated, mesh.triangles().to_vec()).unwrap();
        let w_shift = gaussian_measure(&translated_mesh).total_weight();
        assert!((w_shift - base).abs() > 1e-3 * base, "translation must change the weight");
    }

    #[test]
    fn two_ring_excludes_center_and_contains_ring_one() {
        let mesh = unit_sphere(2);
        let ring = mesh.two_ring(0);
        assert!(!ring.contains(&0));
        for &nb in mesh.neighbors(0) {
            assert!(ring.contains(&nb));
        }
        assert!(ring.len() >= 5);
    }
}
