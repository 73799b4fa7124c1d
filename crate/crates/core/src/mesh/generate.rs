//! Test-surface factory: subdivided icospheres, cylinder segments,
//! ellipsoids, and seeded radial perturbations.
//!
//! All generators wind triangles so that vertex normals point toward the
//! enclosed region (a sphere about the origin gets `N = -X/r`), matching the
//! sign convention of the curvature pipeline.

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh};

/// Declarative mesh description, also the configuration-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    Sphere { r: f64, level: u32 },
    CylinderSegment { r: f64, half_length: f64, res: u32 },
    Ellipsoid { a: f64, b: f64, c: f64, level: u32 },
    PerturbedSphere { r: f64, amplitude: f64, seed: u64, level: u32 },
    Obj { path: PathBuf },
    Off { path: PathBuf },
}

pub fn generate(spec: &MeshSpec) -> Result<TriMesh, MeshError> {
    match *spec {
        MeshSpec::Sphere { r, level } => sphere(r, level),
        MeshSpec::CylinderSegment { r, half_length, res } => cylinder_segment(r, half_length, res),
        MeshSpec::Ellipsoid { a, b, c, level } => ellipsoid(a, b, c, level),
        MeshSpec::PerturbedSphere { r, amplitude, seed, level } => {
            perturbed_sphere(r, amplitude, seed, level)
        }
        MeshSpec::Obj { ref path } => super::io::read_obj(path),
        MeshSpec::Off { ref path } => super::io::read_off(path),
    }
}

fn require_positive(value: f64, what: &str) -> Result<(), MeshError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(MeshError::InvalidParameter(format!("{what} must be positive, got {value}")))
    }
}

/// Unit icosphere: icosahedron subdivided `level` times, midpoints projected
/// back to the sphere. `10 * 4^level + 2` vertices, wound inward.
fn unit_icosphere(level: u32) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut positions: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();

    // outward-wound icosahedron faces; reversed below for the inward convention
    let outward: [[u32; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut triangles: Vec<[u32; 3]> = outward.iter().map(|&[a, b, c]| [a, c, b]).collect();

    for _ in 0..level {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let mut mid = |p: u32, q: u32, positions: &mut Vec<Vector3<f64>>| -> u32 {
                let key = if p < q { (p, q) } else { (q, p) };
                *midpoint.entry(key).or_insert_with(|| {
                    let m = (positions[p as usize] + positions[q as usize]).normalize();
                    positions.push(m);
                    (positions.len() - 1) as u32
                })
            };
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    (positions, triangles)
}

fn sphere(r: f64, level: u32) -> Result<TriMesh, MeshError> {
    require_positive(r, "sphere radius")?;
    let (unit, triangles) = unit_icosphere(level);
    let positions = unit.iter().map(|p| p * r).collect();
    TriMesh::new(positions, triangles)
}

fn ellipsoid(a: f64, b: f64, c: f64, level: u32) -> Result<TriMesh, MeshError> {
    require_positive(a, "ellipsoid semi-axis a")?;
    require_positive(b, "ellipsoid semi-axis b")?;
    require_positive(c, "ellipsoid semi-axis c")?;
    let (unit, triangles) = unit_icosphere(level);
    let positions = unit.iter().map(|p| Vector3::new(a * p.x, b * p.y, c * p.z)).collect();
    TriMesh::new(positions, triangles)
}

fn perturbed_sphere(r: f64, amplitude: f64, seed: u64, level: u32) -> Result<TriMesh, MeshError> {
    require_positive(r, "sphere radius")?;
    if !(amplitude >= 0.0) {
        return Err(MeshError::InvalidParameter(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    if amplitude >= 0.3 * r {
        return Err(MeshError::AmplitudeTooLarge { amplitude, limit: 0.3 * r });
    }
    let (unit, triangles) = unit_icosphere(level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = unit
        .iter()
        .map(|p| {
            let offset: f64 = rng.gen_range(-1.0..1.0);
            p * (r * (1.0 + amplitude * offset))
        })
        .collect();
    TriMesh::new(positions, triangles)
}

/// Open cylinder of radius `r` around the z axis, truncated at
/// `|z| = half_length`, with `res` vertices per ring. Axial ring count is
/// chosen to keep triangles near-isotropic.
fn cylinder_segment(r: f64, half_length: f64, res: u32) -> Result<TriMesh, MeshError> {
    require_positive(r, "cylinder radius")?;
    require_positive(half_length, "cylinder half length")?;
    if res < 8 {
        return Err(MeshError::InvalidParameter(format!("cylinder resolution must be >= 8, got {res}")));
    }
    let angular_step = std::f64::consts::TAU * r / f64::from(res);
    let rings = ((2.0 * half_length / angular_step).ceil() as usize).max(1);
    let mut positions = Vec::with_capacity((rings + 1) * res as usize);
    for j in 0..=rings {
        let z = -half_length + 2.0 * half_length * j as f64 / rings as f64;
        for i in 0..res {
            let theta = std::f64::consts::TAU * f64::from(i) / f64::from(res);
            positions.push(Vector3::new(r * theta.cos(), r * theta.sin(), z));
        }
    }
    let idx = |i: u32, j: usize| j as u32 * res + (i % res);
    let mut triangles = Vec::with_capacity(2 * rings * res as usize);
    for j in 0..rings {
        for i in 0..res {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            // wound so normals point toward the axis
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    TriMesh::new(positions, triangles)
}
