//! Discrete normals and shape operators.
//!
//! Principal curvatures come from a least-squares height fit over the
//! two-ring of every vertex: offsets to the neighbors are split into tangent
//! coordinates `(u, v)` and a height `w` along the vertex normal, a
//! polynomial graph `w(u, v)` is fitted, and the Weingarten map of that graph
//! is diagonalized. The fit runs twice: the first pass straightens the
//! normal from its fitted gradient, the second extracts curvature in the
//! straightened frame. Cubic/quartic correction terms ride along when the
//! neighborhood is rich enough; without them the omitted even-order terms of
//! the surface alias into the Hessian at `O(h^2)` with a constant too large
//! for the accuracy this crate targets.
//!
//! Heights are measured along the inward normal, so a sphere of radius `r`
//! about the origin reports `kappa = +1/r`.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;

use crate::analytic::CurvatureSummary;

use super::{MeshError, TriMesh, VertexField};

/// Monomial exponents `(i, j)` for `u^i v^j`, grouped by total degree. The
/// first five entries are the gradient and Hessian carriers.
const MONOMIALS: [(i32, i32); 14] = [
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

/// Area-weighted vertex normals following the triangle winding.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vector3<f64>>, MeshError> {
    let mut accum = vec![Vector3::zeros(); mesh.vertex_count()];
    for &[a, b, c] in mesh.triangles() {
        let pa = mesh.positions()[a as usize];
        let pb = mesh.positions()[b as usize];
        let pc = mesh.positions()[c as usize];
        // cross product length is twice the area, so this is area weighting
        let normal = (pb - pa).cross(&(pc - pa));
        accum[a as usize] += normal;
        accum[b as usize] += normal;
        accum[c as usize] += normal;
    }
    accum
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let len = n.norm();
            if len <= 1e-14 {
                Err(MeshError::DegenerateStar(i))
            } else {
                Ok(n / len)
            }
        })
        .collect()
}

fn tangent_basis(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    // pick the coordinate axis least aligned with the normal
    let abs = normal.map(f64::abs);
    let axis = if abs.x <= abs.y && abs.x <= abs.z {
        Vector3::x()
    } else if abs.y <= abs.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t1 = normal.cross(&axis).normalize();
    let t2 = normal.cross(&t1);
    (t1, t2)
}

struct JetFit {
    gradient: (f64, f64),
    hessian: (f64, f64, f64),
}

/// Least-squares polynomial graph over one tangent frame. Tangent offsets
/// are rescaled to unit mean length before solving.
fn jet_fit(
    offsets: &[(f64, f64, f64)],
    columns: usize,
    vertex: usize,
) -> Result<JetFit, MeshError> {
    let scale =
        offsets.iter().map(|(u, v, _)| (u * u + v * v).sqrt()).sum::<f64>() / offsets.len() as f64;
    if !(scale > 0.0) {
        return Err(MeshError::RankDeficientFit { vertex, independent: 0 });
    }
    let mut a = DMatrix::zeros(offsets.len(), columns);
    let mut b = DVector::zeros(offsets.len());
    for (row, &(u, v, w)) in offsets.iter().enumerate() {
        let (us, vs) = (u / scale, v / scale);
        for (col, &(i, j)) in MONOMIALS[..columns].iter().enumerate() {
            a[(row, col)] = us.powi(i) * vs.powi(j);
        }
        b[row] = w / scale;
    }
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_max > 0.0) || sigma_min < 1e-8 * sigma_max {
        let independent = svd.singular_values.iter().filter(|&&s| s >= 1e-8 * sigma_max).count();
        return Err(MeshError::RankDeficientFit { vertex, independent });
    }
    let coeffs =
        svd.solve(&b, 0.0).map_err(|_| MeshError::RankDeficientFit { vertex, independent: 0 })?;
    Ok(JetFit {
        gradient: (coeffs[0], coeffs[1]),
        hessian: (2.0 * coeffs[2] / scale, coeffs[3] / scale, 2.0 * coeffs[4] / scale),
    })
}

fn fit_vertex(
    mesh: &TriMesh,
    normals: &[Vector3<f64>],
    vertex: usize,
) -> Result<(CurvatureSummary, Vector3<f64>), MeshError> {
    let ring = mesh.two_ring(vertex);
    if ring.len() < 5 {
        return Err(MeshError::RankDeficientFit { vertex, independent: ring.len() });
    }
    // quartic terms need 14 coefficients, cubic 9, quadratic 5; structured
    // stencils (grid boundaries) can be degenerate for the higher degrees,
    // so fall back until the system has full rank
    let mut candidates = vec![5usize];
    if ring.len() >= 10 {
        candidates.insert(0, 9);
    }
    if ring.len() >= 15 {
        candidates.insert(0, 14);
    }

    let origin = mesh.positions()[vertex];
    let seed = normals[vertex];
    let mut outcome = Err(MeshError::RankDeficientFit { vertex, independent: 0 });
    'degrees: for columns in candidates {
        let mut normal = seed;
        let mut last_fit = None;
        for _pass in 0..2 {
            let (t1, t2) = tangent_basis(&normal);
            let offsets: Vec<(f64, f64, f64)> = ring
                .iter()
                .map(|&j| {
                    let d = mesh.positions()[j as usize] - origin;
                    (d.dot(&t1), d.dot(&t2), d.dot(&normal))
                })
                .collect();
            match jet_fit(&offsets, columns, vertex) {
                Ok(fit) => {
                    let (ga, gb) = fit.gradient;
                    // the graph normal in this frame is (-a, -b, 1)/sqrt(1+a^2+b^2)
                    normal = (normal - ga * t1 - gb * t2) / (1.0 + ga * ga + gb * gb).sqrt();
                    last_fit = Some(fit);
                }
                Err(err) => {
                    outcome = Err(err);
                    continue 'degrees;
                }
            }
        }
        outcome = Ok((last_fit.expect("two fitting passes ran"), normal));
        break;
    }
    let (fit, normal) = outcome?;

    // Weingarten map of the fitted graph at the origin:
    // I = [[1+a^2, ab], [ab, 1+b^2]], II = Hess(w)/sqrt(1+a^2+b^2)
    let (ca, cb) = fit.gradient;
    let (cc, cd, ce) = fit.hessian;
    let det_i = 1.0 + ca * ca + cb * cb;
    let inv_sqrt = det_i.sqrt().recip();
    let (l, m, nn) = (cc * inv_sqrt, cd * inv_sqrt, ce * inv_sqrt);
    let e1 = 1.0 + ca * ca;
    let f1 = ca * cb;
    let g1 = 1.0 + cb * cb;
    // kappa^2 det(I) - kappa (E n + G l - 2 F m) + det(II) = 0
    let tr = e1 * nn + g1 * l - 2.0 * f1 * m;
    let det_ii = l * nn - m * m;
    let disc = (tr * tr - 4.0 * det_i * det_ii).max(0.0).sqrt();
    let k1 = (tr + disc) / (2.0 * det_i);
    let k2 = (tr - disc) / (2.0 * det_i);
    Ok((CurvatureSummary::from_kappas(vec![k1, k2]), normal))
}

/// Per-vertex principal curvatures via the two-ring fit, seeded by the given
/// normals.
pub fn shape_operator(
    mesh: &TriMesh,
    normals: &[Vector3<f64>],
) -> Result<Vec<CurvatureSummary>, MeshError> {
    Ok(curvature_with_normals(mesh, normals)?.1)
}

/// Fit-refined unit normals together with the curvature summaries. The
/// refined normals realize the surface normal to higher order than the
/// area-weighted seed and drive the flow and residual evaluations.
pub fn curvature_pipeline(
    mesh: &TriMesh,
) -> Result<(Vec<Vector3<f64>>, Vec<CurvatureSummary>), MeshError> {
    let seed = vertex_normals(mesh)?;
    curvature_with_normals(mesh, &seed)
}

fn curvature_with_normals(
    mesh: &TriMesh,
    normals: &[Vector3<f64>],
) -> Result<(Vec<Vector3<f64>>, Vec<CurvatureSummary>), MeshError> {
    if normals.len() != mesh.vertex_count() {
        return Err(MeshError::FieldLength { got: normals.len(), expected: mesh.vertex_count() });
    }
    let fits: Vec<(CurvatureSummary, Vector3<f64>)> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| fit_vertex(mesh, normals, v))
        .collect::<Result<_, _>>()?;
    let mut refined = Vec::with_capacity(fits.len());
    let mut summaries = Vec::with_capacity(fits.len());
    for (summary, normal) in fits {
        refined.push(normal);
        summaries.push(summary);
    }
    Ok((refined, summaries))
}

/// Cotangent mean curvature, the projection of the discrete Laplacian of the
/// position field onto the vertex normal. Kept as an independent cross-check
/// of the fitted `H`.
pub fn cotan_mean_curvature(mesh: &TriMesh, normals: &[Vector3<f64>]) -> VertexField {
    let nv = mesh.vertex_count();
    let mut laplace = vec![Vector3::zeros(); nv];
    for &[a, b, c] in mesh.triangles() {
        let pa = mesh.positions()[a as usize];
        let pb = mesh.positions()[b as usize];
        let pc = mesh.positions()[c as usize];
        let mut add = |i: u32, j: u32, opp_a: Vector3<f64>, opp_b: Vector3<f64>, opp_c: Vector3<f64>| {
            // half-cotangent of the angle at the vertex opposite edge (i, j)
            let u = opp_b - opp_a;
            let v = opp_c - opp_a;
            let cross = u.cross(&v).norm();
            if cross > 1e-300 {
                let w = 0.5 * u.dot(&v) / cross;
                let d = mesh.positions()[j as usize] - mesh.positions()[i as usize];
                laplace[i as usize] += w * d;
                laplace[j as usize] -= w * d;
            }
        };
        add(b, c, pa, pb, pc);
        add(c, a, pb, pc, pa);
        add(a, b, pc, pa, pb);
    }
    let measure = super::gaussian_measure(mesh);
    let values = (0..nv)
        .map(|i| (laplace[i] / measure.lumped_area[i]).dot(&normals[i]))
        .collect();
    VertexField::new(values)
}

/// Pointwise residual `<X_i, N_i> + H_i - lambda` from precomputed normals
/// and curvature summaries.
pub fn lambda_residual_from(
    mesh: &TriMesh,
    normals: &[Vector3<f64>],
    summaries: &[CurvatureSummary],
    lambda: f64,
) -> VertexField {
    let values = (0..mesh.vertex_count())
        .map(|i| mesh.positions()[i].dot(&normals[i]) + summaries[i].mean - lambda)
        .collect();
    VertexField::new(values)
}

/// Pointwise residual of `<X, N> + H = lambda`, computing normals and the
/// shape operator on the way.
pub fn lambda_residual(mesh: &TriMesh, lambda: f64) -> Result<VertexField, MeshError> {
    let (normals, summaries) = curvature_pipeline(mesh)?;
    Ok(lambda_residual_from(mesh, &normals, &summaries, lambda))
}
