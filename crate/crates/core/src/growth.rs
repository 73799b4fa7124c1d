//! Euclidean-ball area measurement and polynomial-growth exponent fits.
//!
//! The area of a surface inside the ball `B_r(0)` is computed in closed form
//! for the model families and by exact per-triangle clipping on meshes: each
//! triangle's plane meets the ball in a disk, and the triangle-disk
//! intersection area is accumulated via a Green's-theorem walk along the
//! triangle edges (chord pieces contribute cross products, outside pieces
//! circular sectors).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{unit_ball_volume, unit_sphere_area, CanonicalSurface, SurfaceKind};
use crate::mesh::TriMesh;

#[derive(Debug, Error, PartialEq)]
pub enum GrowthError {
    #[error("exponent fits need at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample radii must be >= 1 and strictly increasing (sample {0})")]
    BadRadii(usize),
    #[error("sample {0} has nonpositive area {1}")]
    NonPositiveArea(usize, f64),
    #[error("areas must be nondecreasing in r (sample {0})")]
    DecreasingArea(usize),
}

/// One `(r, area)` measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub r: f64,
    pub area: f64,
}

/// A fitted polynomial-growth law `area ~ C r^d` together with the
/// predicted exponent bound of the weighted-surface theory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub samples: Vec<GrowthSample>,
    #[serde(rename = "C")]
    pub c: f64,
    pub d: f64,
    pub bound_exponent: f64,
    pub beta: f64,
}

/// Area of the model surface inside the origin ball of radius `r`.
///
/// A sphere of radius `r0` about the origin is either wholly inside or
/// wholly outside; a cylinder `S^k(r0) x R^(n-k)` meets the ball in a slab
/// `|z| <= sqrt(r^2 - r0^2)`; a hyperplane through the origin meets it in an
/// `n`-ball.
pub fn ball_area_analytic(surface: &CanonicalSurface, r: f64) -> f64 {
    let r0 = surface.radius();
    match surface.kind() {
        SurfaceKind::Sphere => {
            if r >= r0 {
                unit_sphere_area(surface.dim()) * r0.powi(surface.dim() as i32)
            } else {
                0.0
            }
        }
        SurfaceKind::Cylinder => {
            if r > r0 {
                let k = surface.sphere_factor();
                let flat = surface.dim() - k;
                let slab = (r * r - r0 * r0).sqrt();
                unit_sphere_area(k) * r0.powi(k as i32) * unit_ball_volume(flat) * slab.powi(flat as i32)
            } else {
                0.0
            }
        }
        SurfaceKind::Plane => unit_ball_volume(surface.dim()) * r.powi(surface.dim() as i32),
    }
}

/// Signed area contribution of one directed polygon edge against a disk of
/// radius `rho` centered at the 2D origin: chords contribute triangle cross
/// products, stretches outside the disk contribute circular sectors.
fn edge_term(a: [f64; 2], b: [f64; 2], rho: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    if dd == 0.0 {
        return 0.0;
    }
    // |a + t d|^2 = rho^2
    let ad = a[0] * d[0] + a[1] * d[1];
    let aa = a[0] * a[0] + a[1] * a[1];
    let disc = ad * ad - dd * (aa - rho * rho);
    let mut cuts = vec![0.0, 1.0];
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-ad - sq) / dd, (-ad + sq) / dd] {
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let point = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];

    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        if t1 - t0 <= 1e-15 {
            continue;
        }
        let p0 = point(t0);
        let p1 = point(t1);
        let mid = point(0.5 * (t0 + t1));
        let inside = mid[0] * mid[0] + mid[1] * mid[1] <= rho * rho;
        if inside {
            total += 0.5 * (p0[0] * p1[1] - p0[1] * p1[0]);
        } else {
            // a segment subtends less than pi from any exterior center,
            // so atan2 of the swept angle is safe
            let angle = (p0[0] * p1[1] - p0[1] * p1[0]).atan2(p0[0] * p1[0] + p0[1] * p1[1]);
            total += 0.5 * rho * rho * angle;
        }
    }
    total
}

/// Area of the intersection of a 2D triangle with the disk of radius `rho`
/// about the origin.
fn triangle_disk_area(tri: [[f64; 2]; 3], rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let signed = edge_term(tri[0], tri[1], rho)
        + edge_term(tri[1], tri[2], rho)
        + edge_term(tri[2], tri[0], rho);
    signed.abs()
}

/// Mesh area inside the origin ball of radius `r`, clipping every triangle
/// exactly against the sphere `|X| = r` inside its own plane.
pub fn ball_area_mesh(mesh: &TriMesh, r: f64) -> f64 {
    use rayon::prelude::*;
    if r <= 0.0 {
        return 0.0;
    }
    let areas: Vec<f64> = (0..mesh.triangle_count())
        .into_par_iter()
        .map(|t| {
            let [ia, ib, ic] = mesh.triangles()[t];
            let pa = mesh.positions()[ia as usize];
            let pb = mesh.positions()[ib as usize];
            let pc = mesh.positions()[ic as usize];
            let normal = (pb - pa).cross(&(pc - pa));
            let norm = normal.norm();
            if norm <= 1e-300 {
                return 0.0;
            }
            let unit = normal / norm;
            // the plane sits at this distance from the origin; the ball cuts
            // it in a disk of radius sqrt(r^2 - dist^2)
            let dist = pa.dot(&unit);
            let rho_sq = r * r - dist * dist;
            if rho_sq <= 0.0 {
                return 0.0;
            }
            let center = dist * unit;
            let abs = unit.map(f64::abs);
            let seed = if abs.x <= abs.y && abs.x <= abs.z {
                nalgebra::Vector3::x()
            } else if abs.y <= abs.z {
                nalgebra::Vector3::y()
            } else {
                nalgebra::Vector3::z()
            };
            let e1 = unit.cross(&seed).normalize();
            let e2 = unit.cross(&e1);
            let flatten = |p: nalgebra::Vector3<f64>| {
                let d = p - center;
                [d.dot(&e1), d.dot(&e2)]
            };
            triangle_disk_area([flatten(pa), flatten(pb), flatten(pc)], rho_sq.sqrt())
        })
        .collect();
    areas.iter().sum()
}

/// Least-squares fit of `log area = log C + d log r`. Radii must be `>= 1`
/// and strictly increasing, areas positive and nondecreasing.
pub fn fit_exponent(samples: &[GrowthSample]) -> Result<(f64, f64), GrowthError> {
    if samples.len() < 4 {
        return Err(GrowthError::TooFewSamples(samples.len()));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.r < 1.0 || (i > 0 && s.r <= samples[i - 1].r) {
            return Err(GrowthError::BadRadii(i));
        }
        if !(s.area > 0.0) {
            return Err(GrowthError::NonPositiveArea(i, s.area));
        }
        if i > 0 && s.area < samples[i - 1].area * (1.0 - 1e-12) {
            return Err(GrowthError::DecreasingArea(i));
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.area.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    let d = sxy / sxx;
    let c = (y_mean - d * x_mean).exp();
    Ok((c, d))
}

/// `beta = (lambda - H)^2 / 4` for a constant-`H` surface.
pub fn beta_const(lambda: f64, mean: f64) -> f64 {
    (lambda - mean) * (lambda - mean) / 4.0
}

/// Growth-bound exponent `n + lambda^2/2 - 2 beta - H^2/2` for a surface of
/// constant mean curvature. Cancels to `n - k` on cylinders, vanishes on
/// spheres, and equals `n` on hyperplanes.
pub fn bound_exponent(n: u32, lambda: f64, mean: f64) -> f64 {
    f64::from(n) + lambda * lambda / 2.0 - 2.0 * beta_const(lambda, mean) - mean * mean / 2.0
}

/// Assembles the full fit record for a model surface.
pub fn growth_fit(surface: &CanonicalSurface, samples: Vec<GrowthSample>) -> Result<GrowthFit, GrowthError> {
    let (c, d) = fit_exponent(&samples)?;
    let lambda = surface.lambda();
    let mean = surface.curvature_summary().mean;
    Ok(GrowthFit {
        samples,
        c,
        d,
        bound_exponent: bound_exponent(surface.dim(), lambda, mean),
        beta: beta_const(lambda, mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, MeshSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn analytic_areas_of_models() {
        let cyl = CanonicalSurface::cylinder(2, 1, 1.0).unwrap();
        // slab half-length sqrt(2 - 1) = 1
        assert!((ball_area_analytic(&cyl, 2.0f64.sqrt()) - 4.0 * PI).abs() <= 1e-12);
        assert_eq!(ball_area_analytic(&cyl, 0.5), 0.0);

        let sphere = CanonicalSurface::sphere(2, 1.0).unwrap();
        assert!((ball_area_analytic(&sphere, 2.0) - 4.0 * PI).abs() <= 1e-12);
        assert!((ball_area_analytic(&sphere, 1.0) - 4.0 * PI).abs() <= 1e-12);
        assert_eq!(ball_area_analytic(&sphere, 0.99), 0.0);

        let plane = CanonicalSurface::plane(2).unwrap();
        assert!((ball_area_analytic(&plane, 1.0) - PI).abs() <= 1e-12);
    }

    #[test]
    fn triangle_disk_area_against_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..40 {
            let tri = [
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            ];
            let rho = rng.gen_range(0.2..2.5);
            let exact = triangle_disk_area(tri, rho);

            // rejection sampling inside the triangle's bounding box
            let (min_x, max_x) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[0]), hi.max(p[0]))
            });
            let (min_y, max_y) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[1]), hi.max(p[1]))
            });
            let inside_triangle = |p: [f64; 2]| {
                let sign = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
                    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                };
                let d1 = sign(tri[0], tri[1], p);
                let d2 = sign(tri[1], tri[2], p);
                let d3 = sign(tri[2], tri[0], p);
                let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
                let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
                !(has_neg && has_pos)
            };
            let trials = 60_000;
            let mut hits = 0usize;
            for _ in 0..trials {
                let p = [rng.gen_range(min_x..max_x), rng.gen_range(min_y..max_y)];
                if inside_triangle(p) && p[0] * p[0] + p[1] * p[1] <= rho * rho {
                    hits += 1;
                }
            }
            let box_area = (max_x - min_x) * (max_y - min_y);
            let estimate = hits as f64 / trials as f64 * box_area;
            let sigma = box_area * (0.25f64 / trials as f64).sqrt();
            assert!(
                (exact - estimate).abs() <= 5.0 * sigma + 1e-3,
                "case {case}: exact {exact} vs monte carlo {estimate} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn triangle_disk_limits() {
        // disk swallows triangle
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!((triangle_disk_area(tri, 10.0) - 0.5).abs() <= 1e-12);
        // triangle swallows disk
        let big = [[-10.0, -10.0], [10.0, -10.0], [0.0, 15.0]];
        assert!((triangle_disk_area(big, 1.0) - PI).abs() <= 1e-9);
        // disjoint
        let far = [[5.0, 5.0], [6.0, 5.0], [5.0, 6.0]];
        assert_eq!(triangle_disk_area(far, 1.0), 0.0);
    }

    #[test]
    fn mesh_clipping_matches_analytic_cylinder() {
        let mesh = generate(&MeshSpec::CylinderSegment { r: 1.0, half_length: 4.0, res: 128 }).unwrap();
        let cyl = CanonicalSurface::cylinder(2, 1, 1.0).unwrap();
        let r = 2.0f64.sqrt();
        let exact = ball_area_analytic(&cyl, r);
        let got = ball_area_mesh(&mesh, r);
        assert!((got - exact).abs() <= 0.01 * exact, "clipped {got} vs {exact}");
    }

    #[test]
    fn mesh_clipping_saturates_and_vanishes() {
        let mesh = generate(&MeshSpec::Sphere { r: 1.0, level: 3 }).unwrap();
        let total = mesh.total_area();
        assert!((ball_area_mesh(&mesh, 100.0) - total).abs() <= 1e-10 * total);
        assert_eq!(ball_area_mesh(&mesh, 0.5), 0.0);
    }

    #[test]
    fn fit_recovers_cylinder_slope() {
        let cyl = CanonicalSurface::cylinder(2, 1, 1.0).unwrap();
        let samples: Vec<GrowthSample> = [2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&r| GrowthSample { r, area: ball_area_analytic(&cyl, r) })
            .collect();
        let (_, d) = fit_exponent(&samples).unwrap();
        assert!((d - 1.0).abs() <= 0.05, "fitted d = {d}");
    }

    #[test]
    fn fit_on_constant_sphere_series_is_flat() {
        let sphere = CanonicalSurface::sphere(2, 1.0).unwrap();
        let samples: Vec<GrowthSample> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&r| GrowthSample { r, area: ball_area_analytic(&sphere, r) })
            .collect();
        let (c, d) = fit_exponent(&samples).unwrap();
        assert!(d.abs() <= 1e-10, "fitted d = {d:e}");
        assert!((c - 4.0 * PI).abs() <= 1e-9);
    }

    #[test]
    fn fit_on_plane_recovers_dimension() {
        for n in 2..=4u32 {
            let plane = CanonicalSurface::plane(n).unwrap();
            let samples: Vec<GrowthSample> = [1.0, 2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|&r| GrowthSample { r, area: ball_area_analytic(&plane, r) })
                .collect();
            let (_, d) = fit_exponent(&samples).unwrap();
            assert!((d - f64::from(n)).abs() <= 1e-12, "fitted d = {d} for n = {n}");
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        let good = |r: f64| GrowthSample { r, area: r };
        assert_eq!(
            fit_exponent(&[good(1.0), good(2.0), good(3.0)]),
            Err(GrowthError::TooFewSamples(3))
        );
        assert_eq!(
            fit_exponent(&[good(0.5), good(2.0), good(3.0), good(4.0)]),
            Err(GrowthError::BadRadii(0))
        );
        assert_eq!(
            fit_exponent(&[good(1.0), GrowthSample { r: 2.0, area: -1.0 }, good(3.0), good(4.0)]),
            Err(GrowthError::NonPositiveArea(1, -1.0))
        );
    }

    #[test]
    fn bound_exponent_models() {
        // cylinder: n - k by cancellation
        let cyl = CanonicalSurface::cylinder(2, 1, 1.0).unwrap();
        assert_eq!(bound_exponent(2, cyl.lambda(), cyl.curvature_summary().mean), 1.0);
        for n in 2..=6u32 {
            for k in 1..n {
                for &r in &[0.5, 1.0, 2.0] {
                    let c = CanonicalSurface::cylinder(n, k, r).unwrap();
                    let b = bound_exponent(n, c.lambda(), c.curvature_summary().mean);
                    assert!(
                        (b - f64::from(n - k)).abs() <= 1e-12,
                        "bound {b} vs {} at n={n} k={k} r={r}",
                        n - k
                    );
                }
            }
            // spheres: exact cancellation to zero
            for &r in &[0.1, 0.5, 1.0, f64::from(n).sqrt(), 2.0, 5.0] {
                let s = CanonicalSurface::sphere(n, r).unwrap();
                let b = bound_exponent(n, s.lambda(), s.curvature_summary().mean);
                assert!(b.abs() <= 1e-12, "sphere bound {b:e} at n={n} r={r}");
            }
            // planes grow like the full dimension
            assert_eq!(bound_exponent(n, 0.0, 0.0), f64::from(n));
        }
    }

    #[test]
    fn fitted_exponent_attains_the_bound_on_flat_families() {
        // flat factors of dimension m need radii ~ m times farther out before
        // the slab half-width sqrt(r^2 - r0^2) looks like r to the fit
        for (surface, radii) in [
            (CanonicalSurface::cylinder(2, 1, 1.0).unwrap(), vec![2.0, 4.0, 8.0, 16.0, 32.0]),
            (CanonicalSurface::cylinder(3, 1, 1.0).unwrap(), vec![8.0, 16.0, 32.0, 64.0, 128.0]),
            (CanonicalSurface::plane(3).unwrap(), vec![1.0, 2.0, 4.0, 8.0]),
        ] {
            let samples: Vec<GrowthSample> = radii
                .iter()
                .map(|&r| GrowthSample { r, area: ball_area_analytic(&surface, r) })
                .collect();
            let fit = growth_fit(&surface, samples).unwrap();
            assert!(
                fit.d <= fit.bound_exponent + 0.05,
                "fitted {} above bound {}",
                fit.d,
                fit.bound_exponent
            );
            assert!(
                (fit.d - fit.bound_exponent).abs() <= 0.05,
                "bound not attained: {} vs {}",
                fit.d,
                fit.bound_exponent
            );
        }
    }
}
