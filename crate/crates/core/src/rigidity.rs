//! Pinching and gap functionals for Gaussian-weighted hypersurfaces, plus the
//! auxiliary algebraic inequalities their rigidity arguments rest on.
//!
//! The central quantity is the gap functional
//!
//! ```text
//! lhs = (sqrt(B) + |lambda| (n-2) / (2 sqrt(n(n-1))))^2 + (H - lambda)^2 / n
//! rhs = 1 + n lambda^2 / (4(n-1))
//! ```
//!
//! with `B = S - H^2/n`. Surfaces with `lhs <= rhs` everywhere are rigid:
//! among the model families the inequality holds exactly on spheres of radius
//! `r <= sqrt(n)`, planes, and specific cylinder branches, with equality on
//! the boundary family.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{CanonicalSurface, CurvatureSummary, SurfaceKind};

/// Tolerance below which a tiny negative `S - H^2/n` is treated as zero.
const TRACELESS_CLAMP: f64 = 1e-12;
/// Gap-defect tolerance used when deciding whether the inequality holds.
const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum RigidityError {
    #[error("dimension must be at least 2, got n = {0}")]
    DimensionTooSmall(usize),
    #[error("S - H^2/n = {0} is negative beyond the clamping tolerance")]
    NegativeTraceless(f64),
    #[error("deviations must sum to zero, got |sum| = {0}")]
    NotTraceless(f64),
    #[error("tensor entry ({0},{1},{2}) breaks index symmetry by {3}")]
    AsymmetricTensor(usize, usize, usize, f64),
    #[error("tensor storage length {got} does not match n^3 = {expected}")]
    BadTensorLength { got: usize, expected: usize },
}

/// Which rigidity case a model surface falls into when the gap inequality
/// holds, or `GapViolated` when it does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// Sphere of radius `r <= sqrt(n)`.
    SphereSmall,
    /// Flat hyperplane.
    Euclidean,
    /// Cylinder over a circle, `S^1(r) x R^(n-1)`.
    Cyl1,
    /// Cylinder with a line factor, `S^(n-1)(r) x R`.
    CylN1,
    /// Middle cylinder `S^k(sqrt(k)) x R^(n-k)`, `2 <= k <= n-2`.
    CylK,
    /// The gap inequality fails; `lhs` and `rhs` witness the violation.
    GapViolated,
}

/// Evaluation of the gap functional and focal identity on one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchingReport {
    pub n: u32,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    pub thm12_defect: f64,
    pub case_tag: CaseTag,
}

/// Both sides of the gap inequality and `defect = rhs - lhs`.
///
/// `S - H^2/n` within `-1e-12` of zero is clamped before the square root;
/// anything more negative is rejected.
pub fn pinching_gap(summary: &CurvatureSummary, lambda: f64) -> Result<(f64, f64, f64), RigidityError> {
    let n = summary.dim();
    if n < 2 {
        return Err(RigidityError::DimensionTooSmall(n));
    }
    let nf = n as f64;
    let b_raw = summary.norm_sq - summary.mean * summary.mean / nf;
    if b_raw < -TRACELESS_CLAMP {
        return Err(RigidityError::NegativeTraceless(b_raw));
    }
    let b = b_raw.max(0.0);
    let coupling = lambda.abs() * (nf - 2.0) / (2.0 * (nf * (nf - 1.0)).sqrt());
    let lhs = (b.sqrt() + coupling).powi(2) + (summary.mean - lambda).powi(2) / nf;
    let rhs = 1.0 + nf * lambda * lambda / (4.0 * (nf - 1.0));
    Ok((lhs, rhs, rhs - lhs))
}

/// `(H - lambda/2)^2 - (n + lambda^2/4)`; zero exactly on round spheres,
/// strictly negative on cylinders.
pub fn focal_quantity(mean: f64, lambda: f64, n: u32) -> f64 {
    (mean - lambda / 2.0).powi(2) - (f64::from(n) + lambda * lambda / 4.0)
}

/// Evaluates the gap inequality on a model surface with its own `lambda` and
/// tags the matching rigidity case.
///
/// The tag follows the sign of the defect: any model with `defect >= 0`
/// belongs to its family's case, anything else is a witnessed violation.
pub fn classify_canonical(surface: &CanonicalSurface) -> PinchingReport {
    let summary = surface.curvature_summary();
    let lambda = surface.lambda();
    let n = surface.dim();
    let (lhs, rhs, defect) =
        pinching_gap(&summary, lambda).expect("model curvature data is always admissible");
    let thm12_defect = focal_quantity(summary.mean, lambda, n);
    let case_tag = if defect < -CLASSIFY_TOL {
        CaseTag::GapViolated
    } else {
        match surface.kind() {
            SurfaceKind::Sphere => CaseTag::SphereSmall,
            SurfaceKind::Plane => CaseTag::Euclidean,
            SurfaceKind::Cylinder => {
                let k = surface.sphere_factor();
                if k == 1 {
                    CaseTag::Cyl1
                } else if k == n - 1 {
                    CaseTag::CylN1
                } else {
                    CaseTag::CylK
                }
            }
        }
    };
    PinchingReport { n, lambda, lhs, rhs, defect, thm12_defect, case_tag }
}

/// Result of the cubic-deviation bound `|B3| <= (n-2)/sqrt(n(n-1)) B^(3/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBound {
    pub traceless_norm_sq: f64,
    pub traceless_cubic: f64,
    pub bound: f64,
    pub defect: f64,
}

/// Evaluates the sharp bound on `B3 = sum mu_i^3` over traceless deviation
/// vectors. Equality holds exactly when `n-1` of the entries agree.
pub fn b3_bound(mus: &[f64]) -> Result<CubicBound, RigidityError> {
    let n = mus.len();
    if n < 2 {
        return Err(RigidityError::DimensionTooSmall(n));
    }
    let trace: f64 = mus.iter().sum();
    if trace.abs() > 1e-12 {
        return Err(RigidityError::NotTraceless(trace.abs()));
    }
    let nf = n as f64;
    let b: f64 = mus.iter().map(|m| m * m).sum();
    let b3: f64 = mus.iter().map(|m| m * m * m).sum();
    let bound = (nf - 2.0) / (nf * (nf - 1.0)).sqrt() * b.powf(1.5);
    Ok(CubicBound { traceless_norm_sq: b, traceless_cubic: b3, bound, defect: bound - b3.abs() })
}

/// Fully symmetric 3-index tensor over `R^n`, the shape the covariant
/// derivative of a second fundamental form takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor3 {
    n: usize,
    entries: Vec<f64>,
}

impl SymmetricTensor3 {
    /// Validates symmetry of a dense `n^3` array (tolerance `1e-14`).
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, RigidityError> {
        if entries.len() != n * n * n {
            return Err(RigidityError::BadTensorLength { got: entries.len(), expected: n * n * n });
        }
        let t = Self { n, entries };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = t.get(i, j, k);
                    for &(a, b, c) in &[(i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        let d = (v - t.get(a, b, c)).abs();
                        if d > 1e-14 {
                            return Err(RigidityError::AsymmetricTensor(i, j, k, d));
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Builds an exactly symmetric tensor from values on sorted index
    /// triples `i <= j <= k`.
    pub fn from_components<F: FnMut(usize, usize, usize) -> f64>(n: usize, mut component: F) -> Self {
        let mut entries = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = component(i, j, k);
                    let mut assign = |a: usize, b: usize, c: usize| {
                        entries[(a * n + b) * n + c] = v;
                    };
                    assign(i, j, k);
                    assign(i, k, j);
                    assign(j, i, k);
                    assign(j, k, i);
                    assign(k, i, j);
                    assign(k, j, i);
                }
            }
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.n + j) * self.n + k]
    }
}

/// Breakdown of the Kato-type inequality for a symmetric 3-tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatoReport {
    /// `sum_{ijk} h_ijk^2`.
    pub total: f64,
    /// `|grad H|^2 / n` with `(grad H)_k = sum_i h_iik`.
    pub trace_term: f64,
    /// `total - trace_term`, nonnegative by Cauchy-Schwarz.
    pub defect: f64,
    /// `(2 sum_{i != k} h_iik^2, sum over pairwise-distinct ijk of h_ijk^2)`;
    /// the defect dominates their sum.
    pub decomposition: (f64, f64),
    /// `sum_i h_iii^2`, completing the orthogonal split of `total`.
    pub diagonal: f64,
}

/// Evaluates `sum h_ijk^2 - |grad H|^2/n` together with its lower-bound
/// decomposition `2 sum_{i != k} h_iik^2 + sum_{i != j != k != i} h_ijk^2`.
pub fn kato_defect(tensor: &SymmetricTensor3) -> KatoReport {
    let n = tensor.dim();
    let mut total = 0.0;
    let mut mixed = 0.0; // sum_{i != k} h_iik^2
    let mut offdiag = 0.0; // all indices pairwise distinct
    let mut diagonal = 0.0; // h_iii^2
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = tensor.get(i, j, k);
                total += v * v;
                if i == j && j == k {
                    diagonal += v * v;
                } else if i != j && j != k && i != k {
                    offdiag += v * v;
                }
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let v = tensor.get(i, i, k);
                mixed += v * v;
            }
        }
    }
    let mut grad_sq = 0.0;
    for k in 0..n {
        let g: f64 = (0..n).map(|i| tensor.get(i, i, k)).sum();
        grad_sq += g * g;
    }
    let trace_term = grad_sq / n as f64;
    KatoReport {
        total,
        trace_term,
        defect: total - trace_term,
        decomposition: (2.0 * mixed, offdiag),
        diagonal,
    }
}

/// Locates the radius at which the sphere family crosses the gap boundary,
/// by bisection on the defect. The root sits at `sqrt(n)`.
pub fn sphere_defect_root(n: u32) -> f64 {
    let defect_at = |r: f64| {
        let s = CanonicalSurface::sphere(n, r).expect("valid sphere");
        let (_, _, defect) = pinching_gap(&s.curvature_summary(), s.lambda()).unwrap();
        defect
    };
    let sqrt_n = f64::from(n).sqrt();
    let mut lo = 0.5 * sqrt_n;
    let mut hi = 2.0 * sqrt_n;
    debug_assert!(defect_at(lo) > 0.0 && defect_at(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if defect_at(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
