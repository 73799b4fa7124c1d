//! Closed-form model hypersurfaces and their curvature invariants.
//!
//! The three families handled here — round spheres `S^n(r)`, cylinders
//! `S^k(r) x R^(n-k)`, and flat hyperplanes — all satisfy
//! `<X, N> + H = lambda` for a constant `lambda`, with the normal chosen so
//! that the sphere of radius `r` about the origin has `N = -X/r`, principal
//! curvatures `+1/r`, and `H = n/r`. Under that convention
//! `lambda = n/r - r` on spheres and `k/r - r` on cylinders.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

/// Errors from constructing or evaluating a model surface.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension must be at least 2, got n = {0}")]
    DimensionTooSmall(u32),
    #[error("sphere factor dimension k = {k} invalid for {kind:?} with n = {n}")]
    InvalidSphereFactor { kind: SurfaceKind, n: u32, k: u32 },
    #[error("radius must be positive, got r = {0}")]
    NonPositiveRadius(f64),
}

/// The three model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere,
    Cylinder,
    Plane,
}

/// A validated model hypersurface descriptor.
///
/// `n` is the intrinsic dimension, `k` the dimension of the sphere factor
/// (`k = n` for spheres, `1 <= k <= n-1` for cylinders, `0` for planes), and
/// `r` its radius (unused for planes, stored as 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSurface {
    kind: SurfaceKind,
    n: u32,
    k: u32,
    r: f64,
}

impl CanonicalSurface {
    /// Validates the `(kind, n, k, r)` parameter combination.
    pub fn new(kind: SurfaceKind, n: u32, k: u32, r: f64) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::DimensionTooSmall(n));
        }
        let k_ok = match kind {
            SurfaceKind::Sphere => k == n,
            SurfaceKind::Cylinder => k >= 1 && k <= n - 1,
            SurfaceKind::Plane => k == 0,
        };
        if !k_ok {
            return Err(ModelError::InvalidSphereFactor { kind, n, k });
        }
        if kind != SurfaceKind::Plane && !(r > 0.0 && r.is_finite()) {
            return Err(ModelError::NonPositiveRadius(r));
        }
        let r = if kind == SurfaceKind::Plane { 1.0 } else { r };
        Ok(Self { kind, n, k, r })
    }

    pub fn sphere(n: u32, r: f64) -> Result<Self, ModelError> {
        Self::new(SurfaceKind::Sphere, n, n, r)
    }

    pub fn cylinder(n: u32, k: u32, r: f64) -> Result<Self, ModelError> {
        Self::new(SurfaceKind::Cylinder, n, k, r)
    }

    pub fn plane(n: u32) -> Result<Self, ModelError> {
        Self::new(SurfaceKind::Plane, n, 0, 1.0)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn sphere_factor(&self) -> u32 {
        self.k
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// The constant `lambda` with `<X, N> + H = lambda`:
    /// `n/r - r` (sphere), `k/r - r` (cylinder), `0` (plane).
    pub fn lambda(&self) -> f64 {
        match self.kind {
            SurfaceKind::Plane => 0.0,
            _ => f64::from(self.k) / self.r - self.r,
        }
    }

    /// The support function `<X, N>`, constant on each model: `-r` on spheres
    /// and cylinders (inward normal), `0` on planes through the origin.
    pub fn support(&self) -> f64 {
        match self.kind {
            SurfaceKind::Plane => 0.0,
            _ => -self.r,
        }
    }

    /// Principal curvatures and derived invariants. Spheres carry `n` copies
    /// of `1/r`, cylinders `k` copies of `1/r` padded with zeros, planes all
    /// zeros.
    pub fn curvature_summary(&self) -> CurvatureSummary {
        let n = self.n as usize;
        let kappa = match self.kind {
            SurfaceKind::Plane => 0.0,
            _ => 1.0 / self.r,
        };
        let mut kappas = vec![0.0; n];
        for item in kappas.iter_mut().take(self.k as usize) {
            *item = kappa;
        }
        CurvatureSummary::from_kappas(kappas)
    }

    /// Gaussian-weighted area and weighted volume of the full surface.
    ///
    /// Flat directions integrate to `sqrt(2 pi)` each, so cylinders and
    /// planes stay finite. The weighted volume uses `<X, N> = lambda - H`,
    /// constant on every model.
    pub fn weighted_functionals(&self) -> WeightedFunctionals {
        let n = self.n;
        match self.kind {
            SurfaceKind::Sphere => {
                let area = unit_sphere_area(n) * self.r.powi(n as i32) * (-self.r * self.r / 2.0).exp();
                WeightedFunctionals { area, volume: -self.r * area }
            }
            SurfaceKind::Cylinder => {
                let k = self.k;
                let area = unit_sphere_area(k)
                    * self.r.powi(k as i32)
                    * (-self.r * self.r / 2.0).exp()
                    * (2.0 * PI).powi((n - k) as i32 / 2)
                    * if (n - k) % 2 == 1 { (2.0 * PI).sqrt() } else { 1.0 };
                WeightedFunctionals { area, volume: -self.r * area }
            }
            SurfaceKind::Plane => {
                let area = (2.0 * PI).powi(n as i32 / 2) * if n % 2 == 1 { (2.0 * PI).sqrt() } else { 1.0 };
                WeightedFunctionals { area, volume: 0.0 }
            }
        }
    }
}

/// Gaussian-weighted area `A` and weighted volume `V` of a model surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedFunctionals {
    pub area: f64,
    pub volume: f64,
}

/// Principal curvatures of a point (or of a whole constant-curvature
/// surface) together with the derived scalar invariants.
///
/// `traceless_norm_sq` is accumulated from the deviations `mu_i = kappa_i - H/n`
/// directly, so it is nonnegative by construction; agreement with
/// `norm_sq - mean^2/n` is a checked identity rather than a definition.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSummary {
    /// Principal curvatures `kappa_1..kappa_n`.
    pub kappas: Vec<f64>,
    /// `H`, the trace of the shape operator.
    pub mean: f64,
    /// `S = sum kappa_i^2`, squared norm of the second fundamental form.
    pub norm_sq: f64,
    /// `B = sum mu_i^2`, squared norm of the traceless part.
    pub traceless_norm_sq: f64,
    /// Deviations `mu_i = kappa_i - H/n`.
    pub deviations: Vec<f64>,
    /// `B3 = sum mu_i^3`.
    pub traceless_cubic: f64,
    /// `f3 = sum kappa_i^3`.
    pub cubic: f64,
}

impl CurvatureSummary {
    pub fn from_kappas(kappas: Vec<f64>) -> Self {
        let n = kappas.len() as f64;
        let mean: f64 = kappas.iter().sum();
        let norm_sq: f64 = kappas.iter().map(|k| k * k).sum();
        let cubic: f64 = kappas.iter().map(|k| k * k * k).sum();
        let avg = mean / n;
        let deviations: Vec<f64> = kappas.iter().map(|k| k - avg).collect();
        let traceless_norm_sq: f64 = deviations.iter().map(|m| m * m).sum();
        let traceless_cubic: f64 = deviations.iter().map(|m| m * m * m).sum();
        Self {
            kappas,
            mean,
            norm_sq,
            traceless_norm_sq,
            deviations,
            traceless_cubic,
            cubic,
        }
    }

    pub fn dim(&self) -> usize {
        self.kappas.len()
    }
}

/// Sectional curvatures of the coordinate planes and the smallest Ricci
/// eigenvalue of a diagonalized shape operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionalRicci {
    /// `K[i][j] = kappa_i * kappa_j` for `i != j`, zero on the diagonal.
    pub sectional: DMatrix<f64>,
    /// `min_i sum_{j != i} kappa_i kappa_j`.
    pub ricci_min: f64,
}

/// Gauss-equation curvature data of a diagonalized second fundamental form.
pub fn sectional_and_ricci(summary: &CurvatureSummary) -> SectionalRicci {
    let n = summary.dim();
    let mut sectional = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sectional[(i, j)] = summary.kappas[i] * summary.kappas[j];
            }
        }
    }
    let ricci_min = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| summary.kappas[i] * summary.kappas[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let ricci_min = if n == 0 { 0.0 } else { ricci_min };
    SectionalRicci { sectional, ricci_min }
}

/// Right-hand sides of the Simons-type identities for the drift operator on a
/// surface with parallel second fundamental form:
/// `rH = H + S(lambda - H)` and `rS = (1 - S)S + lambda f3`.
///
/// Both vanish exactly when `lambda` is the surface's own constant.
pub fn simons_rhs(summary: &CurvatureSummary, lambda: f64) -> (f64, f64) {
    let h = summary.mean;
    let s = summary.norm_sq;
    let r_h = h + s * (lambda - h);
    let r_s = (1.0 - s) * s + lambda * summary.cubic;
    (r_h, r_s)
}

/// Gamma(j/2) for positive integer `j`, by the half-integer recursion from
/// Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
fn gamma_half(j: u32) -> f64 {
    assert!(j >= 1);
    let mut value = if j % 2 == 1 { PI.sqrt() } else { 1.0 };
    let mut arg = if j % 2 == 1 { 1 } else { 2 };
    while arg < j {
        value *= f64::from(arg) / 2.0;
        arg += 2;
    }
    value
}

/// Surface area of the unit sphere `S^n` in `R^(n+1)`:
/// `2 pi^((n+1)/2) / Gamma((n+1)/2)`.
pub fn unit_sphere_area(n: u32) -> f64 {
    let j = n + 1;
    let pi_pow = PI.powi(j as i32 / 2) * if j % 2 == 1 { PI.sqrt() } else { 1.0 };
    2.0 * pi_pow / gamma_half(j)
}

/// Volume of the unit ball in `R^m`: `pi^(m/2) / Gamma(m/2 + 1)`.
pub fn unit_ball_volume(m: u32) -> f64 {
    let pi_pow = PI.powi(m as i32 / 2) * if m % 2 == 1 { PI.sqrt() } else { 1.0 };
    pi_pow / gamma_half(m + 2)
}
