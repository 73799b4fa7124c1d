//! Numerical geometry of Gaussian-weighted hypersurfaces.
//!
//! The crate evaluates the structural identities of surfaces satisfying
//! `<X, N> + H = lambda` on closed-form models and on discrete triangle
//! surfaces, assembles the self-adjoint drift operator of the weighted
//! measure, integrates the weighted volume-preserving curvature flow, and
//! measures pinching functionals and polynomial area growth.
//!
//! - [`analytic`]: model spheres, cylinders, and planes with exact invariants
//! - [`mesh`]: triangle surfaces, curvature fits, Gaussian measures, OBJ/OFF
//! - [`drift`]: the discrete drift operator and its integral identities
//! - [`flow`]: the constrained flow integrator and its conservation law
//! - [`rigidity`]: gap functionals, classification, algebraic inequalities
//! - [`growth`]: ball-area measurement and growth-exponent fits

pub mod analytic;
pub mod drift;
pub mod flow;
pub mod growth;
pub mod mesh;
pub mod rigidity;

pub use analytic::{CanonicalSurface, CurvatureSummary, SurfaceKind};
pub use mesh::{MeshSpec, TriMesh, VertexField, WeightedMeasure};
