//! The ambient Hadamard 3-manifold: a validated model with a uniform
//! curvature bound, dispatching between the exact half-space closed forms and
//! the numerically integrated conformal perturbation.

use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::halfspace::{self, ChartPoint, GeodesicEnd, IdealPoint, TangentVector};
use super::warped::{self, WarpFactor};
use crate::error::GeometryError;

/// Which metric the model carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    HyperbolicHalfSpace,
    Warped(WarpFactor),
}

/// A chart-based Hadamard 3-manifold with certified curvature bound:
/// all sectional curvatures ≤ −c (up to the certification tolerance).
#[derive(Debug, Clone)]
pub struct AmbientModel {
    kind: ModelKind,
    curvature_upper_bound: f64,
    atol: f64,
}

pub const CERTIFICATION_TOL: f64 = 1e-6;
const CERTIFICATION_SAMPLES: usize = 120;

impl AmbientModel {
    /// Exact hyperbolic space; the bound is c = 1.
    pub fn hyperbolic() -> Self {
        Self { kind: ModelKind::HyperbolicHalfSpace, curvature_upper_bound: 1.0, atol: 1e-10 }
    }

    /// A conformal perturbation claiming curvature ≤ −c. Construction runs a
    /// sample sweep over points and planes in the given chart box and fails
    /// if any sectional curvature exceeds −c + 1e−6.
    pub fn warped(factor: WarpFactor, c: f64, sample_box: ([f64; 3], [f64; 3])) -> Result<Self, GeometryError> {
        let model = Self { kind: ModelKind::Warped(factor), curvature_upper_bound: c, atol: 1e-10 };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7);
        let (lo, hi) = sample_box;
        for i in 0..CERTIFICATION_SAMPLES {
            let p = ChartPoint::new(
                rng.gen_range(lo[0]..hi[0]),
                rng.gen_range(lo[1]..hi[1]),
                rng.gen_range(lo[2].max(1e-3)..hi[2]),
            )?;
            let x = random_unit(&mut rng);
            let mut y = random_unit(&mut rng);
            // Keep the plane well-conditioned.
            y -= x * y.dot(&x);
            if y.norm() < 0.1 {
                continue;
            }
            let s = warped::sectional(&factor, &p, &x, &y);
            if s > -c + CERTIFICATION_TOL {
                return Err(GeometryError::CurvatureCertification { found: s, bound: c, sample: i });
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn curvature_upper_bound(&self) -> f64 {
        self.curvature_upper_bound
    }

    pub fn is_exact_hyperbolic(&self) -> bool {
        matches!(self.kind, ModelKind::HyperbolicHalfSpace)
            || matches!(self.kind, ModelKind::Warped(w) if w.amplitude == 0.0)
    }

    /// Metric tensor and Christoffel symbols at `p`.
    pub fn metric_and_connection(&self, p: &ChartPoint) -> Result<(Matrix3<f64>, [Matrix3<f64>; 3]), GeometryError> {
        if !(p.z > 0.0) {
            return Err(GeometryError::InvalidChartPoint { z: p.z });
        }
        Ok(match &self.kind {
            ModelKind::HyperbolicHalfSpace => (halfspace::metric(p), halfspace::christoffels(p)),
            ModelKind::Warped(w) => (warped::metric(w, p), warped::christoffels(w, p)),
        })
    }

    pub fn metric(&self, p: &ChartPoint) -> Matrix3<f64> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => halfspace::metric(p),
            ModelKind::Warped(w) => warped::metric(w, p),
        }
    }

    pub fn inner(&self, p: &ChartPoint, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        (self.metric(p) * u).dot(v)
    }

    pub fn norm(&self, p: &ChartPoint, v: &Vector3<f64>) -> f64 {
        self.inner(p, v, v).sqrt()
    }

    pub fn normalize(&self, p: &ChartPoint, v: &Vector3<f64>) -> Vector3<f64> {
        v / self.norm(p, v)
    }

    /// Geodesic flow for parameter `t`; closed form in the exact model.
    pub fn exp_map(&self, v: &TangentVector, t: f64) -> Result<GeodesicEnd, GeometryError> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok(halfspace::exp_map(v, t)),
            ModelKind::Warped(w) => {
                let (point, velocity) = warped::exp_map(w, v, t, self.atol)?;
                Ok(GeodesicEnd { point, velocity })
            }
        }
    }

    /// Unit initial direction and distance from `p` to `q`.
    pub fn log_map(&self, p: &ChartPoint, q: &ChartPoint) -> Result<(Vector3<f64>, f64), GeometryError> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok(halfspace::log_map(p, q)),
            ModelKind::Warped(w) => warped::log_map(w, p, q, self.atol),
        }
    }

    pub fn distance(&self, p: &ChartPoint, q: &ChartPoint) -> Result<f64, GeometryError> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok(halfspace::distance(p, q)),
            ModelKind::Warped(w) => warped::distance(w, p, q, self.atol),
        }
    }

    pub fn parallel_transport(&self, p: &ChartPoint, q: &ChartPoint, w: &Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok(halfspace::parallel_transport(p, q, w)),
            ModelKind::Warped(wf) => {
                // Transport along the shooting geodesic by integrating
                // v̇^i + Γ^i_{jk} ẋ^j v^k = 0 together with the geodesic.
                let (dir, dist) = warped::log_map(wf, p, q, self.atol)?;
                if dist == 0.0 {
                    return Ok(*w);
                }
                let y0 = [p.x, p.y, p.z, dir.x, dir.y, dir.z, w.x, w.y, w.z];
                let rhs = |_: f64, y: &[f64; 9]| {
                    let pt = ChartPoint::raw(y[0], y[1], y[2]);
                    let vel = Vector3::new(y[3], y[4], y[5]);
                    let trans = Vector3::new(y[6], y[7], y[8]);
                    let gamma = warped::christoffels(wf, &pt);
                    let mut acc = Vector3::zeros();
                    let mut dtr = Vector3::zeros();
                    for i in 0..3 {
                        acc[i] = -(gamma[i] * vel).dot(&vel);
                        dtr[i] = -(gamma[i] * vel).dot(&trans);
                    }
                    [y[3], y[4], y[5], acc.x, acc.y, acc.z, dtr.x, dtr.y, dtr.z]
                };
                let y = super::integrate::integrate(rhs, 0.0, dist, y0, self.atol)?;
                Ok(Vector3::new(y[6], y[7], y[8]))
            }
        }
    }

    /// Sectional curvature of the plane spanned by `x`, `y` at `p`.
    pub fn sectional(&self, p: &ChartPoint, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => -1.0,
            ModelKind::Warped(w) => warped::sectional(w, p, x, y),
        }
    }

    /// The symmetric endomorphism `u ↦ R(n, u) n` restricted to the plane
    /// orthogonal to the unit vector `n`, expressed in the returned
    /// orthonormal basis `(e1, e2)` of that plane. Its eigenvalue in a
    /// direction `e` is minus the sectional curvature of span(n, e), so the
    /// hyperbolic model yields the identity.
    ///
    /// Returns `(matrix, [e1, e2], symmetry_defect)`.
    pub fn curvature_endomorphism(
        &self,
        n: &TangentVector,
    ) -> Result<(Matrix2<f64>, [Vector3<f64>; 2], f64), GeometryError> {
        let p = n.base;
        let nn = self.norm(&p, &n.components);
        if (nn - 1.0).abs() > 1e-8 {
            return Err(GeometryError::NonUnitVector { norm: nn });
        }
        let (e1, e2) = self.orthonormal_complement(&p, &n.components);
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok((Matrix2::identity(), [e1, e2], 0.0)),
            ModelKind::Warped(w) => {
                let basis = [e1, e2];
                let mut m = Matrix2::zeros();
                for (j, ej) in basis.iter().enumerate() {
                    let r = warped::riemann(w, &p, &n.components, ej, &n.components);
                    for (i, ei) in basis.iter().enumerate() {
                        m[(i, j)] = self.inner(&p, &r, ei);
                    }
                }
                let defect = (m[(0, 1)] - m[(1, 0)]).abs();
                let sym = Matrix2::new(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
                Ok((sym, basis, defect))
            }
        }
    }

    /// The endomorphism `u ↦ R(n, u) n` expressed in a caller-supplied
    /// orthonormal basis `(e1, e2)` of the plane orthogonal to the unit
    /// vector `n`. Identity in the exact hyperbolic model.
    pub fn curvature_endomorphism_in_frame(
        &self,
        p: &ChartPoint,
        n: &Vector3<f64>,
        e1: &Vector3<f64>,
        e2: &Vector3<f64>,
    ) -> Matrix2<f64> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Matrix2::identity(),
            ModelKind::Warped(w) => {
                let basis = [e1, e2];
                let mut m = Matrix2::zeros();
                for (j, ej) in basis.iter().enumerate() {
                    let r = warped::riemann(w, p, n, ej, n);
                    for (i, ei) in basis.iter().enumerate() {
                        m[(i, j)] = self.inner(p, &r, ei);
                    }
                }
                let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
                Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
            }
        }
    }

    /// A metric-orthonormal basis of the plane orthogonal to `n` at `p`.
    pub fn orthonormal_complement(&self, p: &ChartPoint, n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let g = self.metric(p);
        let ip = |a: &Vector3<f64>, b: &Vector3<f64>| (g * a).dot(b);
        let n2 = ip(n, n);
        // Pick the chart axis least aligned with n, Gram–Schmidt.
        let mut best = Vector3::x();
        let mut best_align = f64::INFINITY;
        for cand in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let align = ip(&cand, n).abs() / (ip(&cand, &cand).sqrt() * n2.sqrt());
            if align < best_align {
                best_align = align;
                best = cand;
            }
        }
        let mut e1 = best - n * (ip(&best, n) / n2);
        e1 /= ip(&e1, &e1).sqrt();
        // e2 completes the frame; chart cross product then re-orthogonalize.
        let mut e2 = n.cross(&e1);
        e2 -= n * (ip(&e2, n) / n2);
        e2 -= e1 * ip(&e2, &e1);
        e2 /= ip(&e2, &e2).sqrt();
        (e1, e2)
    }

    pub fn busemann(&self, p: &ChartPoint, xi: &IdealPoint, basepoint: &ChartPoint) -> Result<f64, GeometryError> {
        match &self.kind {
            ModelKind::HyperbolicHalfSpace => Ok(halfspace::busemann(p, xi, basepoint)),
            ModelKind::Warped(w) => {
                // Finite-ray approximation along the geodesic from the
                // basepoint toward the hyperbolic ray direction of xi.
                let dir = match xi {
                    IdealPoint::Infinity => Vector3::new(0.0, 0.0, basepoint.z),
                    IdealPoint::Boundary { x, y } => {
                        // Direction of the half-space geodesic toward xi.
                        let target = ChartPoint::raw(*x, *y, 1e-9);
                        halfspace::log_map(basepoint, &target).0
                    }
                };
                let (val, _t) = warped::busemann_ray(w, p, basepoint, &dir, 1e-6, self.atol)?;
                Ok(val)
            }
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-2 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Closed-form model surface families in exact hyperbolic space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelSurfaceFamily {
    Sphere { r: f64 },
    Horosphere,
    EquidistantToPlane { r: f64 },
    TubeAroundGeodesic { r: f64 },
}

/// Principal curvatures and extrinsic curvature of the closed-form families.
pub fn model_surface_curvatures(
    model: &AmbientModel,
    family: ModelSurfaceFamily,
) -> Result<(f64, f64, f64), GeometryError> {
    if !model.is_exact_hyperbolic() {
        return Err(GeometryError::IntegratorFailure {
            reason: "closed-form family curvatures require the exact hyperbolic model".into(),
        });
    }
    let check = |r: f64| -> Result<f64, GeometryError> {
        if r > 0.0 {
            Ok(r)
        } else {
            Err(GeometryError::NonPositiveRadius { r })
        }
    };
    Ok(match family {
        ModelSurfaceFamily::Sphere { r } => {
            let r = check(r)?;
            let c = 1.0 / r.tanh();
            (c, c, c * c)
        }
        ModelSurfaceFamily::Horosphere => (1.0, 1.0, 1.0),
        ModelSurfaceFamily::EquidistantToPlane { r } => {
            let r = check(r)?;
            let t = r.tanh();
            (t, t, t * t)
        }
        ModelSurfaceFamily::TubeAroundGeodesic { r } => {
            let r = check(r)?;
            (r.tanh(), 1.0 / r.tanh(), 1.0)
        }
    })
}

/// The normal-flow evolution rate of the extrinsic curvature for a surface
/// with principal curvatures `l1, l2` and ambient sectional curvatures
/// `k1, k2` in the corresponding normal planes:
/// `dκ/dr = −κ (λ₂(1 + k₁/κ) + λ₁(1 + k₂/κ))`.
pub fn curvature_flow_rate(kappa: f64, l1: f64, l2: f64, k1: f64, k2: f64) -> f64 {
    -kappa * (l2 * (1.0 + k1 / kappa) + l1 * (1.0 + k2 / kappa))
}
