//! Post-solve geometric audits: tangency comparisons against the model
//! families, degeneration diagnostics, and the boundary-ball inclusion
//! check.

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{GeometryError, OperatorError};
use crate::geometry::halfspace::{self, ChartPoint, TangentVector};
use crate::geometry::AmbientModel;
use crate::surface::ImmersedSurface;

/// Comparison families for the tangency audit.
#[derive(Debug, Clone, Copy)]
pub enum ComparisonFamily {
    /// Spheres grown from a fixed center on the concave side.
    SpheresFrom { center: ChartPoint },
    /// Equidistants to the totally geodesic plane `|p| = rho`,
    /// approaching from the plane side.
    EquidistantToPlane { rho: f64 },
    /// Horospheres about the point at infinity, shrinking from above.
    HorospheresAtInfinity,
}

/// A near-tangency contact between the surface and a comparison family
/// member, with the curvature inequality of the inner surface recorded.
#[derive(Debug, Clone, Serialize)]
pub struct ContactReport {
    pub family_level: f64,
    pub contact_vertex: usize,
    pub kappa_family: f64,
    pub kappa_surface: f64,
    /// κ_family ≥ κ_surface − tol (the family member is the inner surface).
    pub inequality_holds: bool,
    pub gap: f64,
}

/// Find the family member tangent to `surf` from the inner side and check
/// the curvature inequality at the contact vertex.
pub fn maximum_principle_probe(
    model: &AmbientModel,
    surf: &ImmersedSurface,
    family: ComparisonFamily,
    tol: f64,
) -> Result<ContactReport, OperatorError> {
    let forms = surf.forms()?;
    let (level, vertex, kappa_family) = match family {
        ComparisonFamily::SpheresFrom { center } => {
            let mut best = (f64::INFINITY, 0usize);
            for (v, p) in surf.positions.iter().enumerate() {
                let d = model.distance(&center, p).map_err(crate::error::FitError::Geometry)?;
                if d < best.0 {
                    best = (d, v);
                }
            }
            let coth = 1.0 / best.0.tanh();
            (best.0, best.1, coth * coth)
        }
        ComparisonFamily::EquidistantToPlane { rho } => {
            let mut best = (f64::INFINITY, 0usize);
            for (v, p) in surf.positions.iter().enumerate() {
                let d = halfspace::signed_distance_to_hemisphere(p, rho);
                if d < best.0 {
                    best = (d, v);
                }
            }
            let t = best.0.tanh();
            (best.0, best.1, t * t)
        }
        ComparisonFamily::HorospheresAtInfinity => {
            // Level = max height; the horosphere z = z_max caps the surface
            // from above and its horoball side contains it.
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (v, p) in surf.positions.iter().enumerate() {
                if p.z > best.0 {
                    best = (p.z, v);
                }
            }
            (best.0, best.1, 1.0)
        }
    };
    let kappa_surface = forms[vertex].kappa;
    let gap = kappa_family - kappa_surface;
    Ok(ContactReport {
        family_level: level,
        contact_vertex: vertex,
        kappa_family,
        kappa_surface,
        inequality_holds: gap >= -tol,
        gap,
    })
}

/// Degeneration diagnostics per the compactness trichotomy: healthy,
/// tube-like (strong principal anisotropy at curvature near the ambient
/// bound), or degenerate (unbounded mean curvature).
#[derive(Debug, Clone, Serialize)]
pub enum DegeneracyDiagnosis {
    Ok,
    SuspectedTube {
        /// Two points spanning the estimated geodesic axis.
        axis: [[f64; 3]; 2],
        /// Max deviation of the axis-point cloud from the fitted geodesic.
        cloud_spread: f64,
        anisotropy: f64,
    },
    SuspectedDegenerate { max_mean_curvature: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct DegeneracyThresholds {
    pub mean_curvature_max: f64,
    pub anisotropy_min: f64,
    /// Relative closeness of κ to the ambient bound c for the tube flag.
    pub kappa_band: f64,
}

impl Default for DegeneracyThresholds {
    fn default() -> Self {
        Self { mean_curvature_max: 1e3, anisotropy_min: 1.6, kappa_band: 0.2 }
    }
}

pub fn degeneracy_diagnostics(
    model: &AmbientModel,
    surf: &ImmersedSurface,
    thresholds: &DegeneracyThresholds,
) -> Result<DegeneracyDiagnosis, OperatorError> {
    let forms = surf.forms()?;
    let c = model.curvature_upper_bound();
    let mut max_mean = 0.0f64;
    let mut tube_votes = 0usize;
    let mut axis_points: Vec<ChartPoint> = Vec::new();
    let mut max_aniso = 0.0f64;
    for v in surf.mesh.interior_vertices() {
        let f = &forms[v];
        max_mean = max_mean.max(f.mean.abs());
        let [l1, l2] = f.principal;
        if l2.abs() > 1e-12 {
            let aniso = (l1 / l2).abs();
            max_aniso = max_aniso.max(aniso);
            if aniso > thresholds.anisotropy_min && (f.kappa - c).abs() < thresholds.kappa_band * c {
                tube_votes += 1;
                // Axis candidate: back off along the inward normal by the
                // tube radius suggested by the larger principal curvature.
                if l1 > 1.0 {
                    let r_est = (1.0 / l1).atanh();
                    let ray = TangentVector::new(surf.positions[v], -surf.normals[v]);
                    if let Ok(end) = model.exp_map(&ray, r_est) {
                        axis_points.push(end.point);
                    }
                }
            }
        }
    }
    if max_mean > thresholds.mean_curvature_max {
        return Ok(DegeneracyDiagnosis::SuspectedDegenerate { max_mean_curvature: max_mean });
    }
    let interior_count = surf.mesh.interior_vertices().count().max(1);
    if tube_votes * 2 >= interior_count && axis_points.len() >= 2 {
        // Fit a geodesic through the two most separated cloud points.
        let (mut a, mut b, mut dmax) = (axis_points[0], axis_points[0], -1.0);
        for i in 0..axis_points.len() {
            for j in i + 1..axis_points.len() {
                let d = halfspace::distance(&axis_points[i], &axis_points[j]);
                if d > dmax {
                    dmax = d;
                    a = axis_points[i];
                    b = axis_points[j];
                }
            }
        }
        let spread = axis_points
            .iter()
            .map(|p| distance_to_geodesic(&a, &b, p))
            .fold(0.0f64, f64::max);
        return Ok(DegeneracyDiagnosis::SuspectedTube {
            axis: [[a.x, a.y, a.z], [b.x, b.y, b.z]],
            cloud_spread: spread,
            anisotropy: max_aniso,
        });
    }
    Ok(DegeneracyDiagnosis::Ok)
}

/// Distance from `p` to the complete geodesic through `a` and `b`
/// (hyperbolic closed forms, golden-section refined).
pub fn distance_to_geodesic(a: &ChartPoint, b: &ChartPoint, p: &ChartPoint) -> f64 {
    let (dir, span) = halfspace::log_map(a, b);
    if span == 0.0 {
        return halfspace::distance(a, p);
    }
    let eval = |t: f64| {
        let end = halfspace::exp_map(&TangentVector::new(*a, dir), t);
        halfspace::distance(&end.point, p)
    };
    let (mut lo, mut hi) = (-4.0 * span - 4.0, 5.0 * span + 4.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) * 0.381_966_011_250_105;
        let m2 = hi - (hi - lo) * 0.381_966_011_250_105;
        if eval(m1) <= eval(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    eval(0.5 * (lo + hi))
}

/// Minimal enclosing ball of the boundary loop and the worst protrusion of
/// the surface beyond it. A compact surface of subcritical curvature lies
/// inside every ball containing its boundary, so `max_excess` must stay
/// within slack.
#[derive(Debug, Clone, Serialize)]
pub struct BallInclusionReport {
    pub center: [f64; 3],
    pub radius: f64,
    pub max_excess: f64,
}

pub fn boundary_ball_inclusion(
    model: &AmbientModel,
    surf: &ImmersedSurface,
) -> Result<BallInclusionReport, GeometryError> {
    let boundary: Vec<ChartPoint> =
        surf.mesh.boundary_loop.iter().map(|&b| surf.positions[b]).collect();
    // Geodesic minimax center by the move-toward-farthest iteration.
    let mut center = boundary[0];
    for step in 0..2000usize {
        let mut far = (0.0f64, center);
        for q in &boundary {
            let d = model.distance(&center, q)?;
            if d > far.0 {
                far = (d, *q);
            }
        }
        if far.0 == 0.0 {
            break;
        }
        let (dir, dist) = model.log_map(&center, &far.1)?;
        let eta = dist / (step as f64 + 2.0);
        center = model.exp_map(&TangentVector::new(center, dir), eta)?.point;
    }
    let mut radius = 0.0f64;
    for q in &boundary {
        radius = radius.max(model.distance(&center, q)?);
    }
    let mut max_excess = f64::NEG_INFINITY;
    for p in &surf.positions {
        max_excess = max_excess.max(model.distance(&center, p)? - radius);
    }
    Ok(BallInclusionReport { center: [center.x, center.y, center.z], radius, max_excess })
}

/// Orientation sign helper shared by tests.
pub fn chart_vec(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}
