//! Closed-form model surfaces sampled over a reference disk mesh.
//!
//! Each builder maps the mesh's unit-disk parameters onto an exact surface of
//! the hyperbolic model and attaches exact unit normals. The parameter
//! coordinates stay on the mesh, so contracting a family is re-building with
//! a scaled extent.

use nalgebra::Vector3;

use crate::error::GeometryError;
use crate::geometry::halfspace::{ChartPoint, TangentVector};
use crate::geometry::AmbientModel;
use crate::mesh::DiskMesh;

use super::ImmersedSurface;

/// Geodesic sphere cap. Center `(0, 0, center_height)`, radius `radius`,
/// polar angle up to `theta_max` around the upward pole. Outward normals
/// point away from the center.
pub fn sphere_cap(
    model: &AmbientModel,
    radius: f64,
    center_height: f64,
    theta_max: f64,
    mesh: DiskMesh,
) -> Result<ImmersedSurface, GeometryError> {
    if radius <= 0.0 {
        return Err(GeometryError::NonPositiveRadius { r: radius });
    }
    let center = ChartPoint::new(0.0, 0.0, center_height)?;
    let n = mesh.num_vertices();
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for p in &mesh.params {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt().min(1.0);
        let theta = theta_max * rho;
        let phi = p[1].atan2(p[0]);
        let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
            * center_height;
        let end = model.exp_map(&TangentVector::new(center, dir), radius)?;
        normals.push(model.normalize(&end.point, &end.velocity));
        positions.push(end.point);
    }
    Ok(ImmersedSurface::new(mesh, positions, normals))
}

/// Horosphere patch: the plane `z = height` sampled over a Euclidean square
/// of half-width `extent·height` (uniform in the induced metric). The normal
/// points downward, away from the horoball above, so curvature is +1.
pub fn horosphere_patch(
    model: &AmbientModel,
    extent: f64,
    mesh: DiskMesh,
) -> Result<ImmersedSurface, GeometryError> {
    let _ = model;
    let n = mesh.num_vertices();
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for p in &mesh.params {
        positions.push(ChartPoint::new(extent * p[0], extent * p[1], 1.0)?);
        normals.push(Vector3::new(0.0, 0.0, -1.0));
    }
    Ok(ImmersedSurface::new(mesh, positions, normals))
}

/// Point of the totally geodesic hemisphere `|p| = rho` at plane-polar
/// geodesic radius `s` (from the apex `(0,0,rho)`) and azimuth `phi`.
pub fn hemisphere_point(rho: f64, s: f64, phi: f64) -> ChartPoint {
    let t = s.tanh();
    let c = 1.0 / s.cosh();
    ChartPoint::raw(rho * t * phi.cos(), rho * t * phi.sin(), rho * c)
}

/// Upward unit normal of the hemisphere `|p| = rho` at a point on it.
pub fn hemisphere_normal(p: &ChartPoint) -> Vector3<f64> {
    // Euclid-radial direction, metric-normalized.
    p.coords() * (p.z / p.coords().norm())
}

/// Disk on the equidistant surface at distance `dist` above the totally
/// geodesic plane spanned by the hemisphere `|p| = rho`, out to plane-polar
/// radius `s_max`. Normals point away from the plane (curvature tanh²dist).
pub fn equidistant_cap(
    model: &AmbientModel,
    rho: f64,
    dist: f64,
    s_max: f64,
    mesh: DiskMesh,
) -> Result<ImmersedSurface, GeometryError> {
    if rho <= 0.0 {
        return Err(GeometryError::NonPositiveRadius { r: rho });
    }
    let n = mesh.num_vertices();
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for p in &mesh.params {
        let u = (p[0] * p[0] + p[1] * p[1]).sqrt().min(1.0);
        let s = s_max * u;
        let phi = p[1].atan2(p[0]);
        let foot = hemisphere_point(rho, s, phi);
        let up = hemisphere_normal(&foot);
        let end = model.exp_map(&TangentVector::new(foot, up), dist)?;
        normals.push(model.normalize(&end.point, &end.velocity));
        positions.push(end.point);
    }
    Ok(ImmersedSurface::new(mesh, positions, normals))
}

/// Patch of the tube at distance `dist` around the vertical axis geodesic,
/// covering axis parameter |t| ≤ extent and a matching azimuth span. Normals
/// point away from the axis; curvature is exactly 1.
pub fn tube_patch(
    model: &AmbientModel,
    dist: f64,
    extent: f64,
    mesh: DiskMesh,
) -> Result<ImmersedSurface, GeometryError> {
    let _ = model;
    if dist <= 0.0 {
        return Err(GeometryError::NonPositiveRadius { r: dist });
    }
    let n = mesh.num_vertices();
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    // Keep the azimuth span comparable to the axis span in the induced
    // metric: arclength along a parallel is sinh(dist)·Δφ.
    let phi_extent = extent / dist.sinh().max(0.3);
    let sin_th = dist.tanh();
    let cos_th = 1.0 / dist.cosh();
    for p in &mesh.params {
        let t = extent * p[0];
        let phi = phi_extent * p[1];
        let et = t.exp();
        let pos = ChartPoint::raw(et * sin_th * phi.cos(), et * sin_th * phi.sin(), et * cos_th);
        // Radial direction in the meridian plane: ∂/∂r of the Fermi chart,
        // metric-normalized. In the meridian half-plane the unit radial at
        // angle θ from vertical is (cos θ, −sin θ) rotated to azimuth φ.
        let radial = Vector3::new(cos_th * phi.cos(), cos_th * phi.sin(), -sin_th) * pos.z;
        positions.push(pos);
        normals.push(radial);
    }
    Ok(ImmersedSurface::new(mesh, positions, normals))
}

/// Hyperbolic length of the boundary loop (sum of chord distances).
pub fn boundary_length(model: &AmbientModel, surf: &ImmersedSurface) -> Result<f64, GeometryError> {
    let b = &surf.mesh.boundary_loop;
    let mut len = 0.0;
    for i in 0..b.len() {
        let p = &surf.positions[b[i]];
        let q = &surf.positions[b[(i + 1) % b.len()]];
        len += model.distance(p, q)?;
    }
    Ok(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::halfspace;
    use crate::mesh::{make_disk_mesh, DiskMeshKind};
    use approx::assert_relative_eq;

    #[test]
    fn sphere_cap_points_lie_on_sphere() {
        let model = AmbientModel::hyperbolic();
        let mesh = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2);
        let surf = sphere_cap(&model, 1.0, 1.0, 0.9, mesh).unwrap();
        let center = ChartPoint::new(0.0, 0.0, 1.0).unwrap();
        for p in &surf.positions {
            assert_relative_eq!(halfspace::distance(&center, p), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_cap_boundary_length_converges() {
        // Boundary of the polar cap at angle θ on a radius-R sphere is a
        // circle of length 2π sinh(R) sin(θ).
        let model = AmbientModel::hyperbolic();
        let exact = 2.0 * std::f64::consts::PI * 1.0f64.sinh() * 0.9f64.sin();
        let mut prev_err = f64::INFINITY;
        for refinement in 1..=4u32 {
            let mesh = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, refinement);
            let surf = sphere_cap(&model, 1.0, 1.0, 0.9, mesh).unwrap();
            let len = boundary_length(&model, &surf).unwrap();
            let err = (len - exact).abs() / exact;
            assert!(err < prev_err, "boundary length must converge monotonically");
            prev_err = err;
        }
        assert!(prev_err < 1e-3, "final boundary length error {prev_err}");
    }

    #[test]
    fn equidistant_cap_is_at_constant_distance() {
        let model = AmbientModel::hyperbolic();
        let mesh = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2);
        let r = 0.5f64.atanh();
        let surf = equidistant_cap(&model, 1.0, r, 0.8, mesh).unwrap();
        for p in &surf.positions {
            assert_relative_eq!(halfspace::signed_distance_to_hemisphere(p, 1.0), r, epsilon = 1e-12);
        }
        // The whole cap lies on the Euclid sphere of center (0,0,sinh r),
        // radius cosh r.
        for p in &surf.positions {
            let d = (p.coords() - Vector3::new(0.0, 0.0, r.sinh())).norm();
            assert_relative_eq!(d, r.cosh(), epsilon = 1e-12);
        }
    }

    #[test]
    fn tube_patch_at_constant_axis_distance() {
        let model = AmbientModel::hyperbolic();
        let mesh = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2);
        let surf = tube_patch(&model, 0.7, 0.5, mesh).unwrap();
        for p in &surf.positions {
            assert_relative_eq!(halfspace::distance_to_vertical_axis(p), 0.7, epsilon = 1e-12);
        }
        // Normals are unit and orthogonal to the surface's Fermi directions.
        for (p, n) in surf.positions.iter().zip(&surf.normals) {
            assert_relative_eq!(halfspace::norm(p, n), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn normals_are_unit() {
        let model = AmbientModel::hyperbolic();
        for surf in [
            sphere_cap(&model, 1.0, 1.0, 0.9, make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2)).unwrap(),
            horosphere_patch(&model, 0.8, make_disk_mesh(DiskMeshKind::PlanarDiskSample, 2)).unwrap(),
            equidistant_cap(&model, 1.0, 0.5, 0.8, make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2)).unwrap(),
        ] {
            for (p, n) in surf.positions.iter().zip(&surf.normals) {
                assert_relative_eq!(halfspace::norm(p, n), 1.0, epsilon = 1e-12);
            }
        }
    }
}
