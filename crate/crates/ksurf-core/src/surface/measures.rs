//! Derived surface measurements: intrinsic curvature by angle defect, the
//! Gauss-equation defect, and refinement-study helpers.

use crate::error::{FitError, OperatorError};
use crate::geometry::AmbientModel;

use super::ImmersedSurface;

/// Vertex angle-defect density at interior vertices: `(2π − Σθ) / A_mixed`,
/// with angles by the hyperbolic law of cosines on geodesic edge lengths and
/// mixed (Voronoi, obtuse-clamped) lump areas.
///
/// The faces of the inscribed geodesic polyhedron carry the ambient
/// curvature themselves, so this density measures the *extrinsic* bending
/// concentrated at the vertex; the intrinsic curvature of the limit surface
/// is `sec_ambient + defect density` (the discrete Gauss equation).
pub fn angle_defect_density(
    model: &AmbientModel,
    surf: &ImmersedSurface,
) -> Result<Vec<Option<f64>>, FitError> {
    let n = surf.num_vertices();
    let mut angle_sum = vec![0.0f64; n];
    let mut lump_area = vec![0.0f64; n];
    for t in &surf.mesh.triangles {
        let [a, b, c] = *t;
        let la = model.distance(&surf.positions[b], &surf.positions[c])?;
        let lb = model.distance(&surf.positions[c], &surf.positions[a])?;
        let lc = model.distance(&surf.positions[a], &surf.positions[b])?;
        let ang = |opp: f64, s1: f64, s2: f64| -> f64 {
            let v = (s1.cosh() * s2.cosh() - opp.cosh()) / (s1.sinh() * s2.sinh());
            v.clamp(-1.0, 1.0).acos()
        };
        // Angle at a is opposite side la, etc.
        let aa = ang(la, lb, lc);
        let ab = ang(lb, lc, la);
        let ac = ang(lc, la, lb);
        angle_sum[a] += aa;
        angle_sum[b] += ab;
        angle_sum[c] += ac;
        let tri_area = std::f64::consts::PI - aa - ab - ac;
        // Mixed area: Voronoi split for acute triangles, half/quarter split
        // when obtuse. Cotangent weights use the hyperbolic angles; the
        // Euclidean split formula on geodesic lengths is accurate to higher
        // order than the defect itself.
        let half_pi = std::f64::consts::FRAC_PI_2;
        if aa <= half_pi && ab <= half_pi && ac <= half_pi {
            let va = 0.125 * (lb * lb / ab.tan() + lc * lc / ac.tan());
            let vb = 0.125 * (lc * lc / ac.tan() + la * la / aa.tan());
            let vc = 0.125 * (la * la / aa.tan() + lb * lb / ab.tan());
            // Renormalize the Euclidean-form split onto the true area.
            let s = tri_area / (va + vb + vc).max(1e-300);
            lump_area[a] += va * s;
            lump_area[b] += vb * s;
            lump_area[c] += vc * s;
        } else {
            for (&v, &angle) in t.iter().zip([aa, ab, ac].iter()) {
                lump_area[v] += if angle > half_pi { tri_area / 2.0 } else { tri_area / 4.0 };
            }
        }
    }
    Ok((0..n)
        .map(|v| {
            if surf.mesh.interior[v] && lump_area[v] > 0.0 {
                Some((2.0 * std::f64::consts::PI - angle_sum[v]) / lump_area[v])
            } else {
                None
            }
        })
        .collect())
}

/// Discrete intrinsic (Gauss) curvature at interior vertices:
/// ambient sectional curvature of the tangent plane plus the angle-defect
/// density of the inscribed geodesic polyhedron.
pub fn intrinsic_curvature(
    model: &AmbientModel,
    surf: &ImmersedSurface,
) -> Result<Vec<Option<f64>>, OperatorError> {
    let forms = surf.forms()?;
    let density = angle_defect_density(model, surf).map_err(OperatorError::Fit)?;
    Ok(density
        .iter()
        .enumerate()
        .map(|(v, d)| {
            d.map(|d| {
                let f = &forms[v];
                model.sectional(&surf.positions[v], &f.frame[0], &f.frame[1]) + d
            })
        })
        .collect())
}

/// Pointwise Gauss-equation defect `K_intrinsic − (sec_ambient + κ)` at
/// interior vertices (forms must be fitted). This reduces to the difference
/// between the angle-defect density and the fitted extrinsic curvature.
pub fn gauss_equation_defect(
    model: &AmbientModel,
    surf: &ImmersedSurface,
) -> Result<Vec<Option<f64>>, OperatorError> {
    let forms = surf.forms()?;
    let density = angle_defect_density(model, surf).map_err(OperatorError::Fit)?;
    Ok(density
        .iter()
        .enumerate()
        .map(|(v, d)| d.map(|d| d - forms[v].kappa))
        .collect())
}

/// Interior vertices whose fit neighborhoods contain no boundary vertex
/// (symmetric two-ring stencils). Pointwise estimator convergence rates are
/// quoted on this core; the boundary-adjacent band has one-sided stencils
/// with a lower rate and shrinking width.
pub fn interior_core_mask(mesh: &crate::mesh::DiskMesh) -> Vec<bool> {
    let rings = mesh.two_rings();
    (0..mesh.num_vertices())
        .map(|v| mesh.interior[v] && rings[v].iter().all(|&u| mesh.interior[u]))
        .collect()
}

/// Least-squares slope of log2(err) against refinement level; the measured
/// convergence order.
pub fn convergence_order(errors: &[f64]) -> f64 {
    let n = errors.len() as f64;
    if errors.len() < 2 {
        return 0.0;
    }
    let xs: Vec<f64> = (0..errors.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).log2()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    -num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disk_mesh, DiskMeshKind};
    use crate::surface::builders;
    use crate::surface::fitting::{fit_fundamental_forms, FitConfig};

    fn max_core_defect(model: &AmbientModel, surf: &ImmersedSurface) -> f64 {
        let core = interior_core_mask(&surf.mesh);
        gauss_equation_defect(model, surf)
            .unwrap()
            .iter()
            .enumerate()
            .filter(|(v, _)| core[*v])
            .filter_map(|(_, d)| *d)
            .fold(0.0f64, |m, d| m.max(d.abs()))
    }

    #[test]
    fn gauss_equation_on_closed_forms() {
        let model = AmbientModel::hyperbolic();
        // Equidistant at artanh(0.5): K_int → −1 + 0.25.
        let mesh = make_disk_mesh(DiskMeshKind::PlanarDiskSample, 3);
        let mut surf = builders::equidistant_cap(&model, 1.0, 0.5f64.atanh(), 0.8, mesh).unwrap();
        fit_fundamental_forms(&model, &mut surf, &FitConfig::default()).unwrap();
        let ks = intrinsic_curvature(&model, &surf).unwrap();
        for (v, k) in ks.iter().enumerate() {
            if let Some(k) = k {
                assert!((k - (-0.75)).abs() < 0.02, "vertex {v}: K_int = {k}");
            }
        }
        // Sphere: K_int = 1/sinh²r > 0.
        let mesh = make_disk_mesh(DiskMeshKind::PlanarDiskSample, 3);
        let mut sph = builders::sphere_cap(&model, 1.0, 1.0, 0.6, mesh).unwrap();
        fit_fundamental_forms(&model, &mut sph, &FitConfig::default()).unwrap();
        let expected = 1.0 / 1.0f64.sinh().powi(2);
        for k in intrinsic_curvature(&model, &sph).unwrap().iter().flatten() {
            assert!((k - expected).abs() < 0.02 * expected.max(1.0), "K_int = {k}");
        }
        // Horosphere: K_int ≈ 0.
        let mesh = make_disk_mesh(DiskMeshKind::PlanarDiskSample, 3);
        let mut hor = builders::horosphere_patch(&model, 0.6, mesh).unwrap();
        fit_fundamental_forms(&model, &mut hor, &FitConfig::default()).unwrap();
        for k in intrinsic_curvature(&model, &hor).unwrap().iter().flatten() {
            assert!(k.abs() < 0.02, "K_int = {k}");
        }
    }

    #[test]
    fn gauss_defect_shrinks_under_refinement() {
        let model = AmbientModel::hyperbolic();
        let mut errs = Vec::new();
        // The core (fully interior stencils) is empty at refinement 1.
        for refinement in 2..=5u32 {
            let mesh = make_disk_mesh(DiskMeshKind::PlanarDiskSample, refinement);
            let mut surf = builders::equidistant_cap(&model, 1.0, 0.5f64.atanh(), 0.8, mesh).unwrap();
            fit_fundamental_forms(&model, &mut surf, &FitConfig::default()).unwrap();
            errs.push(max_core_defect(&model, &surf));
        }
        let order = convergence_order(&errs);
        assert!(order >= 1.5, "defect order {order}, errors {errs:?}");
    }
}
