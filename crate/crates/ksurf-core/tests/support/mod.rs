//! Shared oracle code for the integration suites.
//!
//! The profile oracle solves the rotationally symmetric prescribed-curvature
//! problem as a one-dimensional boundary value problem in Fermi coordinates
//! around the vertical axis and never touches the two-dimensional solver
//! path it is used to check.

use ksurf_core::geometry::halfspace::{self, ChartPoint, FermiPoint, TangentVector};

/// Meridian profile of a rotationally symmetric surface of constant
/// extrinsic curvature, sampled as half-plane chart points (y = 0).
pub struct ProfileOracle {
    /// Chart samples (x, z), x monotone increasing.
    pub polyline: Vec<(f64, f64)>,
    pub t_pole: f64,
}

/// Meridian ODE in Fermi coordinates (t, r, ψ):
/// dt/ds = cos ψ / cosh r, dr/ds = sin ψ, dψ/ds = tanh r (cos ψ − k / cos ψ),
/// regular at the axis with ψ(0) = π/2 and the branch dψ/ds = +√k whose
/// meridian bends toward decreasing t (a dome over the plane below).
fn meridian_rhs(k: f64, y: &[f64; 3]) -> [f64; 3] {
    let [_, r, psi] = *y;
    let cp = psi.cos();
    [cp / r.cosh(), psi.sin(), r.tanh() * (cp - k / cp)]
}

/// Integrate the meridian from the axis until `r` reaches `r_stop`,
/// recording the dense path. Fixed-step fourth-order Runge-Kutta; the
/// shooting in `t` is exact because the (r, ψ) subsystem is autonomous.
pub fn solve_profile(k: f64, t_gamma: f64, r_gamma: f64) -> ProfileOracle {
    let h = 2e-5;
    let sqrt_k = k.sqrt();
    // Series start just off the axis (errors O(s0³)).
    let s0 = 1e-6;
    let mut y = [
        -sqrt_k * s0 * s0 / 2.0,
        s0,
        std::f64::consts::FRAC_PI_2 + sqrt_k * s0,
    ];
    let mut path = vec![(y[0], y[1])];
    let mut guard = 0usize;
    while y[1] < r_gamma {
        let k1 = meridian_rhs(k, &y);
        let mut y2 = y;
        for i in 0..3 {
            y2[i] += 0.5 * h * k1[i];
        }
        let k2 = meridian_rhs(k, &y2);
        let mut y3 = y;
        for i in 0..3 {
            y3[i] += 0.5 * h * k2[i];
        }
        let k3 = meridian_rhs(k, &y3);
        let mut y4 = y;
        for i in 0..3 {
            y4[i] += h * k3[i];
        }
        let k4 = meridian_rhs(k, &y4);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        path.push((y[0], y[1]));
        guard += 1;
        assert!(guard < 10_000_000, "meridian integration runaway");
    }
    // Interpolate the boundary crossing and shift t so the profile passes
    // through (t_gamma, r_gamma).
    let (last, prev) = (path[path.len() - 1], path[path.len() - 2]);
    let w = (r_gamma - prev.1) / (last.1 - prev.1);
    let t_end = prev.0 + w * (last.0 - prev.0);
    let shift = t_gamma - t_end;
    let t_pole = shift;

    // Convert to half-plane chart points, enforcing x-monotonicity.
    let mut polyline = Vec::with_capacity(path.len() / 16 + 2);
    let mut prev_x = f64::NEG_INFINITY;
    for (idx, (t, r)) in path.iter().enumerate() {
        if idx % 16 != 0 && idx + 1 != path.len() {
            continue;
        }
        let p = halfspace::fermi_to_chart(&FermiPoint { t: t + shift, r: *r, phi: 0.0 });
        assert!(p.x >= prev_x - 1e-12, "meridian not x-monotone");
        prev_x = p.x;
        polyline.push((p.x, p.z));
    }
    ProfileOracle { polyline, t_pole }
}

impl ProfileOracle {
    /// Height of the profile over chart abscissa `x` by linear interpolation.
    pub fn z_at(&self, x: f64) -> f64 {
        let pl = &self.polyline;
        match pl.binary_search_by(|(px, _)| px.partial_cmp(&x).unwrap()) {
            Ok(i) => pl[i].1,
            Err(0) => pl[0].1,
            Err(i) if i >= pl.len() => pl[pl.len() - 1].1,
            Err(i) => {
                let (x0, z0) = pl[i - 1];
                let (x1, z1) = pl[i];
                z0 + (z1 - z0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Ray parameter at which the geodesic from `point` (rotated into the
    /// meridian plane) along `ray` crosses the profile, by bisection.
    pub fn ray_intersection(
        &self,
        point: &ChartPoint,
        ray: &nalgebra::Vector3<f64>,
        max_t: f64,
    ) -> Option<f64> {
        // Rotate the vertex and ray into the φ = 0 meridian plane.
        let rho = (point.x * point.x + point.y * point.y).sqrt();
        let (p2, ray2) = if rho < 1e-14 {
            (
                ChartPoint::new(0.0, 0.0, point.z).unwrap(),
                nalgebra::Vector3::new((ray.x * ray.x + ray.y * ray.y).sqrt(), 0.0, ray.z),
            )
        } else {
            let cosp = point.x / rho;
            let sinp = point.y / rho;
            (
                ChartPoint::new(rho, 0.0, point.z).unwrap(),
                nalgebra::Vector3::new(cosp * ray.x + sinp * ray.y, 0.0, ray.z),
            )
        };
        let side = |t: f64| -> f64 {
            let q = halfspace::exp_map(&TangentVector::new(p2, ray2), t).point;
            q.z - self.z_at(q.x)
        };
        let s0 = side(0.0);
        let mut lo = 0.0;
        let mut hi = f64::NAN;
        for i in 1..=512 {
            let t = max_t * i as f64 / 512.0;
            if side(t) * s0 < 0.0 {
                hi = t;
                break;
            }
            lo = t;
        }
        if hi.is_nan() {
            return None;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if side(mid) * s0 < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}
