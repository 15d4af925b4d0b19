//! Conformally perturbed half-space metrics.
//!
//! The metric is `w(p) · δ_ij / z²` for a smooth positive factor `w` given by
//! a Gaussian bump profile. Curvature is evaluated numerically from the
//! analytic Christoffel symbols; geodesics are integrated; the logarithm map
//! is recovered by shooting.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::halfspace::{self, ChartPoint, TangentVector};
use super::integrate::integrate;
use crate::error::GeometryError;

/// Parametric conformal factor `w(p) = exp(a · exp(−|p − p0|²/(2 s²)))`.
///
/// `a = 0` gives exactly the hyperbolic half-space metric.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WarpFactor {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
}

impl WarpFactor {
    pub fn identity() -> Self {
        Self { amplitude: 0.0, center: [0.0, 0.0, 1.0], width: 1.0 }
    }

    /// log w and its chart gradient at `p`.
    fn log_factor(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let c = Vector3::new(self.center[0], self.center[1], self.center[2]);
        let d = p - c;
        let s2 = self.width * self.width;
        let bump = (-d.norm_squared() / (2.0 * s2)).exp();
        let psi = self.amplitude * bump;
        let grad = -psi / s2 * d;
        (psi, grad)
    }

    pub fn eval(&self, p: &ChartPoint) -> f64 {
        self.log_factor(&p.coords()).0.exp()
    }
}

/// Metric tensor `w(p)/z² · I`.
pub fn metric(w: &WarpFactor, p: &ChartPoint) -> Matrix3<f64> {
    Matrix3::identity() * (w.eval(p) / (p.z * p.z))
}

/// Christoffel symbols of the conformal metric, from the analytic gradient
/// of `log w` plus the half-space part.
///
/// For g = e^{2φ} g₀ with φ = ½ log w:
/// Γ^i_{jk} = Γ₀^i_{jk} + δ^i_j ∂_k φ + δ^i_k ∂_j φ − δ_{jk} g₀^{il} ∂_l φ,
/// and since g₀ is conformal to the flat metric the last term reduces to
/// the chart gradient.
pub fn christoffels(w: &WarpFactor, p: &ChartPoint) -> [Matrix3<f64>; 3] {
    let mut gamma = halfspace::christoffels(p);
    let (_, grad_logw) = w.log_factor(&p.coords());
    let dphi = grad_logw * 0.5;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut extra = 0.0;
                if i == j {
                    extra += dphi[k];
                }
                if i == k {
                    extra += dphi[j];
                }
                if j == k {
                    extra -= dphi[i];
                }
                gamma[i][(j, k)] += extra;
            }
        }
    }
    gamma
}

/// Riemann curvature applied to vectors: `R(x, y) z` at `p`, by central
/// differences of the Christoffel symbols (step 1e−5).
pub fn riemann(w: &WarpFactor, p: &ChartPoint, x: &Vector3<f64>, y: &Vector3<f64>, zv: &Vector3<f64>) -> Vector3<f64> {
    let h = 1e-5;
    // dGamma[l][i](j,k) = ∂_l Γ^i_{jk}
    let mut dgamma = [[Matrix3::<f64>::zeros(); 3]; 3];
    for l in 0..3 {
        let mut cp = p.coords();
        let mut cm = p.coords();
        cp[l] += h;
        cm[l] -= h;
        let gp = christoffels(w, &ChartPoint::raw(cp.x, cp.y, cp.z));
        let gm = christoffels(w, &ChartPoint::raw(cm.x, cm.y, cm.z));
        for i in 0..3 {
            dgamma[l][i] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    let gamma = christoffels(w, p);
    let mut out = Vector3::zeros();
    // R^i_{jkl} x^k y^l z^j with R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj}
    //                                        + Γ^i_{km} Γ^m_{lj} − Γ^i_{lm} Γ^m_{kj}
    for i in 0..3 {
        let mut acc = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut r = dgamma[k][i][(l, j)] - dgamma[l][i][(k, j)];
                    for m in 0..3 {
                        r += gamma[i][(k, m)] * gamma[m][(l, j)] - gamma[i][(l, m)] * gamma[m][(k, j)];
                    }
                    acc += r * x[k] * y[l] * zv[j];
                }
            }
        }
        out[i] = acc;
    }
    out
}

/// Sectional curvature of the plane spanned by `x`, `y` at `p`.
pub fn sectional(w: &WarpFactor, p: &ChartPoint, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    let g = metric(w, p);
    let ip = |a: &Vector3<f64>, b: &Vector3<f64>| (g * a).dot(b);
    let rxy_y = riemann(w, p, x, y, y);
    let num = ip(&rxy_y, x);
    let den = ip(x, x) * ip(y, y) - ip(x, y).powi(2);
    num / den
}

/// Geodesic flow by Dormand–Prince integration of the standard second-order
/// system. Returns the end point and end velocity.
pub fn exp_map(
    w: &WarpFactor,
    v: &TangentVector,
    t: f64,
    atol: f64,
) -> Result<(ChartPoint, Vector3<f64>), GeometryError> {
    let p = v.base;
    if t == 0.0 {
        return Ok((p, v.components));
    }
    let y0 = [p.x, p.y, p.z, v.components.x, v.components.y, v.components.z];
    let rhs = |_: f64, y: &[f64; 6]| {
        let q = ChartPoint::raw(y[0], y[1], y[2]);
        let vel = Vector3::new(y[3], y[4], y[5]);
        let gamma = christoffels(w, &q);
        let mut acc = Vector3::zeros();
        for i in 0..3 {
            acc[i] = -(gamma[i] * vel).dot(&vel);
        }
        [y[3], y[4], y[5], acc.x, acc.y, acc.z]
    };
    let y = integrate(rhs, 0.0, t, y0, atol)?;
    if !(y[2] > 0.0) {
        return Err(GeometryError::IntegratorFailure {
            reason: format!("geodesic left the chart (z = {})", y[2]),
        });
    }
    Ok((ChartPoint::raw(y[0], y[1], y[2]), Vector3::new(y[3], y[4], y[5])))
}

/// Logarithm map by shooting: Newton iteration on the initial chart velocity
/// so that the unit-time geodesic lands on `q`. The half-space closed form is
/// the initial guess. Returns `(unit_direction, distance)`.
pub fn log_map(
    w: &WarpFactor,
    p: &ChartPoint,
    q: &ChartPoint,
    atol: f64,
) -> Result<(Vector3<f64>, f64), GeometryError> {
    let (v0, d0) = halfspace::log_map(p, q);
    if d0 == 0.0 {
        return Ok((Vector3::zeros(), 0.0));
    }
    // Unknown: chart velocity for a unit-time flight.
    let mut vel = v0 * d0;
    let target = q.coords();
    let fly = |vel: &Vector3<f64>| -> Result<Vector3<f64>, GeometryError> {
        let (end, _) = exp_map(w, &TangentVector::new(*p, *vel), 1.0, atol)?;
        Ok(end.coords() - target)
    };
    let mut res = fly(&vel)?;
    for _ in 0..30 {
        if res.norm() < 1e-11 * (1.0 + target.norm()) {
            break;
        }
        let h = 1e-6 * (1.0 + vel.norm());
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut vp = vel;
            vp[k] += h;
            let rp = fly(&vp)?;
            jac.set_column(k, &((rp - res) / h));
        }
        let delta = jac.lu().solve(&res).ok_or_else(|| GeometryError::IntegratorFailure {
            reason: "singular shooting Jacobian in log map".into(),
        })?;
        vel -= delta;
        res = fly(&vel)?;
    }
    if res.norm() >= 1e-8 * (1.0 + target.norm()) {
        return Err(GeometryError::IntegratorFailure {
            reason: format!("log-map shooting stalled (residual {})", res.norm()),
        });
    }
    let g = metric(w, p);
    let dist = (g * vel).dot(&vel).sqrt();
    Ok((vel / dist, dist))
}

/// Distance in the warped metric (via the shooting logarithm).
pub fn distance(w: &WarpFactor, p: &ChartPoint, q: &ChartPoint, atol: f64) -> Result<f64, GeometryError> {
    Ok(log_map(w, p, q, atol)?.1)
}

/// Busemann function by the truncated-ray approximation
/// `b_T(p) = d(p, γ(T)) − T`, doubling T until successive values differ by
/// less than `tol`.
pub fn busemann_ray(
    w: &WarpFactor,
    p: &ChartPoint,
    ray_base: &ChartPoint,
    ray_dir: &Vector3<f64>,
    tol: f64,
    atol: f64,
) -> Result<(f64, f64), GeometryError> {
    let mut t_trunc = 2.0;
    let mut prev = f64::NAN;
    for _ in 0..8 {
        let (gp, _) = exp_map(w, &TangentVector::new(*ray_base, *ray_dir), t_trunc, atol)?;
        let val = distance(w, p, &gp, atol)? - t_trunc;
        if (val - prev).abs() < tol {
            return Ok((val, t_trunc));
        }
        prev = val;
        t_trunc *= 2.0;
    }
    Err(GeometryError::BusemannTruncation { delta: prev })
}
