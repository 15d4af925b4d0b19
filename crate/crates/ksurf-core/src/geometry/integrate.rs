//! Embedded Dormand–Prince 5(4) integrator with adaptive step control.
//!
//! Used for geodesics (and transport equations) in perturbed metrics where no
//! closed form exists. State dimension is fixed at compile time by the caller.

use crate::error::GeometryError;

/// Dormand–Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MIN_STEP: f64 = 1e-13;
const SAFETY: f64 = 0.9;

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` with absolute tolerance
/// `atol`. Returns the final state. Errors if the step size underflows.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    atol: f64,
) -> Result<[f64; N], GeometryError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y);
    }
    let dir = span.signum();
    let mut h = (span.abs() / 16.0).min(0.1).max(MIN_STEP) * dir;
    let mut k = [[0.0; N]; 7];
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        k[0] = f(t, &y);
        for stage in 0..6 {
            let mut ys = y;
            for j in 0..=stage {
                let a = A[stage][j];
                if a != 0.0 {
                    for n in 0..N {
                        ys[n] += h * a * k[j][n];
                    }
                }
            }
            k[stage + 1] = f(t + h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for n in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for j in 0..7 {
                d5 += B5[j] * k[j][n];
                d4 += B4[j] * k[j][n];
            }
            y5[n] += h * d5;
            err = err.max((h * (d5 - d4)).abs());
        }
        if err <= atol || h.abs() <= MIN_STEP * 8.0 {
            t += h;
            y = y5;
        }
        let scale = if err > 0.0 { SAFETY * (atol / err).powf(0.2) } else { 4.0 };
        h *= scale.clamp(0.2, 4.0);
        if h.abs() < MIN_STEP {
            return Err(GeometryError::IntegratorFailure {
                reason: format!("step underflow at t = {t} (|h| = {})", h.abs()),
            });
        }
    }
    Ok(y)
}
