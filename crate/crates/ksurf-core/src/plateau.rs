//! Asymptotic Plateau problems over embedded ideal disks: barrier
//! construction from the supporting-plane envelope (exact equidistants for
//! round data) and monotone exhaustion by compact Dirichlet stages.

use serde::Serialize;

use crate::error::{GlobalDataKind, PreconditionError, SolveError};
use crate::geometry::halfspace::{self, ChartPoint, TangentVector};
use crate::geometry::AmbientModel;
use crate::lens::{newton_solve, LensProblem, SolverConfig};
use crate::mesh::graded_ring_mesh;
use crate::surface::fitting::fit_fundamental_forms;
use crate::surface::{ImmersedSurface, RadialGraph, RayOrientation};

/// Boundary data at infinity: a curve on the ideal sphere given as a radial
/// graph over a round circle. Seen from the reference point (0, 0, 1), the
/// curve consists of the ideal endpoints of rays at angle α(φ) from the
/// upward axis; in the chart it is the polar curve of radius
/// ρ(φ) = exp(log cot(α/2) + Σ aₘ cos mφ + bₘ sin mφ) on the boundary
/// plane. The log-radius encoding keeps the family closed under the
/// rotations and dilations used by the equivariance checks.
#[derive(Debug, Clone, Serialize)]
pub struct IdealDiskData {
    /// Mean angular radius, in (0, π).
    pub alpha: f64,
    /// Fourier amplitudes (cos, sin) of the log-radius, modes 1, 2, ...
    pub fourier: Vec<(f64, f64)>,
    /// Which complementary disk carries the Gauss image; the standard
    /// configuration points toward the ideal point at infinity.
    pub toward_infinity: bool,
}

impl IdealDiskData {
    pub fn round(alpha: f64) -> Self {
        Self { alpha, fourier: Vec::new(), toward_infinity: true }
    }

    pub fn validate(&self) -> Result<(), PreconditionError> {
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::PI) {
            return Err(PreconditionError::BadIdealData {
                reason: format!("angular radius {} outside (0, pi)", self.alpha),
            });
        }
        let amp: f64 = self.fourier.iter().map(|(a, b)| a.abs() + b.abs()).sum();
        if !amp.is_finite() || amp > 0.5 {
            return Err(PreconditionError::BadIdealData {
                reason: format!("perturbation amplitude {amp} too large for a graph barrier"),
            });
        }
        Ok(())
    }

    pub fn is_round(&self) -> bool {
        self.fourier.iter().all(|(a, b)| *a == 0.0 && *b == 0.0)
    }

    /// Chart radius of the ideal curve at azimuth φ.
    pub fn radius(&self, phi: f64) -> f64 {
        let mut lr = (1.0 / (self.alpha / 2.0).tan()).ln();
        for (m, (a, b)) in self.fourier.iter().enumerate() {
            let mm = (m + 1) as f64;
            lr += a * (mm * phi).cos() + b * (mm * phi).sin();
        }
        lr.exp()
    }

    pub fn mean_radius(&self) -> f64 {
        1.0 / (self.alpha / 2.0).tan()
    }

    /// Azimuth rotation (an isometry of the data).
    pub fn rotate(&self, angle: f64) -> Self {
        let fourier = self
            .fourier
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let mm = (m + 1) as f64;
                let (s, c) = (mm * angle).sin_cos();
                // cos m(φ−θ), sin m(φ−θ) expansion.
                (a * c - b * s, b * c + a * s)
            })
            .collect();
        Self { alpha: self.alpha, fourier, toward_infinity: self.toward_infinity }
    }

    /// Dilation by `factor` from the chart origin (an isometry of the data).
    pub fn dilate(&self, factor: f64) -> Self {
        let rho = self.mean_radius() * factor;
        let alpha = 2.0 * (1.0 / rho).atan();
        Self { alpha, fourier: self.fourier.clone(), toward_infinity: self.toward_infinity }
    }
}

/// Refusal of the global data classes admitting no solution.
pub fn reject_global_data(kind: GlobalDataKind) -> PreconditionError {
    PreconditionError::GlobalIdealData { case: kind }
}

/// Plateau controls.
#[derive(Debug, Clone, Copy)]
pub struct PlateauConfig {
    /// In-surface radius of the compact barrier piece.
    pub barrier_radius: f64,
    /// Target in-surface edge length; refinement r gives 1.1 · 2^−r.
    pub target_h: f64,
    /// Extra push-off distance beyond artanh √k.
    pub pushoff_margin: f64,
    /// Stage-to-stage termination threshold on the probe region.
    pub stage_tol: f64,
    pub max_stages: usize,
    /// Parameter radius of the probe region.
    pub probe_radius: f64,
    /// Allowed monotonicity violation between stages.
    pub monotone_tol: f64,
    pub solver: SolverConfig,
}

impl PlateauConfig {
    pub fn at_refinement(refinement: u32) -> Self {
        Self {
            barrier_radius: 3.9,
            target_h: 1.1 * 0.5f64.powi(refinement as i32),
            pushoff_margin: 0.1,
            stage_tol: 1e-6,
            max_stages: 8,
            probe_radius: 0.5,
            monotone_tol: 1e-6,
            solver: SolverConfig::default(),
        }
    }
}

/// The certified barrier: a compact convex piece with curvature above the
/// target everywhere, whose ideal boundary data matches the input.
pub struct Barrier {
    pub surface: ImmersedSurface,
    pub pushoff: f64,
    pub certified_min_kappa: f64,
    /// Mean hemisphere radius of the spanning construction.
    pub rho: f64,
}

/// Build the barrier for the data at curvature level `k`.
///
/// Round data: the exact equidistant cap at ε₀ = artanh √k + margin over
/// the spanning hemisphere. Perturbed data: the supporting-hemisphere
/// envelope over the flat complementary region, sampled on the same polar
/// grid and pushed off by ε₀ along its supporting normals. Certification
/// refits the curvature and retries with a larger push-off before failing.
pub fn barrier_surface(
    model: &AmbientModel,
    data: &IdealDiskData,
    k: f64,
    config: &PlateauConfig,
) -> Result<Barrier, SolveError> {
    data.validate()?;
    let c = model.curvature_upper_bound();
    if !(k > 0.0 && k < c) {
        return Err(PreconditionError::CurvatureWindow { k, c }.into());
    }
    let mut margin = config.pushoff_margin;
    for _attempt in 0..3 {
        let eps0 = k.sqrt().atanh() + margin;
        let mut surface = sample_barrier(model, data, eps0, config)?;
        fit_fundamental_forms(model, &mut surface, &config.solver.fit)?;
        let forms = surface.forms().map_err(SolveError::Operator)?;
        let min_kappa = (0..surface.num_vertices())
            .map(|v| forms[v].kappa)
            .fold(f64::INFINITY, f64::min);
        if min_kappa > k {
            return Ok(Barrier {
                surface,
                pushoff: eps0,
                certified_min_kappa: min_kappa,
                rho: data.mean_radius(),
            });
        }
        margin += 0.05;
    }
    Err(SolveError::Precondition(PreconditionError::BadIdealData {
        reason: "barrier certification failed: push-off exhausted".into(),
    }))
}

/// Polar barrier mesh with rings uniform in the in-surface radius.
fn barrier_mesh(eps0: f64, config: &PlateauConfig) -> (crate::mesh::DiskMesh, f64) {
    let stretch = eps0.cosh();
    let n_rings = (config.barrier_radius / config.target_h).ceil().max(3.0) as usize;
    let s_max = config.barrier_radius / stretch;
    let mut radii = Vec::with_capacity(n_rings);
    let mut counts = Vec::with_capacity(n_rings);
    let mut prev = 6usize;
    for i in 1..=n_rings {
        let frac = i as f64 / n_rings as f64;
        radii.push(frac);
        let s = s_max * frac;
        let circumference = 2.0 * std::f64::consts::PI * s.sinh() * stretch;
        let n = ((circumference / config.target_h).round() as usize).max(prev).max(6);
        counts.push(n);
        prev = n;
    }
    (graded_ring_mesh(&radii, &counts), s_max)
}

fn sample_barrier(
    model: &AmbientModel,
    data: &IdealDiskData,
    eps0: f64,
    config: &PlateauConfig,
) -> Result<ImmersedSurface, SolveError> {
    let (mesh, s_max) = barrier_mesh(eps0, config);
    let n = mesh.num_vertices();
    let mut positions = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    if data.is_round() {
        let rho = data.mean_radius();
        for p in &mesh.params {
            let u = (p[0] * p[0] + p[1] * p[1]).sqrt().min(1.0);
            let s = s_max * u;
            let phi = p[1].atan2(p[0]);
            let foot = crate::surface::builders::hemisphere_point(rho, s, phi);
            let up = crate::surface::builders::hemisphere_normal(&foot);
            let end = model
                .exp_map(&TangentVector::new(foot, up), eps0)
                .map_err(crate::error::FitError::Geometry)?;
            positions.push(end.point);
            normals.push(model.normalize(&end.point, &end.velocity));
        }
    } else {
        let dome = DomeSampler::new(data);
        for p in &mesh.params {
            let u = (p[0] * p[0] + p[1] * p[1]).sqrt().min(1.0);
            let s = s_max * u;
            let phi = p[1].atan2(p[0]);
            // Scale the foot by the local curve radius so the carpet stays
            // inside the perturbed region.
            let rr = data.radius(phi) * s.tanh();
            let q = [rr * phi.cos(), rr * phi.sin()];
            let (foot, up) = dome.height_and_normal(q);
            let end = model
                .exp_map(&TangentVector::new(foot, up), eps0)
                .map_err(crate::error::FitError::Geometry)?;
            positions.push(end.point);
            normals.push(model.normalize(&end.point, &end.velocity));
        }
    }
    Ok(ImmersedSurface::new(mesh, positions, normals))
}

/// Supporting-hemisphere envelope of the flat region enclosed by the ideal
/// curve. The envelope is the upper boundary of the union of half-balls of
/// inscribed disks, and every maximal inscribed disk is internally tangent
/// to the curve, so the candidate family is the maximal tangent disk at
/// each curve azimuth. Heights take the max over that family with parabolic
/// refinement across the maximizer, which keeps the sampled envelope smooth
/// far below mesh resolution away from true creases.
struct DomeSampler {
    /// Maximal internally tangent disks (cx, cy, r), one per curve sample.
    disks: Vec<(f64, f64, f64)>,
}

impl DomeSampler {
    fn new(data: &IdealDiskData) -> Self {
        let n = 2048usize;
        let curve: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                let r = data.radius(phi);
                (r * phi.cos(), r * phi.sin())
            })
            .collect();
        let mut disks = Vec::with_capacity(n);
        for j in 0..n {
            let (xj, yj) = curve[j];
            // Inward normal from the discrete tangent.
            let (xp, yp) = curve[(j + 1) % n];
            let (xm, ym) = curve[(j + n - 1) % n];
            let (tx, ty) = (xp - xm, yp - ym);
            let mut nx = -ty;
            let mut ny = tx;
            // Orient toward the enclosed region (the origin side).
            if nx * xj + ny * yj > 0.0 {
                nx = -nx;
                ny = -ny;
            }
            let nn = (nx * nx + ny * ny).sqrt();
            nx /= nn;
            ny /= nn;
            // Largest disk tangent at sample j inside the region:
            // r = min over other samples of |x_m − x_j|² / (2⟨x_m − x_j, n⟩).
            let mut r = f64::INFINITY;
            for (m, &(xm2, ym2)) in curve.iter().enumerate() {
                if m == j {
                    continue;
                }
                let dx = xm2 - xj;
                let dy = ym2 - yj;
                let proj = dx * nx + dy * ny;
                if proj > 1e-12 {
                    r = r.min((dx * dx + dy * dy) / (2.0 * proj));
                }
            }
            disks.push((xj + r * nx, yj + r * ny, r));
        }
        Self { disks }
    }

    fn height_and_normal(&self, q: [f64; 2]) -> (ChartPoint, nalgebra::Vector3<f64>) {
        let n = self.disks.len();
        let g = |idx: usize| -> f64 {
            let (cx, cy, r) = self.disks[idx];
            r * r - (q[0] - cx) * (q[0] - cx) - (q[1] - cy) * (q[1] - cy)
        };
        let mut best = (f64::NEG_INFINITY, 0usize);
        for idx in 0..n {
            let v = g(idx);
            if v > best.0 {
                best = (v, idx);
            }
        }
        let j = best.1;
        // Parabolic refinement across the maximizer in the azimuth index.
        let (gm, g0, gp) = (g((j + n - 1) % n), g(j), g((j + 1) % n));
        let denom = gm - 2.0 * g0 + gp;
        let s = if denom.abs() > 1e-300 { (0.5 * (gm - gp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let lerp = |a: (f64, f64, f64), b: (f64, f64, f64), w: f64| {
            (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1), a.2 + w * (b.2 - a.2))
        };
        let (cx, cy, r) = if s >= 0.0 {
            lerp(self.disks[j], self.disks[(j + 1) % n], s)
        } else {
            lerp(self.disks[j], self.disks[(j + n - 1) % n], -s)
        };
        let h2 = r * r - (q[0] - cx) * (q[0] - cx) - (q[1] - cy) * (q[1] - cy);
        let z = h2.max(1e-12).sqrt();
        let p = ChartPoint::raw(q[0], q[1], z);
        // Supporting hemisphere centered at (cx, cy, 0): upward unit normal
        // is the metric-normalized Euclid-radial direction.
        let radial = nalgebra::Vector3::new(q[0] - cx, q[1] - cy, z);
        let normal = radial * (z / radial.norm());
        (p, normal)
    }
}

/// One exhaustion stage.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauStage {
    pub subdomain_radius: f64,
    pub active_vertices: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    /// Sup change on the probe region against the previous stage.
    pub probe_diff: f64,
    pub max_probe_height: f64,
}

#[derive(Debug, Clone, Serialize)]
pub enum PlateauTermination {
    StageConverged,
    DomainExhausted,
    StageBudget,
}

/// Exhaustion record: the monotone probe trace plus certification data.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauReport {
    pub stages: Vec<PlateauStage>,
    /// Heights at the probe vertices, one row per stage.
    pub probe_trace: Vec<Vec<f64>>,
    pub probe_vertices: Vec<usize>,
    pub monotone_ok: bool,
    pub worst_monotone_violation: f64,
    pub cone_bound: f64,
    pub bound_satisfied: bool,
    pub termination: PlateauTermination,
    pub barrier_pushoff: f64,
    pub barrier_min_kappa: f64,
}

/// Solve the asymptotic problem by monotone exhaustion: Dirichlet stages on
/// the growing subdisks r_j = 1 − 2^{−j} of the barrier (final stage the
/// full piece), each warm-started from the last, with the probe heights
/// checked for monotone growth and against the cone bound.
pub fn exhaustion_solve(
    model: &AmbientModel,
    data: &IdealDiskData,
    k: f64,
    config: &PlateauConfig,
) -> Result<(RadialGraph, PlateauReport), SolveError> {
    let barrier = barrier_surface(model, data, k, config)?;
    let full = &barrier.surface;
    let nv = full.num_vertices();
    let probe_vertices: Vec<usize> = (0..nv)
        .filter(|&v| {
            let p = full.mesh.params[v];
            (p[0] * p[0] + p[1] * p[1]).sqrt() <= config.probe_radius
        })
        .collect();
    let cone_bound = cone_barrier_delta(model, measured_alpha0() * 0.999, 0.0, 8, k)?.delta;

    let mut lambda_full = vec![0.0f64; nv];
    let mut stages = Vec::new();
    let mut probe_trace: Vec<Vec<f64>> = Vec::new();
    let mut monotone_ok = true;
    let mut worst_violation = 0.0f64;
    let mut termination = PlateauTermination::StageBudget;
    let mut graph_out: Option<RadialGraph> = None;

    for j in 1..=config.max_stages {
        let r_j = if j == config.max_stages { 1.0 } else { 1.0 - 0.5f64.powi(j as i32) };
        let (submesh, old_of) = full
            .mesh
            .submesh_by_radius(r_j)
            .map_err(|e| PreconditionError::BadConfig { reason: e.to_string() })?;
        let positions = old_of.iter().map(|&v| full.positions[v]).collect();
        let normals = old_of.iter().map(|&v| full.normals[v]).collect();
        let stage_base = ImmersedSurface::new(submesh, positions, normals);
        let problem =
            LensProblem::with_convex_base(model.clone(), stage_base, k, 1e-3, &config.solver.fit)?;
        let mut seed = RadialGraph::zero(problem.base.clone(), RayOrientation::Inward);
        for (new, &old) in old_of.iter().enumerate() {
            seed.lambda[new] = lambda_full[old];
        }
        seed.enforce_boundary();
        let (graph, rep) = newton_solve(&problem, &seed, &config.solver)?;

        // Monotone growth against the previous stage on the common interior.
        let mut new_full = lambda_full.clone();
        for (new, &old) in old_of.iter().enumerate() {
            if graph.base.mesh.interior[new] {
                let gap = lambda_full[old] - graph.lambda[new];
                if gap > config.monotone_tol {
                    monotone_ok = false;
                    worst_violation = worst_violation.max(gap);
                    return Err(SolveError::MonotonicityViolation { vertex: old, gap });
                }
                new_full[old] = graph.lambda[new];
            }
        }
        lambda_full = new_full;

        let probe_heights: Vec<f64> = probe_vertices.iter().map(|&v| lambda_full[v]).collect();
        let probe_diff = match probe_trace.last() {
            Some(prev) => prev
                .iter()
                .zip(&probe_heights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max),
            None => f64::INFINITY,
        };
        let max_probe = probe_heights.iter().cloned().fold(0.0f64, f64::max);
        stages.push(PlateauStage {
            subdomain_radius: r_j,
            active_vertices: old_of.len(),
            newton_iterations: rep.iterations,
            residual: rep.final_residual,
            probe_diff,
            max_probe_height: max_probe,
        });
        probe_trace.push(probe_heights);
        graph_out = Some(graph);
        if r_j >= 1.0 {
            termination = PlateauTermination::DomainExhausted;
            break;
        }
        if probe_diff < config.stage_tol {
            termination = PlateauTermination::StageConverged;
            break;
        }
    }

    let max_probe = probe_trace
        .last()
        .map(|t| t.iter().cloned().fold(0.0f64, f64::max))
        .unwrap_or(0.0);
    let report = PlateauReport {
        stages,
        probe_trace,
        probe_vertices,
        monotone_ok,
        worst_monotone_violation: worst_violation,
        cone_bound,
        bound_satisfied: max_probe <= cone_bound + 1e-6,
        termination,
        barrier_pushoff: barrier.pushoff,
        barrier_min_kappa: barrier.certified_min_kappa,
    };
    // The caller receives the final stage graph (full barrier domain).
    let graph = graph_out.expect("at least one stage runs");
    Ok((graph, report))
}

/// Signed distance from the final surface to the exact solution for round
/// data (the equidistant at artanh √k over the spanning hemisphere), per
/// vertex of the final stage.
pub fn round_data_position_errors(
    data: &IdealDiskData,
    k: f64,
    graph: &RadialGraph,
    model: &AmbientModel,
) -> Result<Vec<f64>, SolveError> {
    let rho = data.mean_radius();
    let r_star = k.sqrt().atanh();
    let embedded = graph.embed(model)?;
    Ok(embedded
        .surface
        .positions
        .iter()
        .map(|p| (halfspace::signed_distance_to_hemisphere(p, rho) - r_star).abs())
        .collect())
}

/// The empirical embedding threshold: the largest cone angle for which the
/// reference point stays inside the convex hull of the complementary ideal
/// disk. In constant curvature the hull of the flat disk of chart radius R
/// is the half-ball, so the test is |p| ≤ R; the sweep brackets π/2.
pub fn measured_alpha0() -> f64 {
    let p = ChartPoint::raw(0.0, 0.0, 1.0);
    let inside = |alpha: f64| -> bool {
        let r = 1.0 / (alpha / 2.0).tan();
        p.coords().norm() <= r + 1e-12
    };
    let mut lo = 0.1f64;
    let mut hi = std::f64::consts::PI - 0.1;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Empirical estimate of the cone constant δ(α, β).
#[derive(Debug, Clone, Serialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// Relative spread of seeded bootstrap resamples of the geodesic fan.
    pub bootstrap_spread: f64,
    pub samples: usize,
}

/// Max crossing distance, over a fan of geodesics from the cone vertex with
/// angles ≤ β from the axis, to the asymptotic solution of the α-cone data
/// (closed form for round data). Requires 0 ≤ β < α < α₀.
pub fn cone_barrier_delta(
    model: &AmbientModel,
    alpha: f64,
    beta: f64,
    samples: usize,
    k: f64,
) -> Result<DeltaEstimate, SolveError> {
    let alpha0 = measured_alpha0();
    if !(beta >= 0.0 && beta < alpha && alpha <= alpha0) {
        return Err(PreconditionError::BadIdealData {
            reason: format!("need 0 <= beta < alpha <= alpha0 ({beta}, {alpha}, {alpha0})"),
        }
        .into());
    }
    let _ = model;
    let rho = 1.0 / (alpha / 2.0).tan();
    let r_star = k.sqrt().atanh();
    let vertex = ChartPoint::raw(0.0, 0.0, 1.0);
    let crossing = |angle: f64| -> Option<f64> {
        let dir = nalgebra::Vector3::new(angle.sin(), 0.0, angle.cos());
        crate::lens::ray_equidistant_intersection(&vertex, &dir, rho, r_star, 60.0)
    };
    let fan: Vec<f64> = if beta == 0.0 {
        vec![0.0]
    } else {
        (0..samples.max(2)).map(|i| beta * i as f64 / (samples.max(2) - 1) as f64).collect()
    };
    let mut delta = 0.0f64;
    for &a in &fan {
        let t = crossing(a).ok_or_else(|| {
            SolveError::Precondition(PreconditionError::BadIdealData {
                reason: format!("fan geodesic at angle {a} missed the cone solution"),
            })
        })?;
        delta = delta.max(t);
    }
    // Seeded bootstrap over resampled fans.
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0DE);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..24 {
        let mut d = 0.0f64;
        for _ in 0..fan.len() {
            let a = if beta == 0.0 { 0.0 } else { rng.gen_range(0.0..=beta) };
            if let Some(t) = crossing(a) {
                d = d.max(t);
            }
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let spread = if delta > 0.0 { (hi - lo) / delta } else { 0.0 };
    Ok(DeltaEstimate { delta, bootstrap_spread: spread, samples: fan.len() })
}
