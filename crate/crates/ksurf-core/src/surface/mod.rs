//! Immersed triangulated disks, radial graphs over their normal fields, and
//! the discrete differential machinery (fundamental forms, shape operator,
//! curvatures, Hessian stencils).

pub mod builders;
pub mod fitting;
pub mod measures;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{FitError, OperatorError};
use crate::geometry::halfspace::{ChartPoint, TangentVector};
use crate::geometry::AmbientModel;
use crate::mesh::DiskMesh;

/// Fitted differential data at one vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexForms {
    /// Metric-orthonormal frame of the fitted tangent plane.
    pub frame: [Vector3<f64>; 2],
    /// Shape operator in `frame`, symmetric by construction.
    pub shape: Matrix2<f64>,
    /// Extrinsic curvature det B.
    pub kappa: f64,
    /// Mean curvature tr B.
    pub mean: f64,
    /// Principal curvatures, descending.
    pub principal: [f64; 2],
    /// Asymmetry of the independent normal-derivative fit of B.
    pub symmetry_defect: f64,
    /// RMS height residual of the quadratic fit.
    pub fit_residual: f64,
}

/// Least-squares differentiation stencil at a vertex: weights reproducing
/// gradient and Hessian of a vertex field in the fitted tangent frame.
#[derive(Debug, Clone)]
pub struct DiffStencil {
    /// Sample vertex ids; the center vertex comes first.
    pub vertices: Vec<usize>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    pub wxx: Vec<f64>,
    pub wxy: Vec<f64>,
    pub wyy: Vec<f64>,
}

impl DiffStencil {
    pub fn hessian(&self, field: &[f64]) -> Matrix2<f64> {
        let mut hxx = 0.0;
        let mut hxy = 0.0;
        let mut hyy = 0.0;
        for (k, &v) in self.vertices.iter().enumerate() {
            let f = field[v];
            hxx += self.wxx[k] * f;
            hxy += self.wxy[k] * f;
            hyy += self.wyy[k] * f;
        }
        Matrix2::new(hxx, hxy, hxy, hyy)
    }

    pub fn gradient(&self, field: &[f64]) -> [f64; 2] {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, &v) in self.vertices.iter().enumerate() {
            gx += self.wx[k] * field[v];
            gy += self.wy[k] * field[v];
        }
        [gx, gy]
    }
}

/// A triangulated disk immersed in the ambient model.
#[derive(Debug, Clone)]
pub struct ImmersedSurface {
    pub mesh: DiskMesh,
    pub positions: Vec<ChartPoint>,
    /// Unit outward normals (chart components).
    pub normals: Vec<Vector3<f64>>,
    /// Filled by `fit_fundamental_forms`.
    pub forms: Option<Vec<VertexForms>>,
    /// Differentiation stencils, filled together with the forms.
    pub stencils: Option<Vec<DiffStencil>>,
}

impl ImmersedSurface {
    pub fn new(mesh: DiskMesh, positions: Vec<ChartPoint>, normals: Vec<Vector3<f64>>) -> Self {
        assert_eq!(mesh.num_vertices(), positions.len());
        assert_eq!(positions.len(), normals.len());
        Self { mesh, positions, normals, forms: None, stencils: None }
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn forms(&self) -> Result<&[VertexForms], OperatorError> {
        self.forms.as_deref().ok_or(OperatorError::FormsMissing)
    }

    pub fn stencils(&self) -> Result<&[DiffStencil], OperatorError> {
        self.stencils.as_deref().ok_or(OperatorError::FormsMissing)
    }

    /// Per-vertex extrinsic curvature det B.
    pub fn extrinsic_curvature(&self) -> Result<Vec<f64>, OperatorError> {
        Ok(self.forms()?.iter().map(|f| f.kappa).collect())
    }

    /// Per-vertex mean curvature tr B.
    pub fn mean_curvature(&self) -> Result<Vec<f64>, OperatorError> {
        Ok(self.forms()?.iter().map(|f| f.mean).collect())
    }
}

/// Which way the graph rays leave the base surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayOrientation {
    /// Along the base normal (used when the base is flatter than the target).
    Outward,
    /// Against the base normal, toward the concave side (used when the base
    /// is curved beyond the target level).
    Inward,
}

/// A scalar graph over the normal ray field of a base surface:
/// the surface `{exp(λ(u) · ray(u))}` with λ = 0 on the boundary loop.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    pub base: ImmersedSurface,
    pub orientation: RayOrientation,
    /// Unit ray directions at the base vertices.
    pub rays: Vec<Vector3<f64>>,
    /// Graph heights, ≥ 0, exactly zero on boundary vertices.
    pub lambda: Vec<f64>,
}

/// Result of embedding a radial graph.
#[derive(Debug, Clone)]
pub struct EmbeddedGraph {
    pub surface: ImmersedSurface,
    /// Focal field: arrival velocity of each ray (unit).
    pub focal: Vec<Vector3<f64>>,
    /// Foot of each graph vertex: its own base vertex under this
    /// discretization.
    pub foot: Vec<usize>,
}

impl RadialGraph {
    /// Graph over the base with the given orientation and λ ≡ 0.
    pub fn zero(base: ImmersedSurface, orientation: RayOrientation) -> Self {
        let rays = base
            .normals
            .iter()
            .map(|n| match orientation {
                RayOrientation::Outward => *n,
                RayOrientation::Inward => -*n,
            })
            .collect();
        let lambda = vec![0.0; base.num_vertices()];
        Self { base, orientation, rays, lambda }
    }

    /// Clamp boundary heights to exactly zero.
    pub fn enforce_boundary(&mut self) {
        for &b in &self.base.mesh.boundary_loop {
            self.lambda[b] = 0.0;
        }
    }

    /// Evaluate the graph: flow each base vertex along its ray for its
    /// height. λ = 0 reproduces the base positions bitwise in the exact
    /// model. Normals are seeded from the ray arrival directions oriented
    /// toward the convex side and are refined by the next forms fit.
    pub fn embed(&self, model: &AmbientModel) -> Result<EmbeddedGraph, FitError> {
        let n = self.base.num_vertices();
        let mut positions = Vec::with_capacity(n);
        let mut focal = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let sign = match self.orientation {
            RayOrientation::Outward => 1.0,
            RayOrientation::Inward => -1.0,
        };
        for i in 0..n {
            let ray = TangentVector::new(self.base.positions[i], self.rays[i]);
            let end = model.exp_map(&ray, self.lambda[i])?;
            let u = if self.lambda[i] == 0.0 {
                self.rays[i]
            } else {
                model.normalize(&end.point, &end.velocity)
            };
            positions.push(end.point);
            focal.push(u);
            normals.push(u * sign);
        }
        let surface = ImmersedSurface::new(self.base.mesh.clone(), positions, normals);
        Ok(EmbeddedGraph { surface, focal, foot: (0..n).collect() })
    }

    /// The inverse function read on the embedded surface (the height of a
    /// surface point equals the height of its foot) together with the
    /// discrete Lipschitz ratio max |μ(x) − μ(y)| / d(x, y) over mesh edges.
    pub fn inverse_function(
        &self,
        model: &AmbientModel,
        embedded: &EmbeddedGraph,
    ) -> Result<(Vec<f64>, f64), FitError> {
        let mu: Vec<f64> = embedded.foot.iter().map(|&f| self.lambda[f]).collect();
        let mut ratio: f64 = 0.0;
        let mut edges = std::collections::BTreeSet::new();
        for t in &self.base.mesh.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = if a < b { (a, b) } else { (b, a) };
                if !edges.insert(key) {
                    continue;
                }
                let d = model
                    .distance(&embedded.surface.positions[a], &embedded.surface.positions[b])?;
                if d > 0.0 {
                    ratio = ratio.max((mu[a] - mu[b]).abs() / d);
                }
            }
        }
        Ok((mu, ratio))
    }
}

/// Pointwise comparison of two graphs over the same base mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domination {
    Strict,
    Weak,
    Violated { witnesses: Vec<usize>, worst_gap: f64 },
}

/// Does `g1` dominate `g2` (λ₁ ≥ λ₂ pointwise, tolerance 1e−10)?
pub fn domination_check(g1: &RadialGraph, g2: &RadialGraph) -> Result<Domination, OperatorError> {
    if g1.lambda.len() != g2.lambda.len() {
        return Err(OperatorError::SolverBreakdown {
            reason: format!("mismatched graphs: {} vs {} vertices", g1.lambda.len(), g2.lambda.len()),
        });
    }
    const TOL: f64 = 1e-10;
    let mut witnesses = Vec::new();
    let mut worst: f64 = 0.0;
    let mut strict = true;
    for (i, (&a, &b)) in g1.lambda.iter().zip(&g2.lambda).enumerate() {
        if a < b - TOL {
            witnesses.push(i);
            worst = worst.max(b - a);
        }
        if g1.base.mesh.interior[i] && a <= b + TOL {
            strict = false;
        }
    }
    if !witnesses.is_empty() {
        return Ok(Domination::Violated { witnesses, worst_gap: worst });
    }
    Ok(if strict { Domination::Strict } else { Domination::Weak })
}
