//! Triangulated disks: connectivity, reference coordinates in the unit
//! parameter disk, and the two mesh generators (concentric-ring fans and
//! midpoint subdivision of a hexagon).

use serde::{Deserialize, Serialize};

use crate::error::MeshError;

/// A triangulated disk. Vertices carry reference coordinates in the closed
/// unit parameter disk; surface builders map these to positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskMesh {
    /// Reference coordinates (u, v) with u² + v² ≤ 1.
    pub params: Vec<[f64; 2]>,
    /// Oriented triangles (counterclockwise in the parameter disk).
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertices in cyclic order.
    pub boundary_loop: Vec<usize>,
    /// Per-vertex interior flag.
    pub interior: Vec<bool>,
}

/// The two reference-mesh layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskMeshKind {
    /// Concentric rings with 6j vertices on ring j; refinement n has 2^n rings.
    GeodesicPolarCap,
    /// Midpoint subdivision of the hexagon fan; boundary projected to the circle.
    PlanarDiskSample,
}

impl DiskMesh {
    pub fn num_vertices(&self) -> usize {
        self.params.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.push(if e.0 < e.1 { e } else { (e.1, e.0) });
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_vertices()).filter(|&i| self.interior[i])
    }

    /// One-ring adjacency (sorted, deduplicated).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Vertices within two edge-hops of each vertex, excluding the vertex.
    pub fn two_rings(&self) -> Vec<Vec<usize>> {
        self.rings_with_depth(|_| 2)
    }

    /// Neighborhoods for differential fitting: two rings in the interior,
    /// widened to three rings wherever the two-ring stencil is one-sided
    /// (touches the boundary).
    pub fn fit_neighborhoods(&self) -> Vec<Vec<usize>> {
        let two = self.two_rings();
        let depth = |v: usize| -> usize {
            if !self.interior[v] || two[v].iter().any(|&u| !self.interior[u]) {
                3
            } else {
                2
            }
        };
        self.rings_with_depth(depth)
    }

    fn rings_with_depth(&self, depth: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
        let adj = self.vertex_neighbors();
        let mut out = vec![Vec::new(); self.num_vertices()];
        for v in 0..self.num_vertices() {
            let d = depth(v);
            let mut ring: Vec<usize> = vec![v];
            let mut frontier: Vec<usize> = vec![v];
            for _ in 0..d {
                let mut next = Vec::new();
                for &u in &frontier {
                    next.extend_from_slice(&adj[u]);
                }
                next.sort_unstable();
                next.dedup();
                next.retain(|u| !ring.contains(u));
                ring.extend_from_slice(&next);
                ring.sort_unstable();
                ring.dedup();
                frontier = next;
            }
            ring.retain(|&u| u != v);
            out[v] = ring;
        }
        out
    }

    /// Validate disk topology, boundary structure, and orientation.
    pub fn validate(&self) -> Result<(), MeshError> {
        let chi = self.euler_characteristic();
        if chi != 1 {
            return Err(MeshError::NotADisk { chi });
        }
        if self.boundary_loop.is_empty() {
            return Err(MeshError::EmptyBoundary);
        }
        // Each directed edge must appear at most once (consistent orientation);
        // boundary edges are those whose reverse is absent.
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                directed.push(e);
            }
        }
        let mut sorted = directed.clone();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(MeshError::BadOrientation { a: w[0].0, b: w[0].1 });
            }
        }
        let set: std::collections::BTreeSet<(usize, usize)> = sorted.into_iter().collect();
        let boundary_edges: Vec<(usize, usize)> =
            directed.iter().filter(|(a, b)| !set.contains(&(*b, *a))).copied().collect();
        if boundary_edges.len() != self.boundary_loop.len() {
            return Err(MeshError::BadBoundary);
        }
        // The boundary loop must traverse exactly the boundary edges.
        let nb = self.boundary_loop.len();
        for i in 0..nb {
            let a = self.boundary_loop[i];
            let b = self.boundary_loop[(i + 1) % nb];
            if !boundary_edges.contains(&(b, a)) && !boundary_edges.contains(&(a, b)) {
                return Err(MeshError::BadBoundary);
            }
        }
        for (i, &flag) in self.interior.iter().enumerate() {
            let on_boundary = self.boundary_loop.contains(&i);
            if flag == on_boundary {
                return Err(MeshError::BadBoundary);
            }
        }
        Ok(())
    }

    /// Restriction to the vertices with parameter radius ≤ `r`, renumbered.
    /// Returns the submesh and the map from new vertex ids to old ones.
    /// The submesh boundary is recomputed from its own edge structure.
    pub fn submesh_by_radius(&self, r: f64) -> Result<(DiskMesh, Vec<usize>), MeshError> {
        let keep: Vec<bool> = self
            .params
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() <= r + 1e-12)
            .collect();
        let mut new_id = vec![usize::MAX; self.num_vertices()];
        let mut old_of = Vec::new();
        for v in 0..self.num_vertices() {
            if keep[v] {
                new_id[v] = old_of.len();
                old_of.push(v);
            }
        }
        let triangles: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .filter(|t| t.iter().all(|&v| keep[v]))
            .map(|t| [new_id[t[0]], new_id[t[1]], new_id[t[2]]])
            .collect();
        let params: Vec<[f64; 2]> = old_of.iter().map(|&v| self.params[v]).collect();
        let boundary_loop = boundary_loop_from_triangles(params.len(), &triangles)?;
        let mut interior = vec![true; params.len()];
        for &b in &boundary_loop {
            interior[b] = false;
        }
        let sub = DiskMesh { params, triangles, boundary_loop, interior };
        sub.validate()?;
        Ok((sub, old_of))
    }
}

/// Recover the (single) boundary cycle from oriented triangles.
pub fn boundary_loop_from_triangles(
    nv: usize,
    triangles: &[[usize; 3]],
) -> Result<Vec<usize>, MeshError> {
    let mut set = std::collections::BTreeSet::new();
    for t in triangles {
        for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            set.insert(e);
        }
    }
    // Boundary directed edges, keyed by source for the walk.
    let mut next = std::collections::BTreeMap::new();
    let mut count = 0usize;
    for &(a, b) in &set {
        if !set.contains(&(b, a)) {
            next.insert(a, b);
            count += 1;
        }
    }
    if count == 0 {
        return Err(MeshError::EmptyBoundary);
    }
    let &start = next.keys().next().unwrap();
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        cycle.push(cur);
        cur = *next.get(&cur).ok_or(MeshError::BadBoundary)?;
        if cycle.len() > nv {
            return Err(MeshError::BadBoundary);
        }
    }
    if cycle.len() != count {
        return Err(MeshError::BadBoundary);
    }
    Ok(cycle)
}

/// Build a reference disk mesh.
///
/// `GeodesicPolarCap`: rings j = 1..=N at radius j/N carrying 6j vertices,
/// N = 2^refinement; refinement 0 is the single-interior-vertex fan.
/// `PlanarDiskSample`: the hexagon fan subdivided `refinement` times with
/// boundary vertices projected to the unit circle.
pub fn make_disk_mesh(kind: DiskMeshKind, refinement: u32) -> DiskMesh {
    match kind {
        DiskMeshKind::GeodesicPolarCap => ring_mesh(1 << refinement),
        DiskMeshKind::PlanarDiskSample => subdivided_hexagon(refinement),
    }
}

/// Concentric-ring triangulation with `n_rings` rings.
pub fn ring_mesh(n_rings: usize) -> DiskMesh {
    let n = n_rings.max(1);
    let mut params = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; n + 1];
    for j in 1..=n {
        ring_start[j] = params.len();
        let count = 6 * j;
        let radius = j as f64 / n as f64;
        for i in 0..count {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            params.push([radius * phi.cos(), radius * phi.sin()]);
        }
    }
    let mut triangles = Vec::new();
    // Innermost fan.
    for i in 0..6 {
        triangles.push([0, 1 + i, 1 + (i + 1) % 6]);
    }
    // Annulus between ring j (6j vertices) and ring j+1 (6j+6 vertices):
    // walk both rings sector by sector.
    for j in 1..n {
        let inner = ring_start[j];
        let outer = ring_start[j + 1];
        let ni = 6 * j;
        let no = 6 * (j + 1);
        for sector in 0..6 {
            // Sector s covers inner indices [s*j, (s+1)*j] and outer [s*(j+1), (s+1)*(j+1)].
            for t in 0..j {
                let i0 = inner + (sector * j + t) % ni;
                let i1 = inner + (sector * j + t + 1) % ni;
                let o0 = outer + (sector * (j + 1) + t) % no;
                let o1 = outer + (sector * (j + 1) + t + 1) % no;
                triangles.push([i0, o0, o1]);
                triangles.push([i0, o1, i1]);
            }
            // Closing triangle of the sector.
            let i_last = inner + ((sector + 1) * j) % ni;
            let o_last = outer + (sector * (j + 1) + j) % no;
            let o_next = outer + ((sector + 1) * (j + 1)) % no;
            triangles.push([i_last, o_last, o_next]);
        }
    }
    let boundary_loop: Vec<usize> = (ring_start[n]..params.len()).collect();
    let mut interior = vec![true; params.len()];
    for &b in &boundary_loop {
        interior[b] = false;
    }
    DiskMesh { params, triangles, boundary_loop, interior }
}

/// Hexagon fan subdivided by edge midpoints; boundary projected to the circle.
pub fn subdivided_hexagon(refinement: u32) -> DiskMesh {
    let mut params: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for i in 0..6 {
        let phi = std::f64::consts::PI / 3.0 * i as f64;
        params.push([phi.cos(), phi.sin()]);
    }
    let mut triangles: Vec<[usize; 3]> = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
    for _ in 0..refinement {
        let mut mid = std::collections::BTreeMap::new();
        let mut new_tris = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut m = [0usize; 3];
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                let key = if a < b { (a, b) } else { (b, a) };
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let p = [
                        0.5 * (params[a][0] + params[b][0]),
                        0.5 * (params[a][1] + params[b][1]),
                    ];
                    params.push(p);
                    params.len() - 1
                });
            }
            new_tris.push([t[0], m[0], m[2]]);
            new_tris.push([t[1], m[1], m[0]]);
            new_tris.push([t[2], m[2], m[1]]);
            new_tris.push([m[0], m[1], m[2]]);
        }
        triangles = new_tris;
    }
    // Project boundary vertices onto the unit circle.
    let boundary_loop = boundary_loop_from_triangles(params.len(), &triangles).expect("hexagon boundary");
    for &b in &boundary_loop {
        let p = params[b];
        let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
        params[b] = [p[0] / n, p[1] / n];
    }
    let mut interior = vec![true; params.len()];
    for &b in &boundary_loop {
        interior[b] = false;
    }
    DiskMesh { params, triangles, boundary_loop, interior }
}

/// Ring mesh with prescribed per-ring radii and vertex counts; used by
/// surface builders that need metrically uniform sampling. `radii` excludes
/// the center; `counts[j]` vertices sit on `radii[j]`, counts nondecreasing.
pub fn graded_ring_mesh(radii: &[f64], counts: &[usize]) -> DiskMesh {
    assert_eq!(radii.len(), counts.len());
    assert!(!radii.is_empty());
    let mut params = vec![[0.0, 0.0]];
    let mut ring_start = Vec::with_capacity(radii.len());
    for (j, (&r, &cnt)) in radii.iter().zip(counts).enumerate() {
        assert!(cnt >= 3, "ring {j} too small");
        if j > 0 {
            assert!(cnt >= counts[j - 1], "ring counts must be nondecreasing");
        }
        ring_start.push(params.len());
        for i in 0..cnt {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / cnt as f64;
            params.push([r * phi.cos(), r * phi.sin()]);
        }
    }
    let mut triangles = Vec::new();
    for i in 0..counts[0] {
        triangles.push([0, ring_start[0] + i, ring_start[0] + (i + 1) % counts[0]]);
    }
    for j in 0..radii.len() - 1 {
        triangulate_annulus(
            &mut triangles,
            ring_start[j],
            counts[j],
            ring_start[j + 1],
            counts[j + 1],
        );
    }
    let n_last = *counts.last().unwrap();
    let boundary_loop: Vec<usize> = (0..n_last).map(|i| ring_start[radii.len() - 1] + i).collect();
    let mut interior = vec![true; params.len()];
    for &b in &boundary_loop {
        interior[b] = false;
    }
    DiskMesh { params, triangles, boundary_loop, interior }
}

/// Triangulate the annulus between an inner ring of `ni` vertices starting at
/// `inner` and an outer ring of `no ≥ ni` vertices starting at `outer`, both
/// uniformly spaced in angle. Greedy advance by angular order.
fn triangulate_annulus(
    triangles: &mut Vec<[usize; 3]>,
    inner: usize,
    ni: usize,
    outer: usize,
    no: usize,
) {
    let mut i = 0usize; // steps taken on inner ring
    let mut o = 0usize; // steps taken on outer ring
    let angle_i = |k: usize| k as f64 / ni as f64;
    let angle_o = |k: usize| k as f64 / no as f64;
    while i < ni || o < no {
        let advance_outer = if o == no {
            false
        } else if i == ni {
            true
        } else {
            // Advance the ring whose next vertex comes first in angle.
            angle_o(o + 1) <= angle_i(i + 1)
        };
        let iv = inner + i % ni;
        let ov = outer + o % no;
        if advance_outer {
            let ov_next = outer + (o + 1) % no;
            triangles.push([iv, ov, ov_next]);
            o += 1;
        } else {
            let iv_next = inner + (i + 1) % ni;
            triangles.push([iv_next, iv, ov]);
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn refinement_zero_is_a_fan() {
        for kind in [DiskMeshKind::GeodesicPolarCap, DiskMeshKind::PlanarDiskSample] {
            let m = make_disk_mesh(kind, 0);
            assert_eq!(m.num_vertices(), 7);
            assert_eq!(m.num_triangles(), 6);
            assert_eq!(m.interior_vertices().count(), 1);
            assert_eq!(m.euler_characteristic(), 1);
            m.validate().unwrap();
        }
    }

    #[test]
    fn subdivision_edge_count_law() {
        // E_n = 9·4^n + 3·2^n for the subdivided hexagon.
        for n in 0..5u32 {
            let m = make_disk_mesh(DiskMeshKind::PlanarDiskSample, n);
            let expected = 9 * 4usize.pow(n) + 3 * 2usize.pow(n);
            assert_eq!(m.num_edges(), expected, "refinement {n}");
            assert_eq!(m.boundary_loop.len(), 6 * 2usize.pow(n));
            m.validate().unwrap();
        }
    }

    #[test]
    fn ring_mesh_counts() {
        for n in 0..5u32 {
            let m = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, n);
            let rings = 1usize << n;
            assert_eq!(m.num_vertices(), 1 + 3 * rings * (rings + 1));
            assert_eq!(m.num_triangles(), 6 * rings * rings);
            assert_eq!(m.euler_characteristic(), 1);
            m.validate().unwrap();
        }
    }

    #[test]
    fn graded_ring_mesh_is_valid_disk() {
        let m = graded_ring_mesh(&[0.3, 0.55, 0.8, 1.0], &[6, 10, 17, 23]);
        m.validate().unwrap();
        assert_eq!(m.boundary_loop.len(), 23);
    }

    #[test]
    fn submesh_by_radius_keeps_disk_topology() {
        let m = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 3);
        let (sub, old) = m.submesh_by_radius(0.5).unwrap();
        sub.validate().unwrap();
        assert!(sub.num_vertices() < m.num_vertices());
        assert_eq!(old.len(), sub.num_vertices());
        // Radius 0.5 of 8 rings keeps rings 0..=4.
        assert_eq!(sub.num_vertices(), 1 + 3 * 4 * 5);
    }

    #[test]
    fn two_ring_sizes() {
        let m = make_disk_mesh(DiskMeshKind::GeodesicPolarCap, 2);
        let rings = m.two_rings();
        for v in m.interior_vertices() {
            assert!(rings[v].len() >= 5, "vertex {v} has thin 2-ring {}", rings[v].len());
        }
        // Boundary vertices must also satisfy the fit precondition.
        for &v in &m.boundary_loop {
            assert!(rings[v].len() >= 5);
        }
    }

    proptest! {
        #[test]
        fn meshes_validate_across_refinements(n in 0u32..5, polar in proptest::bool::ANY) {
            let kind = if polar { DiskMeshKind::GeodesicPolarCap } else { DiskMeshKind::PlanarDiskSample };
            let m = make_disk_mesh(kind, n);
            prop_assert_eq!(m.euler_characteristic(), 1);
            prop_assert!(m.validate().is_ok());
            // All parameters inside the closed unit disk.
            for p in &m.params {
                prop_assert!(p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12);
            }
        }
    }
}
