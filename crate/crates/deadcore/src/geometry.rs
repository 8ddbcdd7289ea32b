//! Computational domains and their deformations: simplicial meshes of slabs
//! and disks, `W^{1,inf}` perturbation fields, mesh perturbation `x + tau
//! theta(x)`, and the transported coefficients of the fixed-domain weak form.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField};

pub type Point = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// A boundary facet: a node pair (the same node twice in 1D) with its
/// outward unit normal.
#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
}

/// Conforming simplicial mesh: segments in 1D, positively oriented triangles
/// in 2D. The third connectivity slot is unused in 1D.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    pub boundary_nodes: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub element_measures: Vec<f64>,
}

const UNUSED: usize = usize::MAX;

fn seg_length(a: Point, b: Point) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    (dx * dx + dy * dy).sqrt()
}

fn tri_signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl Mesh {
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn barycenter(&self, e: usize) -> Point {
        let idx = self.element_nodes(e);
        let mut c = [0.0, 0.0];
        for &i in idx {
            c[0] += self.nodes[i][0];
            c[1] += self.nodes[i][1];
        }
        let n = idx.len() as f64;
        [c[0] / n, c[1] / n]
    }

    /// Recompute all element measures from coordinates; fails on inversion.
    pub fn measure_of(&self, e: usize) -> f64 {
        let idx = self.element_nodes(e);
        match self.dim {
            1 => self.nodes[idx[1]][0] - self.nodes[idx[0]][0],
            _ => tri_signed_area(self.nodes[idx[0]], self.nodes[idx[1]], self.nodes[idx[2]]),
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.element_measures.iter().sum()
    }

    /// Lumped (row-sum) mass per node: each element spreads its measure
    /// evenly over its vertices.
    pub fn lumped_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nodes.len()];
        let share = 1.0 / (self.dim + 1) as f64;
        for e in 0..self.elements.len() {
            let w = self.element_measures[e] * share;
            for &i in self.element_nodes(e) {
                m[i] += w;
            }
        }
        m
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut b = vec![false; self.nodes.len()];
        for &i in &self.boundary_nodes {
            b[i] = true;
        }
        b
    }

    /// Shortest and longest element edge.
    pub fn h_min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for e in 0..self.elements.len() {
            let idx = self.element_nodes(e);
            for i in 0..idx.len() {
                for j in (i + 1)..idx.len() {
                    let l = seg_length(self.nodes[idx[i]], self.nodes[idx[j]]);
                    lo = lo.min(l);
                    hi = hi.max(l);
                }
            }
        }
        (lo, hi)
    }

    /// Check the structural invariants: positive measures, conformity
    /// (interior facets shared by exactly two elements, boundary facets by
    /// one) and consistency of the boundary node set.
    pub fn validate(&self) -> Result<()> {
        for (e, &m) in self.element_measures.iter().enumerate() {
            if m <= 0.0 {
                return Err(Error::InvertedElement(e));
            }
        }
        let mut facet_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in 0..self.elements.len() {
            let idx = self.element_nodes(e);
            let facets: Vec<(usize, usize)> = match self.dim {
                1 => vec![(idx[0], idx[0]), (idx[1], idx[1])],
                _ => vec![
                    (idx[0].min(idx[1]), idx[0].max(idx[1])),
                    (idx[1].min(idx[2]), idx[1].max(idx[2])),
                    (idx[2].min(idx[0]), idx[2].max(idx[0])),
                ],
            };
            for f in facets {
                *facet_count.entry(f).or_insert(0) += 1;
            }
        }
        let boundary_facets: BTreeSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|be| (be.nodes[0].min(be.nodes[1]), be.nodes[0].max(be.nodes[1])))
            .collect();
        for (f, c) in &facet_count {
            let on_boundary = boundary_facets.contains(f);
            match (c, on_boundary) {
                (1, true) | (2, false) => {}
                (1, false) => {
                    return Err(Error::InvalidParameter(format!(
                        "facet {f:?} lies on the boundary but is not marked"
                    )))
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "facet {f:?} shared by {c} elements"
                    )))
                }
            }
        }
        let from_edges: BTreeSet<usize> =
            self.boundary_edges.iter().flat_map(|be| be.nodes).collect();
        let marked: BTreeSet<usize> = self.boundary_nodes.iter().copied().collect();
        if from_edges != marked {
            return Err(Error::InvalidParameter(
                "boundary_nodes differs from the nodes of boundary_edges".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform 1D mesh of `[-L, L]` with spacing at most `h`.
pub fn build_slab_mesh(length: f64, h: f64) -> Result<Mesh> {
    if length <= 0.0 || h <= 0.0 {
        return Err(Error::InvalidParameter("slab needs L > 0 and h > 0".into()));
    }
    if h >= length {
        return Err(Error::InvalidParameter(format!("slab spacing h = {h} must be < L = {length}")));
    }
    let n_el = ((2.0 * length) / h).ceil() as usize;
    let dx = 2.0 * length / n_el as f64;
    let nodes: Vec<Point> = (0..=n_el).map(|i| [-length + i as f64 * dx, 0.0]).collect();
    let elements: Vec<[usize; 3]> = (0..n_el).map(|i| [i, i + 1, UNUSED]).collect();
    let element_measures = (0..n_el)
        .map(|i| nodes[i + 1][0] - nodes[i][0])
        .collect();
    Ok(Mesh {
        dim: 1,
        boundary_nodes: vec![0, n_el],
        boundary_edges: vec![
            BoundaryEdge { nodes: [0, 0], normal: [-1.0, 0.0] },
            BoundaryEdge { nodes: [n_el, n_el], normal: [1.0, 0.0] },
        ],
        nodes,
        elements,
        element_measures,
    })
}

/// Quasi-uniform triangulation of the disk of radius `R` by concentric rings
/// (deterministic, no external mesh generator). Ring `i` carries `6 i` nodes;
/// the ring count is chosen so every edge is at most `h` long.
pub fn build_disk_mesh(radius: f64, h: f64) -> Result<Mesh> {
    if radius <= 0.0 || h <= 0.0 {
        return Err(Error::InvalidParameter("disk needs R > 0 and h > 0".into()));
    }
    if h >= radius / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "disk spacing h = {h} must be < R/4 = {}",
            radius / 4.0
        )));
    }
    // Start from the ring count suggested by the tangential spacing and grow
    // until every edge (including annulus diagonals) is at most h.
    let mut rings = (((std::f64::consts::PI * radius) / (3.0 * h)).ceil() as usize).max(5);
    for _ in 0..12 {
        let mesh = build_disk_with_rings(radius, rings);
        let (_, h_max) = mesh.h_min_max();
        if h_max <= h {
            return Ok(mesh);
        }
        rings += (rings / 5).max(1);
    }
    Ok(build_disk_with_rings(radius, rings))
}

fn build_disk_with_rings(radius: f64, rings: usize) -> Mesh {
    let mut nodes: Vec<Point> = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; rings + 1];
    for i in 1..=rings {
        ring_start[i] = nodes.len();
        let r = radius * i as f64 / rings as f64;
        let n = 6 * i;
        for j in 0..n {
            let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let (x, y) = if i == rings {
                // boundary nodes placed on the circle exactly
                (radius * a.cos(), radius * a.sin())
            } else {
                (r * a.cos(), r * a.sin())
            };
            nodes.push([x, y]);
        }
    }
    let mut elements: Vec<[usize; 3]> = Vec::new();
    let mut push_tri = |nodes: &Vec<Point>, a: usize, b: usize, c: usize| {
        if tri_signed_area(nodes[a], nodes[b], nodes[c]) > 0.0 {
            elements.push([a, b, c]);
        } else {
            elements.push([a, c, b]);
        }
    };
    // center fan
    for j in 0..6 {
        push_tri(&nodes, 0, ring_start[1] + j, ring_start[1] + (j + 1) % 6);
    }
    // annuli: merge the two rings by angle
    for i in 2..=rings {
        let (m, n) = (6 * (i - 1), 6 * i);
        let (si, so) = (ring_start[i - 1], ring_start[i]);
        let (mut pi, mut po) = (0usize, 0usize);
        while pi < m || po < n {
            let ang_in = (pi + 1) as f64 / m as f64;
            let ang_out = (po + 1) as f64 / n as f64;
            if po < n && (pi == m || ang_out <= ang_in) {
                push_tri(&nodes, si + pi % m, so + po % n, so + (po + 1) % n);
                po += 1;
            } else {
                push_tri(&nodes, si + pi % m, so + po % n, si + (pi + 1) % m);
                pi += 1;
            }
        }
    }
    let element_measures: Vec<f64> = elements
        .iter()
        .map(|el| tri_signed_area(nodes[el[0]], nodes[el[1]], nodes[el[2]]))
        .collect();
    // boundary: the outer ring, ordered counter-clockwise
    let n_out = 6 * rings;
    let so = ring_start[rings];
    let mut boundary_edges = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let a = so + j;
        let b = so + (j + 1) % n_out;
        let mid = [0.5 * (nodes[a][0] + nodes[b][0]), 0.5 * (nodes[a][1] + nodes[b][1])];
        let norm = (mid[0] * mid[0] + mid[1] * mid[1]).sqrt();
        boundary_edges.push(BoundaryEdge { nodes: [a, b], normal: [mid[0] / norm, mid[1] / norm] });
    }
    let boundary_nodes: Vec<usize> = (so..so + n_out).collect();
    Mesh { dim: 2, nodes, elements, boundary_nodes, boundary_edges, element_measures }
}

/// A `W^{1,inf}` deformation direction with analytic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationField {
    /// theta = 0
    Zero,
    /// theta(x) = x
    Dilation,
    /// theta(x) = (x1, 0)
    Shear,
    /// theta(x) = v (constant)
    Translation([f64; 2]),
    /// theta(x) = (amp * x1^2, 0) — non-affine
    QuadraticStretch { amp: f64 },
}

impl PerturbationField {
    pub fn value(&self, x: Point) -> [f64; 2] {
        match self {
            PerturbationField::Zero => [0.0, 0.0],
            PerturbationField::Dilation => x,
            PerturbationField::Shear => [x[0], 0.0],
            PerturbationField::Translation(v) => *v,
            PerturbationField::QuadraticStretch { amp } => [amp * x[0] * x[0], 0.0],
        }
    }

    pub fn jacobian(&self, x: Point) -> Mat2 {
        match self {
            PerturbationField::Zero | PerturbationField::Translation(_) => [[0.0, 0.0], [0.0, 0.0]],
            PerturbationField::Dilation => [[1.0, 0.0], [0.0, 1.0]],
            PerturbationField::Shear => [[1.0, 0.0], [0.0, 0.0]],
            PerturbationField::QuadraticStretch { amp } => [[2.0 * amp * x[0], 0.0], [0.0, 0.0]],
        }
    }

    /// `(sup |theta|, sup |Dtheta|)` sampled over the mesh nodes (the
    /// W^{1,inf} membership proxy); the Jacobian is measured in the spectral
    /// norm.
    pub fn sup_norms(&self, mesh: &Mesh) -> (f64, f64) {
        let mut sup_v = 0.0f64;
        let mut sup_j = 0.0f64;
        for &x in &mesh.nodes {
            let v = self.value(x);
            sup_v = sup_v.max((v[0] * v[0] + v[1] * v[1]).sqrt());
            sup_j = sup_j.max(spectral_norm(self.jacobian(x)));
        }
        (sup_v, sup_j)
    }
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm(m: Mat2) -> f64 {
    // eigenvalues of m^T m
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + d;
    let det = a * d - b * b;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr + disc).max(0.0).sqrt()
}

/// Coefficients of the weak form pulled back to the fixed domain:
/// `J_tau = det(I + tau Dtheta)` and
/// `A_tau = J_tau (I + tau Dtheta)^{-1} (I + tau Dtheta)^{-T}`.
#[derive(Debug, Clone)]
pub struct TransportedCoefficients {
    pub tau: f64,
    pub tau_max: f64,
    pub dim: usize,
    theta: PerturbationField,
}

/// Build the transported coefficients; fails when `|tau| sup|Dtheta| >= 1`.
pub fn transported_coefficients(
    theta: &PerturbationField,
    tau: f64,
    mesh: &Mesh,
) -> Result<TransportedCoefficients> {
    let (_, dj) = theta.sup_norms(mesh);
    if tau.abs() * dj >= 1.0 {
        return Err(Error::SingularTransform(tau.abs() * dj));
    }
    let tau_max = if dj == 0.0 { f64::INFINITY } else { 1.0 / (2.0 * dj) };
    Ok(TransportedCoefficients { tau, tau_max, dim: mesh.dim, theta: theta.clone() })
}

impl TransportedCoefficients {
    /// The deformation x + tau theta(x).
    pub fn map(&self, x: Point) -> Point {
        let v = self.theta.value(x);
        [x[0] + self.tau * v[0], x[1] + self.tau * v[1]]
    }

    fn deformation_gradient(&self, x: Point) -> Mat2 {
        let d = self.theta.jacobian(x);
        [
            [1.0 + self.tau * d[0][0], self.tau * d[0][1]],
            [self.tau * d[1][0], 1.0 + self.tau * d[1][1]],
        ]
    }

    /// J_tau(x), the Jacobian determinant over the active dimension.
    pub fn j(&self, x: Point) -> f64 {
        let f = self.deformation_gradient(x);
        match self.dim {
            1 => f[0][0],
            _ => f[0][0] * f[1][1] - f[0][1] * f[1][0],
        }
    }

    /// A_tau(x); in 1D only the `[0][0]` entry is meaningful (the rest is
    /// padded with the identity).
    pub fn a(&self, x: Point) -> Mat2 {
        let f = self.deformation_gradient(x);
        match self.dim {
            1 => [[1.0 / f[0][0], 0.0], [0.0, 1.0]],
            _ => {
                let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
                // inv = adj / det
                let inv = [
                    [f[1][1] / det, -f[0][1] / det],
                    [-f[1][0] / det, f[0][0] / det],
                ];
                // det * inv * inv^T
                let mut a = [[0.0; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        a[r][c] = det * (inv[r][0] * inv[c][0] + inv[r][1] * inv[c][1]);
                    }
                }
                a
            }
        }
    }
}

/// Move every node to `x + tau theta(x)`, keeping connectivity.
pub fn perturb_mesh(mesh: &Mesh, theta: &PerturbationField, tau: f64) -> Result<Mesh> {
    let mut out = mesh.clone();
    for x in &mut out.nodes {
        let v = theta.value(*x);
        x[0] += tau * v[0];
        x[1] += tau * v[1];
    }
    for e in 0..out.elements.len() {
        let m = out.measure_of(e);
        if m <= 0.0 {
            return Err(Error::InvertedElement(e));
        }
        out.element_measures[e] = m;
    }
    // refresh outward normals
    if out.dim == 2 {
        for be in &mut out.boundary_edges {
            let a = out.nodes[be.nodes[0]];
            let b = out.nodes[be.nodes[1]];
            let e = [b[0] - a[0], b[1] - a[1]];
            let mut n = [e[1], -e[0]];
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            n = [n[0] / len, n[1] / len];
            be.normal = n;
        }
        // CCW boundary loops make (ey, -ex) point outward; verify once per mesh
        // by comparing against the centroid direction and flip if needed.
        let cx: f64 = out.nodes.iter().map(|p| p[0]).sum::<f64>() / out.nodes.len() as f64;
        let cy: f64 = out.nodes.iter().map(|p| p[1]).sum::<f64>() / out.nodes.len() as f64;
        for be in &mut out.boundary_edges {
            let a = out.nodes[be.nodes[0]];
            let b = out.nodes[be.nodes[1]];
            let mid = [0.5 * (a[0] + b[0]) - cx, 0.5 * (a[1] + b[1]) - cy];
            if mid[0] * be.normal[0] + mid[1] * be.normal[1] < 0.0 {
                be.normal = [-be.normal[0], -be.normal[1]];
            }
        }
    }
    Ok(out)
}

/// Nodal Euclidean distance to a node set (brute force; desk-scale meshes).
pub fn distance_to_nodeset(mesh: &Arc<Mesh>, target: &BTreeSet<usize>) -> Result<ScalarField> {
    if target.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let values: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&x| {
            target
                .iter()
                .map(|&t| seg_length(x, mesh.nodes[t]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField::new(Arc::clone(mesh), FieldKind::Derived, values)
}

/// Discrete boundary curvature per boundary node.
#[derive(Debug, Clone)]
pub struct BoundaryCurvature {
    pub values: BTreeMap<usize, f64>,
    /// Nodes where three consecutive boundary nodes were collinear within
    /// 1e-14 (curvature reported as 0 there).
    pub degenerate: BTreeSet<usize>,
}

/// Curvature at each boundary node from the circumscribed circle through
/// three consecutive boundary nodes; positive on convex boundaries. 1D
/// meshes report 0 at both endpoints.
pub fn boundary_curvature(mesh: &Mesh) -> Result<BoundaryCurvature> {
    let mut values = BTreeMap::new();
    let mut degenerate = BTreeSet::new();
    if mesh.dim == 1 {
        for &i in &mesh.boundary_nodes {
            values.insert(i, 0.0);
        }
        return Ok(BoundaryCurvature { values, degenerate });
    }
    // walk the closed boundary polyline
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for be in &mesh.boundary_edges {
        next.insert(be.nodes[0], be.nodes[1]);
    }
    if next.len() != mesh.boundary_nodes.len() {
        return Err(Error::InvalidParameter("boundary is not a single closed polyline".into()));
    }
    let start = *mesh.boundary_nodes.first().ok_or(Error::EmptyTarget)?;
    let mut loop_nodes = vec![start];
    let mut cur = next[&start];
    while cur != start {
        loop_nodes.push(cur);
        cur = next[&cur];
    }
    let n = loop_nodes.len();
    // loop orientation (positive = counter-clockwise)
    let mut area2 = 0.0;
    for k in 0..n {
        let a = mesh.nodes[loop_nodes[k]];
        let b = mesh.nodes[loop_nodes[(k + 1) % n]];
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    let orient = area2.signum();
    for k in 0..n {
        let ia = loop_nodes[(k + n - 1) % n];
        let ib = loop_nodes[k];
        let ic = loop_nodes[(k + 1) % n];
        let (a, b, c) = (mesh.nodes[ia], mesh.nodes[ib], mesh.nodes[ic]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        let scale = seg_length(a, b) * seg_length(b, c);
        if cross.abs() <= 1e-14 * scale.max(1e-300) {
            values.insert(ib, 0.0);
            degenerate.insert(ib);
            continue;
        }
        let circ_r = seg_length(a, b) * seg_length(b, c) * seg_length(c, a) / (2.0 * cross.abs());
        values.insert(ib, orient * cross.signum() / circ_r);
    }
    Ok(BoundaryCurvature { values, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn slab_small_example() {
        let m = build_slab_mesh(1.0, 0.5).unwrap();
        assert_eq!(m.nodes.len(), 5);
        let xs: Vec<f64> = m.nodes.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(m.boundary_nodes, vec![0, 4]);
        m.validate().unwrap();
    }

    #[test]
    fn slab_fine_example() {
        let m = build_slab_mesh(5.0, 0.01).unwrap();
        assert_eq!(m.nodes.len(), 1001);
        for &h in &m.element_measures {
            assert!((h - 0.01).abs() < 1e-12);
        }
        assert!(build_slab_mesh(1.0, 1.0).is_err());
    }

    #[test]
    fn disk_mesh_area_and_topology() {
        let m = build_disk_mesh(1.0, 0.2).unwrap();
        m.validate().unwrap();
        assert!((m.total_measure() - PI).abs() / PI < 0.05);
        // boundary nodes on the circle
        for &i in &m.boundary_nodes {
            let r = (m.nodes[i][0].powi(2) + m.nodes[i][1].powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        // Euler characteristic of the disk: V - E + F = 1
        let mut edges = BTreeSet::new();
        for e in 0..m.elements.len() {
            let idx = m.element_nodes(e);
            for k in 0..3 {
                let (a, b) = (idx[k], idx[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let euler = m.nodes.len() as i64 - edges.len() as i64 + m.elements.len() as i64;
        assert_eq!(euler, 1);
        // max edge below h
        let (_, h_max) = m.h_min_max();
        assert!(h_max <= 0.3 + 1e-12, "h_max = {h_max}");
        assert!(build_disk_mesh(1.0, 0.3 * 10.0).is_err());
    }

    #[test]
    fn perturbation_jacobians_match_finite_differences() {
        let fields = [
            PerturbationField::Dilation,
            PerturbationField::Shear,
            PerturbationField::Translation([0.3, -0.2]),
            PerturbationField::QuadraticStretch { amp: 0.4 },
        ];
        let pts = [[0.3, 0.7], [-1.2, 0.4], [2.0, -0.5]];
        let eps = 1e-6;
        for f in &fields {
            for &p in &pts {
                let jac = f.jacobian(p);
                for c in 0..2 {
                    let mut pp = p;
                    let mut pm = p;
                    pp[c] += eps;
                    pm[c] -= eps;
                    let vp = f.value(pp);
                    let vm = f.value(pm);
                    for r in 0..2 {
                        let fd = (vp[r] - vm[r]) / (2.0 * eps);
                        assert!((jac[r][c] - fd).abs() < 1e-6, "{f:?} [{r}][{c}]");
                    }
                }
            }
        }
    }

    #[test]
    fn transported_identity_at_tau_zero() {
        let mesh = build_disk_mesh(1.0, 0.2).unwrap();
        let tc = transported_coefficients(&PerturbationField::Dilation, 0.0, &mesh).unwrap();
        for e in 0..mesh.elements.len() {
            let x = mesh.barycenter(e);
            assert_eq!(tc.j(x), 1.0);
            assert_eq!(tc.a(x), [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    #[test]
    fn transported_dilation_and_shear() {
        let mesh = build_disk_mesh(1.0, 0.2).unwrap();
        let tau = 0.2;
        let dil = transported_coefficients(&PerturbationField::Dilation, tau, &mesh).unwrap();
        let x = [0.3, 0.4];
        assert!((dil.j(x) - (1.0 + tau) * (1.0 + tau)).abs() < 1e-14);
        let a = dil.a(x);
        assert!((a[0][0] - 1.0).abs() < 1e-14 && (a[1][1] - 1.0).abs() < 1e-14);
        assert!(a[0][1].abs() < 1e-14);

        let sh = transported_coefficients(&PerturbationField::Shear, tau, &mesh).unwrap();
        let a = sh.a(x);
        assert!((sh.j(x) - (1.0 + tau)).abs() < 1e-14);
        assert!((a[0][0] - 1.0 / (1.0 + tau)).abs() < 1e-14);
        assert!((a[1][1] - (1.0 + tau)).abs() < 1e-14);
        assert!(a[0][1].abs() < 1e-14);
    }

    #[test]
    fn transported_rejects_singular_tau() {
        let mesh = build_slab_mesh(1.0, 0.1).unwrap();
        assert!(matches!(
            transported_coefficients(&PerturbationField::Dilation, 1.0, &mesh),
            Err(Error::SingularTransform(_))
        ));
    }

    #[test]
    fn a_tau_is_spd_within_tau_max() {
        let mesh = build_disk_mesh(1.0, 0.2).unwrap();
        for theta in [PerturbationField::Shear, PerturbationField::QuadraticStretch { amp: 0.3 }] {
            let tc0 = transported_coefficients(&theta, 0.0, &mesh).unwrap();
            let tau = tc0.tau_max;
            let tc = transported_coefficients(&theta, tau, &mesh).unwrap();
            for e in 0..mesh.elements.len() {
                let a = tc.a(mesh.barycenter(e));
                let tr = a[0][0] + a[1][1];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let min_eig = 0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt();
                assert!(min_eig > 0.0, "min eigenvalue {min_eig} at element {e}");
            }
        }
    }

    #[test]
    fn perturb_mesh_examples() {
        let slab = build_slab_mesh(1.0, 0.1).unwrap();
        let same = perturb_mesh(&slab, &PerturbationField::Dilation, 0.0).unwrap();
        assert_eq!(slab.nodes, same.nodes);
        let moved = perturb_mesh(&slab, &PerturbationField::Dilation, 0.1).unwrap();
        assert!((moved.nodes[0][0] + 1.1).abs() < 1e-14);
        assert!((moved.nodes.last().unwrap()[0] - 1.1).abs() < 1e-14);
        moved.validate().unwrap();

        let disk = build_disk_mesh(1.0, 0.2).unwrap();
        let scaled = perturb_mesh(&disk, &PerturbationField::Dilation, 0.2).unwrap();
        let ratio = scaled.total_measure() / disk.total_measure();
        assert!((ratio - 1.44).abs() < 1e-12, "area ratio {ratio}");
        assert!(perturb_mesh(&slab, &PerturbationField::Dilation, -1.5).is_err());
    }

    #[test]
    fn jacobian_matches_measure_ratio_for_affine_fields() {
        let disk = build_disk_mesh(1.0, 0.2).unwrap();
        let tau = 0.15;
        for theta in [PerturbationField::Dilation, PerturbationField::Shear] {
            let tc = transported_coefficients(&theta, tau, &disk).unwrap();
            let moved = perturb_mesh(&disk, &theta, tau).unwrap();
            for e in 0..disk.elements.len() {
                let ratio = moved.element_measures[e] / disk.element_measures[e];
                assert!((tc.j(disk.barycenter(e)) - ratio).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hausdorff_bound_under_perturbation() {
        let disk = build_disk_mesh(1.0, 0.2).unwrap();
        let theta = PerturbationField::QuadraticStretch { amp: 0.5 };
        let (sup_v, _) = theta.sup_norms(&disk);
        let tau = 0.2;
        let moved = perturb_mesh(&disk, &theta, tau).unwrap();
        let max_shift = disk
            .nodes
            .iter()
            .zip(&moved.nodes)
            .map(|(a, b)| seg_length(*a, *b))
            .fold(0.0, f64::max);
        assert!(max_shift <= tau * sup_v + 1e-14);
    }

    #[test]
    fn distance_field_examples() {
        let slab = Arc::new(build_slab_mesh(1.0, 0.1).unwrap());
        let all: BTreeSet<usize> = (0..slab.nodes.len()).collect();
        let d = distance_to_nodeset(&slab, &all).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
        let center: BTreeSet<usize> = [10].into_iter().collect(); // x = 0
        let d = distance_to_nodeset(&slab, &center).unwrap();
        for (i, &x) in slab.nodes.iter().enumerate() {
            assert!((d.values[i] - x[0].abs()).abs() < 1e-12);
        }
        assert!(distance_to_nodeset(&slab, &BTreeSet::new()).is_err());
    }

    #[test]
    fn curvature_of_circle_and_slab() {
        let slab = build_slab_mesh(1.0, 0.1).unwrap();
        let c = boundary_curvature(&slab).unwrap();
        assert!(c.values.values().all(|&v| v == 0.0));

        for h in [0.3, 0.15] {
            let disk = build_disk_mesh(2.0, h).unwrap();
            let c = boundary_curvature(&disk).unwrap();
            assert!(c.degenerate.is_empty());
            for (&i, &k) in &c.values {
                assert!(
                    (k - 0.5).abs() < 2.0 * h * h,
                    "node {i}: curvature {k} at h = {h}"
                );
            }
        }
    }
}
