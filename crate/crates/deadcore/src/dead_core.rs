//! Dead-core detection, the distance-growth proximity bound, and the
//! blow-up rate of the reaction derivative near the core.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{boundary_curvature, distance_to_nodeset};
use crate::kinetics::{growth_functions, Kinetic};
use crate::quad::linear_fit;

/// Discrete dead core: the nodes where the state is numerically zero.
#[derive(Debug, Clone)]
pub struct DeadCoreRegion {
    pub nodes: BTreeSet<usize>,
    /// lumped-mass measure of the node set
    pub measure: f64,
    /// region nodes adjacent to a node outside the region
    pub boundary_nodes: BTreeSet<usize>,
    pub threshold: f64,
}

impl DeadCoreRegion {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Default detection threshold: ten solver tolerances, but never below the
/// scheme's own consistency error.
pub fn default_threshold(tol: f64, h: f64) -> f64 {
    (10.0 * tol).max(h * h)
}

/// Nodes with `w <= eps_dc` and their lumped measure.
pub fn detect(w: &ScalarField, eps_dc: f64) -> DeadCoreRegion {
    let mesh = &w.mesh;
    let nodes: BTreeSet<usize> = (0..w.values.len()).filter(|&i| w.values[i] <= eps_dc).collect();
    let masses = mesh.lumped_masses();
    let measure = nodes.iter().map(|&i| masses[i]).sum();
    let mut boundary_nodes = BTreeSet::new();
    let nv = mesh.dim + 1;
    for e in 0..mesh.elements.len() {
        let idx = mesh.element_nodes(e);
        let outside = idx.iter().any(|i| !nodes.contains(i));
        if outside {
            for k in 0..nv {
                if nodes.contains(&idx[k]) {
                    boundary_nodes.insert(idx[k]);
                }
            }
        }
    }
    DeadCoreRegion { nodes, measure, boundary_nodes, threshold: eps_dc }
}

/// The curvature weight `alpha = max{0, min_boundary H dw/dn}` entering the
/// growth bound. Flat (slab) boundaries give 0; a corner-dominated boundary
/// is rejected.
pub fn compute_alpha(w: &ScalarField) -> Result<f64> {
    let mesh = &w.mesh;
    if mesh.dim == 1 {
        return Ok(0.0);
    }
    let curv = boundary_curvature(mesh)?;
    if curv.degenerate.len() * 10 > mesh.boundary_nodes.len() {
        return Err(Error::CornerBoundary);
    }
    // outward node normals: average of adjacent boundary edge normals
    let mut normals: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    for edge in &mesh.boundary_edges {
        for &i in &edge.nodes {
            let n = normals.entry(i).or_insert([0.0, 0.0]);
            n[0] += edge.normal[0];
            n[1] += edge.normal[1];
        }
    }
    let grads = crate::elliptic::recover_gradient(mesh, &w.values);
    let mut min_term = f64::INFINITY;
    for (&i, n) in &normals {
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        let dn = (grads[i][0] * n[0] + grads[i][1] * n[1]) / len;
        let h_curv = curv.values.get(&i).copied().unwrap_or(0.0);
        min_term = min_term.min(h_curv * dn);
    }
    if !min_term.is_finite() {
        return Ok(0.0);
    }
    Ok(min_term.max(0.0))
}

/// One row of the proximity-bound table.
#[derive(Debug, Clone)]
pub struct PsiRow {
    pub node: usize,
    pub x: f64,
    pub y: f64,
    pub distance: f64,
    pub w: f64,
    pub psi_inv: f64,
    pub violation: f64,
}

/// Check `w(x) <= Psi^{-1}(d(x, core))` on the band `0 < d <= band` around
/// the region. Returns the worst signed violation and the per-node table.
pub fn psi_bound_check(
    w: &ScalarField,
    region: &DeadCoreRegion,
    kin: &Kinetic,
    alpha: f64,
    band: f64,
) -> Result<(f64, Vec<PsiRow>)> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let gf = growth_functions(kin, alpha)?;
    let dist = distance_to_nodeset(&w.mesh, &region.nodes)?;
    let mut rows = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for i in 0..w.values.len() {
        let d = dist.values[i];
        if d <= 0.0 || d > band {
            continue;
        }
        let psi_inv = gf.psi_inverse(d);
        let violation = w.values[i] - psi_inv;
        max_violation = max_violation.max(violation);
        rows.push(PsiRow {
            node: i,
            x: w.mesh.nodes[i][0],
            y: w.mesh.nodes[i][1],
            distance: d,
            w: w.values[i],
            psi_inv,
            violation,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientSamples(0));
    }
    Ok((max_violation, rows))
}

/// Least-squares fit of `log beta'(w)` against `log d(x, core)` on the band,
/// excluding the discretization-contaminated collar `d < 3h`.
pub fn blowup_rate_fit(
    w: &ScalarField,
    region: &DeadCoreRegion,
    kin: &Kinetic,
    band: f64,
) -> Result<(f64, f64, f64)> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let h = w.mesh.h_min_max().1;
    let dist = distance_to_nodeset(&w.mesh, &region.nodes)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..w.values.len() {
        let d = dist.values[i];
        if d < 3.0 * h || d > band {
            continue;
        }
        let bp = kin.derivative(w.values[i]);
        if bp.is_finite() && bp > 0.0 {
            xs.push(d.ln());
            ys.push(bp.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientSamples(xs.len()));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok((slope, intercept, r2))
}
