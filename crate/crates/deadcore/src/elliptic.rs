//! Piecewise-linear Galerkin discretization of the semilinear problem
//! `-div(A grad w) + beta(w) = f` with Dirichlet data, and the linear
//! problems with (possibly infinite) potential that the shape derivatives
//! satisfy.
//!
//! The reaction and source are integrated with lumped nodal quadrature,
//! which keeps the system an M-matrix on Delaunay-quality meshes and gives
//! the discrete maximum principle the bound-preservation tests rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField};
use crate::geometry::{transported_coefficients, Mat2, Mesh, PerturbationField, Point, TransportedCoefficients};
use crate::kinetics::Kinetic;
use crate::linalg::{SkylineFactor, SymSparse};

/// Newton assembly cap for infinite reaction derivatives. The residual is
/// always evaluated with the exact kinetic, so capping does not move the
/// fixed point.
pub fn derivative_cap() -> f64 {
    1.0 / f64::EPSILON.sqrt()
}

/// Outcome of a nonlinear solve.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// 0 <= w <= 1 at every node (within 10 tol).
    pub bounds_ok: bool,
    pub tolerance: f64,
}

/// Per-element stiffness matrices plus their assembled global form.
pub struct Stiffness {
    pub matrix: SymSparse,
    pub element_mats: Vec<[[f64; 3]; 3]>,
}

fn p1_gradients(mesh: &Mesh, e: usize) -> [[f64; 2]; 3] {
    let idx = mesh.element_nodes(e);
    match mesh.dim {
        1 => {
            let h = mesh.element_measures[e];
            [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
        }
        _ => {
            let (a, b, c) = (mesh.nodes[idx[0]], mesh.nodes[idx[1]], mesh.nodes[idx[2]]);
            let t2 = 2.0 * mesh.element_measures[e];
            [
                [(b[1] - c[1]) / t2, (c[0] - b[0]) / t2],
                [(c[1] - a[1]) / t2, (a[0] - c[0]) / t2],
                [(a[1] - b[1]) / t2, (b[0] - a[0]) / t2],
            ]
        }
    }
}

/// Assemble the P1 stiffness matrix for the diffusion coefficient `a`,
/// evaluated at element barycenters (one-point quadrature).
pub fn assemble_stiffness(mesh: &Mesh, a: &dyn Fn(Point) -> Mat2) -> Result<Stiffness> {
    let n = mesh.nodes.len();
    let nv = mesh.dim + 1;
    let mut matrix = SymSparse::new(n);
    let mut element_mats = Vec::with_capacity(mesh.elements.len());
    for e in 0..mesh.elements.len() {
        let bary = mesh.barycenter(e);
        let am = a(bary);
        // SPD check on the active block
        let spd = match mesh.dim {
            1 => am[0][0] > 0.0,
            _ => {
                let tr = am[0][0] + am[1][1];
                let det = am[0][0] * am[1][1] - am[0][1] * am[1][0];
                det > 0.0 && tr > 0.0
            }
        };
        if !spd {
            return Err(Error::NonSpdCoefficient(e));
        }
        let grads = p1_gradients(mesh, e);
        let meas = mesh.element_measures[e];
        let mut ke = [[0.0; 3]; 3];
        for i in 0..nv {
            let agi = [
                am[0][0] * grads[i][0] + am[0][1] * grads[i][1],
                am[1][0] * grads[i][0] + am[1][1] * grads[i][1],
            ];
            for j in 0..nv {
                ke[i][j] = meas * (agi[0] * grads[j][0] + agi[1] * grads[j][1]);
            }
        }
        let idx = mesh.element_nodes(e);
        for i in 0..nv {
            for j in 0..=i {
                matrix.add(idx[i], idx[j], ke[i][j]);
            }
        }
        element_mats.push(ke);
    }
    Ok(Stiffness { matrix, element_mats })
}

/// y += K w evaluated element by element through nodal differences, which
/// keeps rounding at the level of the local increments.
pub fn apply_stiffness(mesh: &Mesh, stiff: &Stiffness, w: &[f64], y: &mut [f64]) {
    let nv = mesh.dim + 1;
    for e in 0..mesh.elements.len() {
        let idx = mesh.element_nodes(e);
        let ke = &stiff.element_mats[e];
        for i in 0..nv {
            let wi = w[idx[i]];
            let mut acc = 0.0;
            for j in 0..nv {
                if j != i {
                    acc += ke[i][j] * (w[idx[j]] - wi);
                }
            }
            y[idx[i]] += acc;
        }
    }
}

/// J-weighted lumped masses: `m_i = sum_e |e| J(bary_e) / (dim+1)`.
pub fn weighted_lumped_masses(mesh: &Mesh, j: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut m = vec![0.0; mesh.nodes.len()];
    let share = 1.0 / (mesh.dim + 1) as f64;
    for e in 0..mesh.elements.len() {
        let w = mesh.element_measures[e] * j(mesh.barycenter(e)) * share;
        for &i in mesh.element_nodes(e) {
            m[i] += w;
        }
    }
    m
}

pub(crate) struct NonlinearSystem<'a> {
    mesh: &'a Mesh,
    stiff: Stiffness,
    masses: Vec<f64>,
    source: Vec<f64>,
    reaction: Box<dyn Fn(f64) -> f64 + 'a>,
    reaction_deriv: Box<dyn Fn(f64) -> f64 + 'a>,
    dirichlet: Vec<Option<f64>>,
    free: Vec<usize>,
    free_index: Vec<usize>,
}

impl<'a> NonlinearSystem<'a> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        mesh: &'a Mesh,
        stiff: Stiffness,
        masses: Vec<f64>,
        source: Vec<f64>,
        reaction: Box<dyn Fn(f64) -> f64 + 'a>,
        reaction_deriv: Box<dyn Fn(f64) -> f64 + 'a>,
        dirichlet: Vec<Option<f64>>,
    ) -> Self {
        let mut free = Vec::new();
        let mut free_index = vec![usize::MAX; mesh.nodes.len()];
        for i in 0..mesh.nodes.len() {
            if dirichlet[i].is_none() {
                free_index[i] = free.len();
                free.push(i);
            }
        }
        NonlinearSystem { mesh, stiff, masses, source, reaction, reaction_deriv, dirichlet, free, free_index }
    }

    fn residual(&self, w: &[f64], r: &mut [f64]) -> f64 {
        r.iter_mut().for_each(|v| *v = 0.0);
        apply_stiffness(self.mesh, &self.stiff, w, r);
        for i in 0..w.len() {
            r[i] += self.masses[i] * ((self.reaction)(w[i]) - self.source[i]);
        }
        let mut nrm = 0.0;
        for &i in &self.free {
            nrm += r[i] * r[i];
        }
        nrm.sqrt()
    }

    fn jacobian(&self, w: &[f64]) -> SymSparse {
        let cap = derivative_cap();
        let nf = self.free.len();
        let mut jac = SymSparse::new(nf);
        let nv = self.mesh.dim + 1;
        for e in 0..self.mesh.elements.len() {
            let idx = self.mesh.element_nodes(e);
            let ke = &self.stiff.element_mats[e];
            for i in 0..nv {
                let fi = self.free_index[idx[i]];
                if fi == usize::MAX {
                    continue;
                }
                for j in 0..=i {
                    let fj = self.free_index[idx[j]];
                    if fj == usize::MAX {
                        continue;
                    }
                    jac.add(fi, fj, ke[i][j]);
                }
            }
        }
        for &i in &self.free {
            let d = (self.reaction_deriv)(w[i]).min(cap).max(0.0);
            jac.add(self.free_index[i], self.free_index[i], self.masses[i] * d);
        }
        jac
    }

    /// Damped Newton with a capped reaction derivative, alternating with
    /// nodewise nonlinear Gauss–Seidel sweeps. Newton handles the smooth
    /// part of the solution quadratically; the sweeps resolve the nodes in
    /// and around a dead core, where the reaction derivative blows up and
    /// Newton steps oscillate around zero instead of landing on it.
    pub(crate) fn solve(&self, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolverReport)> {
        let n = self.mesh.nodes.len();
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = self.dirichlet[i].unwrap_or_else(|| self.boundary_value());
        }
        let mut r = vec![0.0; n];
        let mut rn = self.residual(&w, &mut r);
        let mut iterations = 0usize;
        for _phase in 0..16 {
            // Newton phase
            let mut slow = 0usize;
            let mut newton_its = 0usize;
            while rn > tol && newton_its < max_iter {
                newton_its += 1;
                iterations += 1;
                let jac = self.jacobian(&w);
                let step = match SkylineFactor::new(&jac) {
                    Ok(f) => {
                        let b: Vec<f64> = self.free.iter().map(|&i| -r[i]).collect();
                        f.solve(&b)
                    }
                    Err(_) => break,
                };
                // backtracking line search on the residual norm
                let mut alpha = 1.0f64;
                let mut improved = false;
                for _ in 0..40 {
                    let mut trial = w.clone();
                    for (k, &i) in self.free.iter().enumerate() {
                        trial[i] += alpha * step[k];
                    }
                    let mut rt = vec![0.0; n];
                    let rtn = self.residual(&trial, &mut rt);
                    if rtn < rn {
                        let prev = rn;
                        w = trial;
                        r = rt;
                        rn = rtn;
                        improved = true;
                        if rn > 0.9 * prev {
                            slow += 1;
                        } else {
                            slow = 0;
                        }
                        break;
                    }
                    alpha *= 0.5;
                }
                if !improved || slow >= 4 {
                    break;
                }
            }
            if rn <= tol {
                break;
            }
            // Gauss–Seidel phase
            iterations += self.gauss_seidel(&mut w, &mut r, &mut rn, tol, 400);
            if rn <= tol {
                break;
            }
        }
        let converged = rn <= tol;
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bounds_ok = lo >= -10.0 * tol && hi <= 1.0 + 10.0 * tol;
        Ok((
            w,
            SolverReport { iterations, final_residual: rn, converged, bounds_ok, tolerance: tol },
        ))
    }

    /// Symmetric nonlinear Gauss–Seidel: each free node's scalar equation
    /// `d_i w_i + m_i g(w_i) = b_i` is solved exactly. Monotone and robust
    /// for M-matrix discretizations; slow on smooth error modes, which is
    /// why it only runs between Newton phases.
    fn gauss_seidel(
        &self,
        w: &mut [f64],
        r: &mut Vec<f64>,
        rn: &mut f64,
        tol: f64,
        max_sweeps: usize,
    ) -> usize {
        let n = w.len();
        let nv = self.mesh.dim + 1;
        let mut diag = vec![0.0; n];
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in 0..self.mesh.elements.len() {
            let idx = self.mesh.element_nodes(e);
            let ke = &self.stiff.element_mats[e];
            for i in 0..nv {
                for j in 0..nv {
                    if i == j {
                        diag[idx[i]] += ke[i][i];
                    } else {
                        adj[idx[i]].push((idx[j], ke[i][j]));
                    }
                }
            }
        }
        let mut sweeps = 0usize;
        while sweeps < max_sweeps {
            sweeps += 1;
            let forward = self.free.iter();
            let backward = self.free.iter().rev();
            for order in [forward.collect::<Vec<_>>(), backward.collect::<Vec<_>>()] {
                for &&i in &order {
                    let mut b = self.masses[i] * self.source[i];
                    for &(j, k) in &adj[i] {
                        b -= k * w[j];
                    }
                    w[i] = scalar_solve(
                        diag[i],
                        self.masses[i],
                        &*self.reaction,
                        &*self.reaction_deriv,
                        b,
                        w[i],
                    );
                }
            }
            let new_rn = self.residual(w, r);
            let prev = *rn;
            *rn = new_rn.min(prev);
            if new_rn <= tol || new_rn > 0.999 * prev {
                break;
            }
        }
        sweeps
    }

    fn boundary_value(&self) -> f64 {
        self.dirichlet.iter().flatten().next().copied().unwrap_or(0.0)
    }
}

/// Solve the monotone scalar equation `d w + m g(w) = b` (g increasing,
/// g(0) = 0) to nodal working precision. Safeguarded Newton from `hint`
/// inside the bracket; bisection steps are geometric near zero so roots many
/// orders of magnitude below the bracket width are still resolved.
fn scalar_solve(
    d: f64,
    m: f64,
    g: &dyn Fn(f64) -> f64,
    gp: &dyn Fn(f64) -> f64,
    b: f64,
    hint: f64,
) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let phi = |w: f64| d * w + m * g(w);
    // invariant: phi(lo) <= b <= phi(hi)
    let (mut lo, mut hi) = if b > 0.0 { (0.0, b / d) } else { (b / d, 0.0) };
    for _ in 0..64 {
        if b > 0.0 && phi(hi) < b {
            hi *= 2.0;
        } else if b < 0.0 && phi(lo) > b {
            lo *= 2.0;
        } else {
            break;
        }
    }
    let mut w = hint.clamp(lo, hi);
    let cap = derivative_cap();
    let mut best = w;
    let mut best_err = f64::INFINITY;
    for _ in 0..140 {
        let f = phi(w) - b;
        if f.abs() < best_err {
            best_err = f.abs();
            best = w;
        }
        if f == 0.0 {
            return w;
        }
        if f > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let dphi = d + m * gp(w).min(cap).max(0.0);
        let mut next = w - f / dphi;
        if !(next > lo && next < hi) || !next.is_finite() {
            // bisection fallback; geometric toward zero, logarithmic once
            // both ends share a sign, arithmetic otherwise
            next = if lo == 0.0 && hi > 0.0 {
                hi * 1e-3
            } else if hi == 0.0 && lo < 0.0 {
                lo * 1e-3
            } else if lo > 0.0 {
                (lo * hi).sqrt()
            } else if hi < 0.0 {
                -((lo * hi).sqrt())
            } else {
                0.5 * (lo + hi)
            };
        }
        if next == w || !(next >= lo && next <= hi) {
            break;
        }
        w = next;
    }
    best
}

fn make_system<'a>(
    mesh: &'a Mesh,
    tc: &TransportedCoefficients,
    source: Vec<f64>,
    reaction: Box<dyn Fn(f64) -> f64 + 'a>,
    reaction_deriv: Box<dyn Fn(f64) -> f64 + 'a>,
    bc: f64,
) -> Result<NonlinearSystem<'a>> {
    let stiff = assemble_stiffness(mesh, &|x| tc.a(x))?;
    let masses = weighted_lumped_masses(mesh, &|x| tc.j(x));
    let mut dirichlet = vec![None; mesh.nodes.len()];
    for &i in &mesh.boundary_nodes {
        dirichlet[i] = Some(bc);
    }
    let mut free = Vec::new();
    let mut free_index = vec![usize::MAX; mesh.nodes.len()];
    for i in 0..mesh.nodes.len() {
        if dirichlet[i].is_none() {
            free_index[i] = free.len();
            free.push(i);
        }
    }
    Ok(NonlinearSystem { mesh, stiff, masses, source, reaction, reaction_deriv, dirichlet, free, free_index })
}

/// Solve `-Delta w + beta(w) = f` with `w = bc` on the boundary.
pub fn solve_semilinear(
    mesh: &Arc<Mesh>,
    kin: &Kinetic,
    f: &ScalarField,
    bc: f64,
    tol: f64,
) -> Result<(ScalarField, SolverReport)> {
    if kin.value(0.0) != 0.0 {
        return Err(Error::InvalidKinetic);
    }
    let tc = transported_coefficients(&PerturbationField::Zero, 0.0, mesh)?;
    let sys = make_system(
        mesh,
        &tc,
        f.values.clone(),
        Box::new(|s| kin.value(s)),
        Box::new(|s| kin.derivative(s)),
        bc,
    )?;
    let (w, report) = sys.solve(tol, 200)?;
    Ok((ScalarField::new(Arc::clone(mesh), FieldKind::Solution, w)?, report))
}

fn solve_u_form(
    mesh: &Arc<Mesh>,
    tc: &TransportedCoefficients,
    kin: &Kinetic,
    f_hat: Vec<f64>,
    tol: f64,
) -> Result<(ScalarField, SolverReport)> {
    if kin.value(0.0) != 0.0 {
        return Err(Error::InvalidKinetic);
    }
    let beta_one = kin.beta_one();
    let sys = make_system(
        mesh,
        tc,
        f_hat,
        Box::new(move |u| beta_one - kin.value(1.0 - u)),
        Box::new(move |u| kin.derivative(1.0 - u)),
        0.0,
    )?;
    let (u, report) = sys.solve(tol, 200)?;
    Ok((ScalarField::new(Arc::clone(mesh), FieldKind::Solution, u)?, report))
}

/// Solve the zero-boundary form `-Delta u + g(u) = beta(1) - f` with
/// `g(u) = beta(1) - beta(1 - u)`; `u = 1 - w` exactly in the continuum.
pub fn solve_semilinear_u(
    mesh: &Arc<Mesh>,
    kin: &Kinetic,
    f: &ScalarField,
    tol: f64,
) -> Result<(ScalarField, SolverReport)> {
    let tc = transported_coefficients(&PerturbationField::Zero, 0.0, mesh)?;
    let beta_one = kin.beta_one();
    let f_hat = f.values.iter().map(|&v| beta_one - v).collect();
    solve_u_form(mesh, &tc, kin, f_hat, tol)
}

/// Solve the transported u-form on the fixed mesh with coefficients
/// `A_tau`, `J_tau` and pulled-back source; at `tau = 0` this coincides with
/// [`solve_semilinear_u`] bit for bit (same assembly path).
pub fn solve_transported(
    mesh: &Arc<Mesh>,
    theta: &PerturbationField,
    tau: f64,
    kin: &Kinetic,
    f: &dyn Fn(Point) -> f64,
    tol: f64,
) -> Result<(ScalarField, SolverReport)> {
    let tc = transported_coefficients(theta, tau, mesh)?;
    let beta_one = kin.beta_one();
    let f_hat = mesh.nodes.iter().map(|&x| beta_one - f(tc.map(x))).collect();
    solve_u_form(mesh, &tc, kin, f_hat, tol)
}

/// Solve `K v + M_L V v = 0` with Dirichlet data `g_bc` on the boundary and
/// `v = 0` on the frozen node set. Nodes carrying the `+inf` potential
/// sentinel must be frozen.
pub fn solve_linear_potential(
    mesh: &Arc<Mesh>,
    potential: &ScalarField,
    g_bc: &BTreeMap<usize, f64>,
    frozen: &BTreeSet<usize>,
    _tol: f64,
) -> Result<ScalarField> {
    for (i, &v) in potential.values.iter().enumerate() {
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!("negative potential at node {i}")));
        }
        if !v.is_finite() && !frozen.contains(&i) {
            return Err(Error::UnfrozenInfinitePotential(i));
        }
    }
    let stiff = assemble_stiffness(mesh, &|_| [[1.0, 0.0], [0.0, 1.0]])?;
    let masses = mesh.lumped_masses();
    let n = mesh.nodes.len();
    let mut fixed = vec![None; n];
    for &i in &mesh.boundary_nodes {
        fixed[i] = Some(g_bc.get(&i).copied().unwrap_or(0.0));
    }
    for &i in frozen {
        fixed[i] = Some(0.0);
    }
    let mut free = Vec::new();
    let mut free_index = vec![usize::MAX; n];
    for i in 0..n {
        if fixed[i].is_none() {
            free_index[i] = free.len();
            free.push(i);
        }
    }
    let nf = free.len();
    let mut sys = SymSparse::new(nf);
    let mut rhs = vec![0.0; nf];
    let nv = mesh.dim + 1;
    for e in 0..mesh.elements.len() {
        let idx = mesh.element_nodes(e);
        let ke = &stiff.element_mats[e];
        for i in 0..nv {
            let fi = free_index[idx[i]];
            if fi == usize::MAX {
                continue;
            }
            for j in 0..nv {
                match fixed[idx[j]] {
                    None => {
                        if idx[j] <= idx[i] {
                            sys.add(fi, free_index[idx[j]], ke[i][j]);
                        }
                    }
                    Some(val) => rhs[fi] -= ke[i][j] * val,
                }
            }
        }
    }
    for (k, &i) in free.iter().enumerate() {
        sys.add(k, k, masses[i] * potential.values[i]);
    }
    let sol = SkylineFactor::new(&sys)?.solve(&rhs);
    let mut v = vec![0.0; n];
    for i in 0..n {
        v[i] = fixed[i].unwrap_or(0.0);
    }
    for (k, &i) in free.iter().enumerate() {
        v[i] = sol[k];
    }
    ScalarField::new(Arc::clone(mesh), FieldKind::Derived, v)
}

/// L2 (lumped), H1 seminorm and the discrete-Laplacian H2 surrogate of a
/// field. The surrogate is the lumped L2 norm of `M_L^{-1} K f` over the
/// interior nodes — an honest proxy for the H2 norm, not the norm itself.
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_surrogate: f64,
}

pub fn norms(field: &ScalarField) -> Norms {
    let mesh = &field.mesh;
    let stiff = assemble_stiffness(mesh, &|_| [[1.0, 0.0], [0.0, 1.0]])
        .expect("identity coefficient is SPD");
    let masses = mesh.lumped_masses();
    let l2 = field
        .values
        .iter()
        .zip(&masses)
        .map(|(&v, &m)| m * v * v)
        .sum::<f64>()
        .sqrt();
    let h1_semi = stiff.matrix.quadratic_form(&field.values).max(0.0).sqrt();
    let mut z = vec![0.0; field.values.len()];
    apply_stiffness(mesh, &stiff, &field.values, &mut z);
    let on_boundary = mesh.is_boundary();
    let mut acc = 0.0;
    for i in 0..z.len() {
        if !on_boundary[i] {
            let lap = z[i] / masses[i];
            acc += masses[i] * lap * lap;
        }
    }
    Norms { l2, h1_semi, h2_surrogate: acc.sqrt() }
}

/// L2 norm of the difference of two fields on the same mesh.
pub fn l2_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let masses = a.mesh.lumped_masses();
    a.values
        .iter()
        .zip(&b.values)
        .zip(&masses)
        .map(|((&x, &y), &m)| m * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Full H1 norm of the difference.
pub fn h1_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let diff = ScalarField {
        mesh: Arc::clone(&a.mesh),
        kind: FieldKind::Derived,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    };
    let n = norms(&diff);
    (n.l2 * n.l2 + n.h1_semi * n.h1_semi).sqrt()
}

/// Nodal gradient recovery: area-weighted average of adjacent element
/// gradients. At 1D boundary nodes a second-order one-sided difference is
/// used instead, so boundary data built from the recovered gradient carries
/// an O(h^2) error on slabs.
pub fn recover_gradient(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 2]> {
    let n = mesh.nodes.len();
    let mut grad = vec![[0.0, 0.0]; n];
    let mut weight = vec![0.0; n];
    let nv = mesh.dim + 1;
    for e in 0..mesh.elements.len() {
        let idx = mesh.element_nodes(e);
        let grads = p1_gradients(mesh, e);
        let mut g = [0.0, 0.0];
        for i in 0..nv {
            g[0] += values[idx[i]] * grads[i][0];
            g[1] += values[idx[i]] * grads[i][1];
        }
        let w = mesh.element_measures[e];
        for &i in idx {
            grad[i][0] += w * g[0];
            grad[i][1] += w * g[1];
            weight[i] += w;
        }
    }
    for i in 0..n {
        if weight[i] > 0.0 {
            grad[i][0] /= weight[i];
            grad[i][1] /= weight[i];
        }
    }
    if mesh.dim == 1 {
        let last = n - 1;
        if n >= 3 {
            grad[0] = [one_sided_derivative(
                mesh.nodes[0][0], mesh.nodes[1][0], mesh.nodes[2][0],
                values[0], values[1], values[2],
            ), 0.0];
            grad[last] = [one_sided_derivative(
                mesh.nodes[last][0], mesh.nodes[last - 1][0], mesh.nodes[last - 2][0],
                values[last], values[last - 1], values[last - 2],
            ), 0.0];
        }
    }
    grad
}

/// Derivative at x0 of the quadratic through (x0,f0), (x1,f1), (x2,f2).
fn one_sided_derivative(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let d01 = x0 - x1;
    let d02 = x0 - x2;
    let d12 = x1 - x2;
    f0 * (d01 + d02) / (d01 * d02) - f1 * d02 / (d01 * d12) + f2 * d01 / (d02 * d12)
}
