//! Two-field regularized solver: assembly of the coupled block system for
//! the pair (u, lambda), a banded direct solve with iterative refinement,
//! strong-form residual checks and seeded noise injection.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::fem::{assemble_mass, assemble_stiffness, DofMap, FeFunction, SpaceKind, SparseMat};
use crate::fields::CauchyData;
use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Assembled block system
///
///   [ eps*K_vv  K_vt ] [u]   [r_v]
///   [ K_tv     -K_tt ] [l] = [r_t]
///
/// over the free nodes of the two constrained spaces, in node-interleaved
/// order (the u-unknown of a node immediately precedes its lambda-unknown).
/// The matrix is symmetric with positive then negative diagonal blocks, so
/// an unpivoted LDL^T factorization exists for this ordering.
pub struct QrSystem {
    pub epsilon: f64,
    pub mesh: Arc<TriMesh>,
    pub stiffness: SparseMat,
    pub mass: SparseMat,
    pub v_map: DofMap,
    pub t_map: DofMap,
    /// node -> global dof of its u-unknown (None when constrained).
    pub u_dof: Vec<Option<usize>>,
    /// node -> global dof of its lambda-unknown.
    pub l_dof: Vec<Option<usize>>,
    pub n_dofs: usize,
    pub rhs: Vec<f64>,
    /// Nodal lifting carrying the Dirichlet datum on the closed accessible
    /// part; identically zero in the source form.
    pub lifting: Vec<f64>,
    /// Per-node load of the second equation: (f, hat_i) in the source form,
    /// the flux duality term in the data form.
    pub load_t: Vec<f64>,
    /// Nodal source, when the system came from the source form.
    pub f_nodal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub algebraic_rel: f64,
    pub rhs_norm: f64,
    pub refinement_steps: usize,
    /// Extremal |D_ii| of the factorization, a conditioning witness.
    pub d_min_abs: f64,
    pub d_max_abs: f64,
    pub n_u: usize,
    pub n_lambda: usize,
}

pub struct QrSolution {
    pub u: FeFunction,
    pub lambda: FeFunction,
    pub epsilon: f64,
    pub residual: ResidualReport,
}

impl QrSolution {
    /// CSV per node: "x,y,u,lambda" with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,u,lambda\n");
        for (i, p) in self.u.mesh.nodes.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt_f64(p[0]),
                crate::fmt_f64(p[1]),
                crate::fmt_f64(self.u.values[i]),
                crate::fmt_f64(self.lambda.values[i])
            ));
        }
        out
    }
}

fn interleaved_dofs(v_map: &DofMap, t_map: &DofMap, n_nodes: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>, usize) {
    let mut u_dof = vec![None; n_nodes];
    let mut l_dof = vec![None; n_nodes];
    let mut next = 0usize;
    for node in 0..n_nodes {
        if v_map.node_to_dof[node].is_some() {
            u_dof[node] = Some(next);
            next += 1;
        }
        if t_map.node_to_dof[node].is_some() {
            l_dof[node] = Some(next);
            next += 1;
        }
    }
    (u_dof, l_dof, next)
}

struct CommonParts {
    mesh: Arc<TriMesh>,
    stiffness: SparseMat,
    mass: SparseMat,
    v_map: DofMap,
    t_map: DofMap,
    u_dof: Vec<Option<usize>>,
    l_dof: Vec<Option<usize>>,
    n_dofs: usize,
}

fn common_parts(mesh: &Arc<TriMesh>, epsilon: f64) -> Result<CommonParts> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Solver(format!("regularization parameter must be positive, got {epsilon}")));
    }
    let stiffness = assemble_stiffness(mesh)?;
    let mass = assemble_mass(mesh)?;
    let v_map = DofMap::new(mesh, SpaceKind::V0);
    let t_map = DofMap::new(mesh, SpaceKind::V0Tilde);
    let (u_dof, l_dof, n_dofs) = interleaved_dofs(&v_map, &t_map, mesh.n_nodes());
    Ok(CommonParts { mesh: mesh.clone(), stiffness, mass, v_map, t_map, u_dof, l_dof, n_dofs })
}

/// Source form: find (u, l) with eps(grad u, grad v) + (grad v, grad l) = 0
/// and (grad u, grad mu) - (grad l, grad mu) = (f, mu).
pub fn assemble_qr_source(mesh: &Arc<TriMesh>, epsilon: f64, f: &dyn Fn([f64; 2]) -> f64) -> Result<QrSystem> {
    let f_nodal: Vec<f64> = mesh.nodes.iter().map(|&p| f(p)).collect();
    assemble_qr_source_nodal(mesh, epsilon, f_nodal)
}

pub fn assemble_qr_source_nodal(mesh: &Arc<TriMesh>, epsilon: f64, f_nodal: Vec<f64>) -> Result<QrSystem> {
    let parts = common_parts(mesh, epsilon)?;
    if f_nodal.len() != mesh.n_nodes() {
        return Err(Error::Solver(format!(
            "{} source values for a mesh with {} nodes",
            f_nodal.len(),
            mesh.n_nodes()
        )));
    }
    if f_nodal.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite source value".into()));
    }
    let load_t = parts.mass.matvec(&f_nodal);
    let mut rhs = vec![0.0; parts.n_dofs];
    for node in 0..mesh.n_nodes() {
        if let Some(d) = parts.l_dof[node] {
            rhs[d] = load_t[node];
        }
    }
    Ok(QrSystem {
        epsilon,
        mesh: parts.mesh,
        stiffness: parts.stiffness,
        mass: parts.mass,
        v_map: parts.v_map,
        t_map: parts.t_map,
        u_dof: parts.u_dof,
        l_dof: parts.l_dof,
        n_dofs: parts.n_dofs,
        rhs,
        lifting: vec![0.0; mesh.n_nodes()],
        load_t,
        f_nodal: Some(f_nodal),
    })
}

/// Data form: u equals the nodal Dirichlet datum on the closed accessible
/// part (imposed through a lifting), and the second equation carries the
/// flux duality term integrated edge by edge.
pub fn assemble_qr_cauchy(mesh: &Arc<TriMesh>, epsilon: f64, data: &CauchyData) -> Result<QrSystem> {
    let parts = common_parts(mesh, epsilon)?;
    let n_nodes = mesh.n_nodes();

    let mut lifting = vec![0.0; n_nodes];
    let mut covered = vec![false; n_nodes];
    for &(i, v) in &data.g0 {
        if i >= n_nodes {
            return Err(Error::Solver(format!("Dirichlet node {i} out of range")));
        }
        if !v.is_finite() {
            return Err(Error::Solver(format!("Dirichlet datum at node {i} is not finite")));
        }
        lifting[i] = v;
        covered[i] = true;
    }
    for i in mesh.nodes_on_closed_part(crate::geometry::EdgeTag::Gamma) {
        if !covered[i] {
            return Err(Error::Solver(format!(
                "Dirichlet datum missing at accessible boundary node {i}"
            )));
        }
    }

    // Duality term per node: sum over accessible edges of the two-point
    // Gauss rule applied to g1 * hat.
    let mut load_t = vec![0.0; n_nodes];
    for flux in &data.g1 {
        let [a, b] = flux.nodes;
        if a >= n_nodes || b >= n_nodes {
            return Err(Error::Solver("flux edge node out of range".into()));
        }
        if flux.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite flux value".into()));
        }
        let half = 0.5 * flux.length;
        load_t[a] += half * (flux.values[0] * (1.0 - flux.t[0]) + flux.values[1] * (1.0 - flux.t[1]));
        load_t[b] += half * (flux.values[0] * flux.t[0] + flux.values[1] * flux.t[1]);
    }

    let ku = parts.stiffness.matvec(&lifting);
    let mut rhs = vec![0.0; parts.n_dofs];
    for node in 0..n_nodes {
        if let Some(d) = parts.u_dof[node] {
            rhs[d] = -epsilon * ku[node];
        }
        if let Some(d) = parts.l_dof[node] {
            rhs[d] = load_t[node] - ku[node];
        }
    }
    Ok(QrSystem {
        epsilon,
        mesh: parts.mesh,
        stiffness: parts.stiffness,
        mass: parts.mass,
        v_map: parts.v_map,
        t_map: parts.t_map,
        u_dof: parts.u_dof,
        l_dof: parts.l_dof,
        n_dofs: parts.n_dofs,
        rhs,
        lifting,
        load_t,
        f_nodal: None,
    })
}

impl QrSystem {
    /// Block matrix applied to a reduced vector, through two stiffness
    /// matvecs on scattered nodal vectors.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n_nodes = self.mesh.n_nodes();
        let mut xu = vec![0.0; n_nodes];
        let mut xl = vec![0.0; n_nodes];
        for node in 0..n_nodes {
            if let Some(d) = self.u_dof[node] {
                xu[node] = x[d];
            }
            if let Some(d) = self.l_dof[node] {
                xl[node] = x[d];
            }
        }
        let ku = self.stiffness.matvec(&xu);
        let kl = self.stiffness.matvec(&xl);
        let mut y = vec![0.0; self.n_dofs];
        for node in 0..n_nodes {
            if let Some(d) = self.u_dof[node] {
                y[d] = self.epsilon * ku[node] + kl[node];
            }
            if let Some(d) = self.l_dof[node] {
                y[d] = ku[node] - kl[node];
            }
        }
        y
    }

    fn build_band(&self) -> crate::linalg::BandMatrix {
        let k = &self.stiffness;
        let pairs = |i: usize, j: usize| {
            [
                (self.u_dof[i], self.u_dof[j], self.epsilon),
                (self.u_dof[i], self.l_dof[j], 1.0),
                (self.l_dof[i], self.u_dof[j], 1.0),
                (self.l_dof[i], self.l_dof[j], -1.0),
            ]
        };
        let mut bw = 0usize;
        for i in 0..k.n_rows {
            for (j, _) in k.row(i) {
                for (r, c, _) in pairs(i, j) {
                    if let (Some(r), Some(c)) = (r, c) {
                        if r >= c {
                            bw = bw.max(r - c);
                        }
                    }
                }
            }
        }
        let mut band = crate::linalg::BandMatrix::new(self.n_dofs, bw);
        for i in 0..k.n_rows {
            for (j, v) in k.row(i) {
                for (r, c, w) in pairs(i, j) {
                    if let (Some(r), Some(c)) = (r, c) {
                        if r >= c {
                            band.add(r, c, w * v);
                        }
                    }
                }
            }
        }
        band
    }

    /// Factor, solve, and polish with two refinement steps. Deterministic.
    pub fn solve(&self) -> Result<QrSolution> {
        let n_u = self.v_map.n_free();
        let n_lambda = self.t_map.n_free();
        let mk_solution = |x: &[f64], report: ResidualReport| -> Result<QrSolution> {
            let n_nodes = self.mesh.n_nodes();
            let mut u_vals = self.lifting.clone();
            let mut l_vals = vec![0.0; n_nodes];
            for node in 0..n_nodes {
                if let Some(d) = self.u_dof[node] {
                    u_vals[node] += x[d];
                }
                if let Some(d) = self.l_dof[node] {
                    l_vals[node] = x[d];
                }
            }
            Ok(QrSolution {
                u: FeFunction::new(self.mesh.clone(), u_vals)?,
                lambda: FeFunction::new(self.mesh.clone(), l_vals)?,
                epsilon: self.epsilon,
                residual: report,
            })
        };

        if self.n_dofs == 0 {
            return mk_solution(
                &[],
                ResidualReport {
                    algebraic_rel: 0.0,
                    rhs_norm: 0.0,
                    refinement_steps: 0,
                    d_min_abs: 0.0,
                    d_max_abs: 0.0,
                    n_u,
                    n_lambda,
                },
            );
        }

        let band = self.build_band();
        let factor = band.ldl().map_err(|e| {
            Error::Solver(format!(
                "factorization breakdown at epsilon={:e} with {} u-dofs and {} lambda-dofs: {e}",
                self.epsilon, n_u, n_lambda
            ))
        })?;

        let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b_norm = norm2(&self.rhs);
        let mut x = self.rhs.clone();
        factor.solve_in_place(&mut x);
        let refinement_steps = 2;
        for _ in 0..refinement_steps {
            let sx = self.apply(&x);
            let mut r: Vec<f64> = self.rhs.iter().zip(&sx).map(|(b, s)| b - s).collect();
            factor.solve_in_place(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        let sx = self.apply(&x);
        let res = norm2(&self.rhs.iter().zip(&sx).map(|(b, s)| b - s).collect::<Vec<_>>());
        let algebraic_rel = if b_norm > 0.0 { res / b_norm } else { res };
        if !algebraic_rel.is_finite() {
            return Err(Error::Solver(format!(
                "non-finite residual at epsilon={:e} with {} u-dofs and {} lambda-dofs",
                self.epsilon, n_u, n_lambda
            )));
        }
        mk_solution(
            &x,
            ResidualReport {
                algebraic_rel,
                rhs_norm: b_norm,
                refinement_steps,
                d_min_abs: factor.d_min_abs,
                d_max_abs: factor.d_max_abs,
                n_u,
                n_lambda,
            },
        )
    }
}

/// Weak residuals of the strong equations hidden in the solved system,
/// tested against the hat functions of the admissible nodes.
#[derive(Debug, Clone, Serialize)]
pub struct StrongResidualReport {
    /// sup over interior nodes of |(1+eps)(K u)_i - load_i| / scale.
    pub res_u: f64,
    /// sup over interior nodes of |(1+eps)(K l)_i + eps*load_i| / scale.
    pub res_lambda: f64,
    /// sup over lambda-free nodes of |(K(u-l))_i - load_i| / scale:
    /// the difference field solves the Neumann problem weakly.
    pub res_difference: f64,
    pub n_interior: usize,
    pub scale: f64,
}

pub fn strong_residuals(system: &QrSystem, sol: &QrSolution) -> StrongResidualReport {
    let k = &system.stiffness;
    let ku = k.matvec(&sol.u.values);
    let kl = k.matvec(&sol.lambda.values);
    let eps = system.epsilon;
    let mut scale = 0.0f64;
    for node in 0..system.mesh.n_nodes() {
        scale = scale.max(system.load_t[node].abs()).max(ku[node].abs()).max(kl[node].abs());
    }
    let scale = scale.max(1e-300);
    let mut res_u = 0.0f64;
    let mut res_lambda = 0.0f64;
    let mut res_difference = 0.0f64;
    let mut n_interior = 0usize;
    for node in 0..system.mesh.n_nodes() {
        let interior = system.u_dof[node].is_some() && system.l_dof[node].is_some();
        if interior {
            n_interior += 1;
            res_u = res_u.max(((1.0 + eps) * ku[node] - system.load_t[node]).abs());
            res_lambda = res_lambda.max(((1.0 + eps) * kl[node] + eps * system.load_t[node]).abs());
        }
        if system.l_dof[node].is_some() {
            res_difference = res_difference.max((ku[node] - kl[node] - system.load_t[node]).abs());
        }
    }
    StrongResidualReport {
        res_u: res_u / scale,
        res_lambda: res_lambda / scale,
        res_difference: res_difference / scale,
        n_interior,
        scale,
    }
}

/// Solves the source form with f replaced by f + delta * xi / ||xi||_{L2},
/// where xi is a seeded standard normal nodal field, so the L2 distance of
/// the perturbed source to f is exactly delta.
pub fn solve_noisy(
    mesh: &Arc<TriMesh>,
    epsilon: f64,
    f: &dyn Fn([f64; 2]) -> f64,
    delta: f64,
    seed: u64,
) -> Result<QrSolution> {
    if delta < 0.0 {
        return Err(Error::Solver(format!("noise amplitude must be nonnegative, got {delta}")));
    }
    let mut f_nodal: Vec<f64> = mesh.nodes.iter().map(|&p| f(p)).collect();
    let xi = normal_field(mesh.n_nodes(), seed);
    let mass = assemble_mass(mesh)?;
    let xi_norm = mass.bilinear(&xi, &xi).sqrt();
    if xi_norm > 0.0 {
        for (fv, x) in f_nodal.iter_mut().zip(&xi) {
            *fv += delta * x / xi_norm;
        }
    }
    let system = assemble_qr_source_nodal(mesh, epsilon, f_nodal)?;
    system.solve()
}

/// Seeded standard normal nodal field, reproducible across runs.
pub fn normal_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}
