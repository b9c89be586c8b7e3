//! P1 Lagrange kernel: sparse assembly, constrained-space bookkeeping for
//! the two boundary parts, discrete norms and quadrature-based error norms.

use std::sync::Arc;

use crate::geometry::EdgeTag;
use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Compressed sparse row matrix with sorted, deduplicated columns per row.
#[derive(Debug, Clone)]
pub struct SparseMat {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMat {
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Fem(format!("triplet ({i}, {j}) out of bounds {n_rows}x{n_cols}")));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                last = Some((i, j));
            }
            row_ptr[i + 1] = cols.len();
        }
        // Rows with no entries inherit the previous row's end offset.
        for i in 0..n_rows {
            if row_ptr[i + 1] < row_ptr[i] {
                row_ptr[i + 1] = row_ptr[i];
            }
        }
        Ok(SparseMat { n_rows, n_cols, row_ptr, cols, vals })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// u^T A v.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n_rows);
        assert_eq!(v.len(), self.n_cols);
        let mut acc = 0.0;
        for i in 0..self.n_rows {
            let mut row_acc = 0.0;
            for (j, a) in self.row(i) {
                row_acc += a * v[j];
            }
            acc += u[i] * row_acc;
        }
        acc
    }

    pub fn check_symmetry(&self, rel_tol: f64) -> Result<()> {
        if self.n_rows != self.n_cols {
            return Err(Error::Fem("symmetry check on a non-square matrix".into()));
        }
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                let vt = self.get(j, i);
                if (v - vt).abs() > rel_tol * scale {
                    return Err(Error::Fem(format!(
                        "asymmetry at ({i}, {j}): {v} vs {vt} exceeds {rel_tol} relative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Which homogeneous space a map describes: `V0` vanishes on the closed
/// accessible boundary, `V0Tilde` on the closed inaccessible one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    V0,
    V0Tilde,
}

/// Free-node bookkeeping for one constrained space. Corner nodes shared by
/// both boundary parts are constrained in both spaces.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub space_kind: SpaceKind,
    pub free_nodes: Vec<usize>,
    pub node_to_dof: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &TriMesh, space_kind: SpaceKind) -> Self {
        let tag = match space_kind {
            SpaceKind::V0 => EdgeTag::Gamma,
            SpaceKind::V0Tilde => EdgeTag::GammaTilde,
        };
        let constrained = mesh.nodes_on_closed_part(tag);
        let mut is_constrained = vec![false; mesh.n_nodes()];
        for i in constrained {
            is_constrained[i] = true;
        }
        let mut free_nodes = Vec::new();
        let mut node_to_dof = vec![None; mesh.n_nodes()];
        for i in 0..mesh.n_nodes() {
            if !is_constrained[i] {
                node_to_dof[i] = Some(free_nodes.len());
                free_nodes.push(i);
            }
        }
        DofMap { space_kind, free_nodes, node_to_dof }
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// Reduced vector from full nodal values.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_nodes.iter().map(|&i| full[i]).collect()
    }

    /// Full nodal vector with zeros at constrained nodes.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.free_nodes.len());
        let mut full = vec![0.0; self.node_to_dof.len()];
        for (dof, &node) in self.free_nodes.iter().enumerate() {
            full[node] = reduced[dof];
        }
        full
    }
}

/// Nodal P1 field over a shared mesh.
#[derive(Debug, Clone)]
pub struct FeFunction {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::Fem(format!(
                "{} nodal values for a mesh with {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fem("non-finite nodal value".into()));
        }
        Ok(FeFunction { mesh, values })
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let n = mesh.n_nodes();
        FeFunction { mesh, values: vec![0.0; n] }
    }

    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values: Vec<f64> = mesh.nodes.iter().map(|&p| f(p)).collect();
        FeFunction::new(mesh, values)
    }

    pub fn same_mesh(&self, other: &FeFunction) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.nodes == other.mesh.nodes
    }

    /// Point evaluation; `None` outside the mesh.
    pub fn eval(&self, p: [f64; 2]) -> Option<f64> {
        let (tri, bary) = self.mesh.locate(p)?;
        Some((0..3).map(|k| bary[k] * self.values[tri[k]]).sum())
    }

    /// Piecewise-constant gradient of the supporting triangle.
    pub fn eval_grad(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let (tri, _) = self.mesh.locate(p)?;
        Some(self.tri_gradient_nodes(tri))
    }

    fn tri_gradient_nodes(&self, tri: [usize; 3]) -> [f64; 2] {
        let [a, b, c] = tri;
        let (pa, pb, pc) = (self.mesh.nodes[a], self.mesh.nodes[b], self.mesh.nodes[c]);
        let two_area = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        let (va, vb, vc) = (self.values[a], self.values[b], self.values[c]);
        [
            (va * (pb[1] - pc[1]) + vb * (pc[1] - pa[1]) + vc * (pa[1] - pb[1])) / two_area,
            (va * (pc[0] - pb[0]) + vb * (pa[0] - pc[0]) + vc * (pb[0] - pa[0])) / two_area,
        ]
    }

    /// CSV dump: "node_index,x,y,value" with 17 significant digits.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("node_index,x,y,value\n");
        for (i, (p, v)) in self.mesh.nodes.iter().zip(self.values.iter()).enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i,
                crate::fmt_f64(p[0]),
                crate::fmt_f64(p[1]),
                crate::fmt_f64(*v)
            ));
        }
        out
    }
}

fn triangle_geometry(mesh: &TriMesh, t: usize) -> ([f64; 3], [f64; 3], f64) {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    // Gradient coefficients: grad phi_i = (bcoef_i, ccoef_i) / (2 area).
    let bcoef = [pb[1] - pc[1], pc[1] - pa[1], pa[1] - pb[1]];
    let ccoef = [pc[0] - pb[0], pa[0] - pc[0], pb[0] - pa[0]];
    let two_area = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
    (bcoef, ccoef, 0.5 * two_area)
}

fn check_not_degenerate(mesh: &TriMesh, t: usize, area: f64) -> Result<()> {
    if area <= 1e-14 * mesh.h * mesh.h {
        return Err(Error::Fem(format!(
            "triangle {t} is degenerate: area {area:.3e} <= 1e-14 * h^2"
        )));
    }
    Ok(())
}

/// Stiffness matrix over all nodes; gradients are elementwise constant so a
/// one-point rule is exact.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseMat> {
    let n = mesh.n_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let (b, c, area) = triangle_geometry(mesh, t);
        check_not_degenerate(mesh, t, area)?;
        let nodes = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
                triplets.push((nodes[i], nodes[j], v));
            }
        }
    }
    SparseMat::from_triplets(n, n, &triplets)
}

/// Mass matrix over all nodes; the elementwise closed form equals the
/// three-point midpoint rule, exact for quadratics.
pub fn assemble_mass(mesh: &TriMesh) -> Result<SparseMat> {
    let n = mesh.n_nodes();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let (_, _, area) = triangle_geometry(mesh, t);
        check_not_degenerate(mesh, t, area)?;
        let nodes = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                triplets.push((nodes[i], nodes[j], v));
            }
        }
    }
    SparseMat::from_triplets(n, n, &triplets)
}

/// Stiffness and mass for one mesh, with dimension-checked norm helpers.
#[derive(Debug, Clone)]
pub struct MeshNorms {
    pub stiffness: SparseMat,
    pub mass: SparseMat,
}

impl MeshNorms {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        Ok(MeshNorms { stiffness: assemble_stiffness(mesh)?, mass: assemble_mass(mesh)? })
    }

    fn check(&self, u: &FeFunction) -> Result<()> {
        if u.values.len() != self.stiffness.n_rows {
            return Err(Error::Fem(format!(
                "function on a {}-node mesh against norms for {} nodes",
                u.values.len(),
                self.stiffness.n_rows
            )));
        }
        Ok(())
    }

    pub fn h1_seminorm(&self, u: &FeFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.stiffness.bilinear(&u.values, &u.values).max(0.0).sqrt())
    }

    pub fn l2_norm(&self, u: &FeFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.mass.bilinear(&u.values, &u.values).max(0.0).sqrt())
    }

    pub fn h1_norm(&self, u: &FeFunction) -> Result<f64> {
        let semi = self.h1_seminorm(u)?;
        let l2 = self.l2_norm(u)?;
        Ok((semi * semi + l2 * l2).sqrt())
    }

    /// Graph norm of the Laplacian: sqrt(h1_norm^2 + laplacian_l2^2).
    pub fn h1_delta_norm(&self, u: &FeFunction, laplacian_l2: f64) -> Result<f64> {
        let h1 = self.h1_norm(u)?;
        Ok((h1 * h1 + laplacian_l2 * laplacian_l2).sqrt())
    }
}

/// Degree-4 rule on the reference triangle: barycentric orbits of two points,
/// weights normalized to sum to one.
pub const TRI6: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445948490915965;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const W2: f64 = 0.109951743655322;
    [
        ([A1, A1, 1.0 - 2.0 * A1], W1),
        ([A1, 1.0 - 2.0 * A1, A1], W1),
        ([1.0 - 2.0 * A1, A1, A1], W1),
        ([A2, A2, 1.0 - 2.0 * A2], W2),
        ([A2, 1.0 - 2.0 * A2, A2], W2),
        ([1.0 - 2.0 * A2, A2, A2], W2),
    ]
};

/// L2 and H1 errors between a P1 field and an exact field, by the degree-4
/// rule on every triangle.
#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
}

pub fn error_norms(
    u_h: &FeFunction,
    exact: &dyn Fn([f64; 2]) -> f64,
    exact_grad: &dyn Fn([f64; 2]) -> [f64; 2],
) -> ErrorNorms {
    let mesh = &u_h.mesh;
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        let area = mesh.triangle_area(t);
        let grad_h = u_h.tri_gradient_nodes(tri);
        for (bary, w) in TRI6 {
            let p = [
                bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0],
                bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1],
            ];
            let uh = bary[0] * u_h.values[tri[0]] + bary[1] * u_h.values[tri[1]] + bary[2] * u_h.values[tri[2]];
            let diff = uh - exact(p);
            let ge = exact_grad(p);
            let gd = [grad_h[0] - ge[0], grad_h[1] - ge[1]];
            l2_sq += w * area * diff * diff;
            h1_sq += w * area * (gd[0] * gd[0] + gd[1] * gd[1]);
        }
    }
    ErrorNorms {
        l2: l2_sq.sqrt(),
        h1_semi: h1_sq.sqrt(),
        h1: (l2_sq + h1_sq).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PolygonSpec, SquareSide};
    use crate::mesh::generate_structured;
    use approx::assert_relative_eq;

    fn square_mesh(n: usize) -> Arc<TriMesh> {
        let spec = PolygonSpec::unit_square(&[SquareSide::Bottom, SquareSide::Right]).unwrap();
        Arc::new(generate_structured(&spec, n).unwrap())
    }

    fn lshape_mesh(n: usize) -> Arc<TriMesh> {
        let spec = PolygonSpec::l_shape(&[0, 1]).unwrap();
        Arc::new(generate_structured(&spec, n).unwrap())
    }

    #[test]
    fn stiffness_kills_constants() {
        for mesh in [square_mesh(3), lshape_mesh(2)] {
            let k = assemble_stiffness(&mesh).unwrap();
            k.check_symmetry(1e-14).unwrap();
            let ones = vec![1.0; mesh.n_nodes()];
            let y = k.matvec(&ones);
            assert!(y.iter().all(|v| v.abs() < 1e-12), "max {}", y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }

    #[test]
    fn mass_integrates_one_to_area() {
        let mesh = square_mesh(4);
        let m = assemble_mass(&mesh).unwrap();
        m.check_symmetry(1e-14).unwrap();
        let ones = vec![1.0; mesh.n_nodes()];
        assert_relative_eq!(m.bilinear(&ones, &ones), 1.0, epsilon = 1e-12);

        let lmesh = lshape_mesh(4);
        let m = assemble_mass(&lmesh).unwrap();
        let ones = vec![1.0; lmesh.n_nodes()];
        assert_relative_eq!(m.bilinear(&ones, &ones), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn linear_function_norms() {
        let mesh = square_mesh(5);
        let u = FeFunction::interpolate(mesh.clone(), |p| p[0]).unwrap();
        let norms = MeshNorms::new(&mesh).unwrap();
        assert_relative_eq!(norms.h1_seminorm(&u).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(norms.l2_norm(&u).unwrap(), (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        let h1 = norms.h1_norm(&u).unwrap();
        assert_relative_eq!(h1, (1.0f64 + 1.0 / 3.0).sqrt(), epsilon = 1e-12);

        let zero = FeFunction::zeros(mesh.clone());
        assert_relative_eq!(norms.h1_seminorm(&zero).unwrap(), 0.0);
        assert_relative_eq!(norms.h1_delta_norm(&zero, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let mesh = square_mesh(3);
        let u = FeFunction::interpolate(mesh.clone(), |_| 3.7).unwrap();
        let norms = MeshNorms::new(&mesh).unwrap();
        // The quadratic form cancels to rounding; the root halves the digits.
        assert!(norms.stiffness.bilinear(&u.values, &u.values).abs() < 1e-12);
        assert!(norms.h1_seminorm(&u).unwrap() < 1e-6);
    }

    #[test]
    fn mismatched_mesh_rejected() {
        let norms = MeshNorms::new(&square_mesh(3)).unwrap();
        let other = FeFunction::zeros(square_mesh(4));
        assert!(norms.h1_seminorm(&other).is_err());
    }

    #[test]
    fn dof_maps_exclude_closed_parts() {
        // 3x3 nodes; G = bottom + right (5 closed nodes), GT = top + left (5).
        let mesh = square_mesh(2);
        let v0 = DofMap::new(&mesh, SpaceKind::V0);
        let vt = DofMap::new(&mesh, SpaceKind::V0Tilde);
        assert_eq!(v0.n_free(), 4);
        assert_eq!(vt.n_free(), 4);
        assert_eq!(v0.n_free() + (mesh.n_nodes() - v0.n_free()), mesh.n_nodes());
        // Mixed corners (0,0) and (1,1) are constrained in both spaces.
        for corner in [[0.0, 0.0], [1.0, 1.0]] {
            let idx = mesh.nodes.iter().position(|p| *p == corner).unwrap();
            assert!(v0.node_to_dof[idx].is_none());
            assert!(vt.node_to_dof[idx].is_none());
        }
        // The center node is free in both.
        let center = mesh.nodes.iter().position(|p| *p == [0.5, 0.5]).unwrap();
        assert!(v0.node_to_dof[center].is_some());
        assert!(vt.node_to_dof[center].is_some());
        // Restrict/extend round-trip.
        let full: Vec<f64> = (0..mesh.n_nodes()).map(|i| i as f64).collect();
        let red = v0.restrict(&full);
        let back = v0.extend(&red);
        for (i, v) in back.iter().enumerate() {
            if v0.node_to_dof[i].is_some() {
                assert_eq!(*v, full[i]);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn degenerate_triangle_named() {
        let mut mesh = (*square_mesh(1)).clone();
        // Collapse node 3 onto node 2 to make triangle 1 degenerate.
        mesh.nodes[3] = mesh.nodes[2];
        let err = assemble_stiffness(&mesh).unwrap_err();
        assert!(err.to_string().contains("triangle 1"), "got: {err}");
    }

    #[test]
    fn error_norms_affine_exact() {
        let mesh = square_mesh(3);
        let u = FeFunction::interpolate(mesh, |p| 2.0 * p[0] - 0.5 * p[1] + 1.0).unwrap();
        let e = error_norms(&u, &|p| 2.0 * p[0] - 0.5 * p[1] + 1.0, &|_| [2.0, -0.5]);
        assert!(e.l2 <= 1e-12 && e.h1 <= 1e-12, "l2 {} h1 {}", e.l2, e.h1);
    }

    #[test]
    fn error_norms_zero_vs_one() {
        let mesh = square_mesh(4);
        let u = FeFunction::zeros(mesh);
        let e = error_norms(&u, &|_| 1.0, &|_| [0.0, 0.0]);
        assert_relative_eq!(e.l2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.h1_semi, 0.0);
    }

    #[test]
    fn quadratic_interpolation_l2_rate() {
        let exact = |p: [f64; 2]| p[0] * p[0];
        let grad = |p: [f64; 2]| [2.0 * p[0], 0.0];
        let coarse = FeFunction::interpolate(square_mesh(4), exact).unwrap();
        let fine = FeFunction::interpolate(square_mesh(8), exact).unwrap();
        let e_c = error_norms(&coarse, &exact, &grad);
        let e_f = error_norms(&fine, &exact, &grad);
        let ratio = e_c.l2 / e_f.l2;
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn smooth_interpolation_h1_rate_near_one() {
        use std::f64::consts::PI;
        let exact = |p: [f64; 2]| (PI * p[0]).sin() * (PI * p[1]).sin();
        let grad = |p: [f64; 2]| {
            [
                PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
            ]
        };
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let u = FeFunction::interpolate(square_mesh(n), exact).unwrap();
            errs.push(error_norms(&u, &exact, &grad).h1_semi);
        }
        let rate1 = (errs[0] / errs[1]).log2();
        let rate2 = (errs[1] / errs[2]).log2();
        assert!(rate1 >= 0.9 && rate2 >= 0.9, "rates {rate1} {rate2}");
    }

    #[test]
    fn matrices_invariant_under_node_permutation() {
        let mesh = square_mesh(3);
        let n = mesh.n_nodes();
        // Deterministic permutation: reverse order.
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let shuffled = TriMesh {
            nodes: perm.iter().map(|&old| mesh.nodes[old]).collect(),
            triangles: mesh
                .triangles
                .iter()
                .map(|t| [inv[t[0]], inv[t[1]], inv[t[2]]])
                .collect(),
            boundary_edges: mesh
                .boundary_edges
                .iter()
                .map(|be| crate::mesh::BoundaryEdge { nodes: [inv[be.nodes[0]], inv[be.nodes[1]]], tag: be.tag })
                .collect(),
            h: mesh.h,
            structured: None,
        };
        let k1 = assemble_stiffness(&mesh).unwrap();
        let k2 = assemble_stiffness(&shuffled).unwrap();
        let m1 = assemble_mass(&mesh).unwrap();
        let m2 = assemble_mass(&shuffled).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let u_shuf: Vec<f64> = perm.iter().map(|&old| u[old]).collect();
        assert_relative_eq!(k1.bilinear(&u, &u), k2.bilinear(&u_shuf, &u_shuf), max_relative = 1e-13);
        assert_relative_eq!(m1.bilinear(&u, &u), m2.bilinear(&u_shuf, &u_shuf), max_relative = 1e-13);
    }

    #[test]
    fn eval_and_grad_on_affine() {
        let mesh = square_mesh(4);
        let u = FeFunction::interpolate(mesh, |p| 3.0 * p[0] + 2.0 * p[1]).unwrap();
        let v = u.eval([0.37, 0.61]).unwrap();
        assert_relative_eq!(v, 3.0 * 0.37 + 2.0 * 0.61, epsilon = 1e-13);
        let g = u.eval_grad([0.37, 0.61]).unwrap();
        assert_relative_eq!(g[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fe_function_rejects_bad_values() {
        let mesh = square_mesh(2);
        assert!(FeFunction::new(mesh.clone(), vec![0.0; 3]).is_err());
        let mut vals = vec![0.0; mesh.n_nodes()];
        vals[0] = f64::NAN;
        assert!(FeFunction::new(mesh, vals).is_err());
    }

    #[test]
    fn dump_csv_shape() {
        let mesh = square_mesh(1);
        let u = FeFunction::interpolate(mesh, |p| p[0] + p[1]).unwrap();
        let csv = u.dump_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "node_index,x,y,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn tri6_weights_sum_to_one() {
        let s: f64 = TRI6.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-14);
        // Degree-4 exactness: integrate x^4 over the unit square mesh.
        let mesh = square_mesh(2);
        let mut integral = 0.0;
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles[t];
            let (pa, pb, pc) = (mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
            let area = mesh.triangle_area(t);
            for (bary, w) in TRI6 {
                let x = bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0];
                integral += w * area * x.powi(4);
            }
        }
        assert_relative_eq!(integral, 0.2, epsilon = 1e-13);
    }
}
