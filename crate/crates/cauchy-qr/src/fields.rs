//! Manufactured exact fields, compatible sources, boundary data extraction
//! and corner-continuity checks.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use crate::geometry::{CornerKind, EdgeTag, PolygonSpec};
use crate::mesh::TriMesh;
use crate::{Error, Result};

type Scalar2 = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type Vector2 = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;

/// Closed-form scalar field with analytic gradient and Laplacian.
#[derive(Clone)]
pub struct ExactField {
    pub descriptor: String,
    value: Arc<Scalar2>,
    gradient: Arc<Vector2>,
    laplacian: Arc<Scalar2>,
}

impl fmt::Debug for ExactField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactField").field("descriptor", &self.descriptor).finish()
    }
}

impl ExactField {
    pub fn new(
        descriptor: impl Into<String>,
        value: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        laplacian: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ExactField {
            descriptor: descriptor.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            laplacian: Arc::new(laplacian),
        }
    }

    pub fn constant(c: f64) -> Self {
        ExactField::new(format!("constant({c})"), move |_| c, |_| [0.0, 0.0], |_| 0.0)
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        (self.gradient)(p)
    }

    pub fn laplacian(&self, p: [f64; 2]) -> f64 {
        (self.laplacian)(p)
    }

    /// Central-difference gradient, for consistency checks.
    pub fn fd_gradient(&self, p: [f64; 2], step: f64) -> [f64; 2] {
        let v = |q| self.value(q);
        [
            (v([p[0] + step, p[1]]) - v([p[0] - step, p[1]])) / (2.0 * step),
            (v([p[0], p[1] + step]) - v([p[0], p[1] - step])) / (2.0 * step),
        ]
    }

    /// Five-point difference Laplacian, for consistency checks.
    pub fn fd_laplacian(&self, p: [f64; 2], step: f64) -> f64 {
        let v = |q| self.value(q);
        (v([p[0] + step, p[1]]) + v([p[0] - step, p[1]]) + v([p[0], p[1] + step])
            + v([p[0], p[1] - step])
            - 4.0 * v(p))
            / (step * step)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CornerSingParams {
    alpha: f64,
    vertex: [f64; 2],
    theta0: f64,
}

impl Default for CornerSingParams {
    fn default() -> Self {
        // Reentrant corner of the built-in L-shape: opening 3*pi/2 starting
        // at the upward leg.
        CornerSingParams { alpha: 2.0 / 3.0, vertex: [0.5, 0.5], theta0: std::f64::consts::FRAC_PI_2 }
    }
}

fn parse_params<T: Default + for<'de> Deserialize<'de>>(params: &serde_json::Value) -> Result<T> {
    if params.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(params.clone()).map_err(|e| Error::Fields(format!("bad parameters: {e}")))
}

/// Named harmonic fields: `exp_cos` (e^x cos y), `poly2` (x^2 - y^2),
/// `corner_sing` (r^alpha sin(alpha theta) about a vertex, theta measured
/// counterclockwise from `theta0`).
pub fn harmonic_catalog(name: &str, params: &serde_json::Value) -> Result<ExactField> {
    match name {
        "exp_cos" => Ok(ExactField::new(
            "exp_cos",
            |p| p[0].exp() * p[1].cos(),
            |p| [p[0].exp() * p[1].cos(), -p[0].exp() * p[1].sin()],
            |_| 0.0,
        )),
        "poly2" => Ok(ExactField::new(
            "poly2",
            |p| p[0] * p[0] - p[1] * p[1],
            |p| [2.0 * p[0], -2.0 * p[1]],
            |_| 0.0,
        )),
        "corner_sing" => {
            let cp: CornerSingParams = parse_params(params)?;
            let CornerSingParams { alpha, vertex, theta0 } = cp;
            if alpha <= 0.0 {
                return Err(Error::Fields(format!("corner_sing needs alpha > 0, got {alpha}")));
            }
            let polar = move |p: [f64; 2]| {
                let dx = p[0] - vertex[0];
                let dy = p[1] - vertex[1];
                let r = dx.hypot(dy);
                let theta = (dy.atan2(dx) - theta0).rem_euclid(2.0 * std::f64::consts::PI);
                (r, theta)
            };
            let descriptor = format!(
                "corner_sing(alpha={alpha}, vertex=({}, {}), theta0={theta0})",
                vertex[0], vertex[1]
            );
            let p1 = polar;
            let p2 = polar;
            Ok(ExactField::new(
                descriptor,
                move |p| {
                    let (r, theta) = p1(p);
                    r.powf(alpha) * (alpha * theta).sin()
                },
                move |p| {
                    // In the frame whose x-axis points along theta0 the polar
                    // chain rule gives alpha r^(alpha-1) (sin, cos) of
                    // (alpha-1)*theta; rotate back by theta0 afterwards.
                    let (r, theta) = p2(p);
                    let s = alpha * r.powf(alpha - 1.0);
                    let gxl = s * ((alpha - 1.0) * theta).sin();
                    let gyl = s * ((alpha - 1.0) * theta).cos();
                    let (c0, s0) = (theta0.cos(), theta0.sin());
                    [c0 * gxl - s0 * gyl, s0 * gxl + c0 * gyl]
                },
                |_| 0.0,
            ))
        }
        other => Err(Error::Fields(format!(
            "unknown harmonic '{other}'; known: exp_cos, poly2, corner_sing"
        ))),
    }
}

/// Source problem pair: `u_star` with vanishing trace and flux on the tagged
/// accessible edges, and `source = -laplacian(u_star)`.
#[derive(Debug, Clone)]
pub struct CompatiblePair {
    pub source: ExactField,
    pub u_star: ExactField,
    /// sqrt of integral of u^2 + |grad u|^2 + (lap u)^2 by quadrature.
    pub u_star_graph_norm: f64,
}

fn on_line_y0(p: [f64; 2]) -> bool {
    p[1].abs() <= 1e-12
}

fn on_line_x1(p: [f64; 2]) -> bool {
    (p[0] - 1.0).abs() <= 1e-12
}

fn on_line_x_half(p: [f64; 2]) -> bool {
    (p[0] - 0.5).abs() <= 1e-12
}

fn gamma_layout_ok(spec: &PolygonSpec, admissible: &[&dyn Fn([f64; 2]) -> bool]) -> bool {
    let mut seen = false;
    for e in 0..spec.n_edges() {
        if spec.edge_tags[e] != EdgeTag::Gamma {
            continue;
        }
        seen = true;
        let (a, b) = spec.edge_endpoints(e);
        let on_one = admissible.iter().any(|pred| pred(a) && pred(b));
        if !on_one {
            return false;
        }
    }
    seen
}

// (1-x)^2 sin(pi x) and its first four derivatives.
fn g_chain(x: f64) -> [f64; 5] {
    use std::f64::consts::PI;
    let (s, c) = ((PI * x).sin(), (PI * x).cos());
    let w = 1.0 - x;
    [
        w * w * s,
        -2.0 * w * s + w * w * PI * c,
        2.0 * s - 4.0 * PI * w * c - PI * PI * w * w * s,
        6.0 * PI * c + 6.0 * PI * PI * w * s - PI.powi(3) * w * w * c,
        -12.0 * PI * PI * s + 8.0 * PI.powi(3) * w * c + PI.powi(4) * w * w * s,
    ]
}

pub fn compatible_source(spec: &PolygonSpec, name: &str) -> Result<CompatiblePair> {
    use std::f64::consts::PI;
    let (u_star, source, layout): (ExactField, ExactField, &str) = match name {
        // u = y^2 sin(pi x): u and du/dy vanish on y = 0.
        "one_edge" => (
            ExactField::new(
                "u_star: y^2 sin(pi x), flat on y=0",
                |p| p[1] * p[1] * (PI * p[0]).sin(),
                |p| {
                    [
                        PI * p[1] * p[1] * (PI * p[0]).cos(),
                        2.0 * p[1] * (PI * p[0]).sin(),
                    ]
                },
                |p| (2.0 - PI * PI * p[1] * p[1]) * (PI * p[0]).sin(),
            ),
            ExactField::new(
                "source: (pi^2 y^2 - 2) sin(pi x)",
                |p| (PI * PI * p[1] * p[1] - 2.0) * (PI * p[0]).sin(),
                |p| {
                    [
                        PI * (PI * PI * p[1] * p[1] - 2.0) * (PI * p[0]).cos(),
                        2.0 * PI * PI * p[1] * (PI * p[0]).sin(),
                    ]
                },
                |p| PI * PI * (4.0 - PI * PI * p[1] * p[1]) * (PI * p[0]).sin(),
            ),
            "y=0",
        ),
        // u = y^2 (1-x)^2 sin(pi x): u and the normal flux vanish on y = 0
        // and on x = 1.
        "two_edge" => (
            ExactField::new(
                "u_star: y^2 (1-x)^2 sin(pi x), flat on y=0 and x=1",
                |p| p[1] * p[1] * g_chain(p[0])[0],
                |p| {
                    let g = g_chain(p[0]);
                    [p[1] * p[1] * g[1], 2.0 * p[1] * g[0]]
                },
                |p| {
                    let g = g_chain(p[0]);
                    p[1] * p[1] * g[2] + 2.0 * g[0]
                },
            ),
            ExactField::new(
                "source: -(y^2 g'' + 2 g), g = (1-x)^2 sin(pi x)",
                |p| {
                    let g = g_chain(p[0]);
                    -(p[1] * p[1] * g[2] + 2.0 * g[0])
                },
                |p| {
                    let g = g_chain(p[0]);
                    [-(p[1] * p[1] * g[3] + 2.0 * g[1]), -2.0 * p[1] * g[2]]
                },
                |p| {
                    let g = g_chain(p[0]);
                    -(p[1] * p[1] * g[4] + 4.0 * g[2])
                },
            ),
            "y=0 and/or x=1",
        ),
        // u = (x-1/2)^2 sin(pi y): u and the normal flux vanish on the
        // inner edge line x = 1/2 of the L geometry.
        "inner_edge" => (
            ExactField::new(
                "u_star: (x-1/2)^2 sin(pi y), flat on x=1/2",
                |p| {
                    let dx = p[0] - 0.5;
                    dx * dx * (PI * p[1]).sin()
                },
                |p| {
                    let dx = p[0] - 0.5;
                    [2.0 * dx * (PI * p[1]).sin(), PI * dx * dx * (PI * p[1]).cos()]
                },
                |p| {
                    let dx = p[0] - 0.5;
                    (2.0 - PI * PI * dx * dx) * (PI * p[1]).sin()
                },
            ),
            ExactField::new(
                "source: (pi^2 (x-1/2)^2 - 2) sin(pi y)",
                |p| {
                    let dx = p[0] - 0.5;
                    (PI * PI * dx * dx - 2.0) * (PI * p[1]).sin()
                },
                |p| {
                    let dx = p[0] - 0.5;
                    [
                        2.0 * PI * PI * dx * (PI * p[1]).sin(),
                        PI * (PI * PI * dx * dx - 2.0) * (PI * p[1]).cos(),
                    ]
                },
                |p| {
                    let dx = p[0] - 0.5;
                    PI * PI * (4.0 - PI * PI * dx * dx) * (PI * p[1]).sin()
                },
            ),
            "x=1/2",
        ),
        other => {
            return Err(Error::Fields(format!(
                "unknown compatible pair '{other}'; known: one_edge, two_edge, inner_edge"
            )))
        }
    };

    let preds: Vec<&dyn Fn([f64; 2]) -> bool> = match name {
        "one_edge" => vec![&on_line_y0],
        "inner_edge" => vec![&on_line_x_half],
        _ => vec![&on_line_y0, &on_line_x1],
    };
    if !gamma_layout_ok(spec, &preds) {
        return Err(Error::Fields(format!(
            "accessible edges must lie on {layout} for pair '{name}'"
        )));
    }

    // Verify vanishing trace and flux at two-point Gauss nodes of every
    // accessible edge.
    for e in 0..spec.n_edges() {
        if spec.edge_tags[e] != EdgeTag::Gamma {
            continue;
        }
        let (a, b) = spec.edge_endpoints(e);
        let nu = spec.edge_normal(e);
        for t in gauss2_params() {
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let tr = u_star.value(p);
            let g = u_star.gradient(p);
            let flux = g[0] * nu[0] + g[1] * nu[1];
            if tr.abs() > 1e-12 || flux.abs() > 1e-12 {
                return Err(Error::Fields(format!(
                    "pair '{name}' fails to vanish on edge {e}: trace {tr:.3e}, flux {flux:.3e}"
                )));
            }
        }
    }

    let u_star_graph_norm = graph_norm_by_quadrature(spec, &u_star)?;
    Ok(CompatiblePair { source, u_star, u_star_graph_norm })
}

/// Integral of u^2 + |grad u|^2 + (lap u)^2 over the polygon, degree-4 rule
/// on a structured mesh.
fn graph_norm_by_quadrature(spec: &PolygonSpec, u: &ExactField) -> Result<f64> {
    let mesh = crate::mesh::generate_structured(spec, 64)?;
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        let area = mesh.triangle_area(t);
        for (bary, w) in crate::fem::TRI6 {
            let p = [
                bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0],
                bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1],
            ];
            let v = u.value(p);
            let g = u.gradient(p);
            let l = u.laplacian(p);
            acc += w * area * (v * v + g[0] * g[0] + g[1] * g[1] + l * l);
        }
    }
    Ok(acc.sqrt())
}

const GAUSS2_OFFSET: f64 = 0.28867513459481287; // 1/(2 sqrt(3))

fn gauss2_params() -> [f64; 2] {
    [0.5 - GAUSS2_OFFSET, 0.5 + GAUSS2_OFFSET]
}

/// Neumann datum sampled on one accessible mesh edge at the two-point Gauss
/// nodes, with the outward normal of the counterclockwise boundary.
#[derive(Debug, Clone)]
pub struct EdgeFlux {
    pub nodes: [usize; 2],
    /// Parameters of the Gauss nodes along the edge, in (0, 1).
    pub t: [f64; 2],
    pub points: [[f64; 2]; 2],
    pub values: [f64; 2],
    pub length: f64,
}

/// Dirichlet values on the closed accessible boundary plus per-edge fluxes.
#[derive(Debug, Clone)]
pub struct CauchyData {
    /// (node index, value), sorted by node index, on the closed accessible part.
    pub g0: Vec<(usize, f64)>,
    pub g1: Vec<EdgeFlux>,
}

pub fn cauchy_data_from(exact: &ExactField, mesh: &TriMesh) -> CauchyData {
    let g0 = mesh
        .nodes_on_closed_part(EdgeTag::Gamma)
        .into_iter()
        .map(|i| (i, exact.value(mesh.nodes[i])))
        .collect();
    let mut g1 = Vec::new();
    for be in &mesh.boundary_edges {
        if be.tag != EdgeTag::Gamma {
            continue;
        }
        let a = mesh.nodes[be.nodes[0]];
        let b = mesh.nodes[be.nodes[1]];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let length = dx.hypot(dy);
        // Boundary runs counterclockwise, interior on the left, so the
        // outward normal is the tangent rotated clockwise.
        let nu = [dy / length, -dx / length];
        let t = gauss2_params();
        let points = t.map(|s| [a[0] + s * dx, a[1] + s * dy]);
        let values = points.map(|p| {
            let g = exact.gradient(p);
            g[0] * nu[0] + g[1] * nu[1]
        });
        g1.push(EdgeFlux { nodes: be.nodes, t, points, values, length });
    }
    CauchyData { g0, g1 }
}

/// Dirichlet datum restricted to one polygon edge.
pub struct EdgeData<'a> {
    pub edge: usize,
    pub eval: Box<dyn Fn([f64; 2]) -> f64 + 'a>,
}

#[derive(Debug, Clone)]
pub struct CornerGap {
    pub vertex: usize,
    pub position: [f64; 2],
    pub gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub gaps: Vec<CornerGap>,
    pub max_gap: f64,
}

pub const COMPATIBILITY_FLAG_TOL: f64 = 1e-9;

/// Pointwise continuity of the Dirichlet datum across corners where two
/// accessible edges meet. Flux data is allowed to jump there (the normal
/// rotates), so only the traces are compared.
pub fn check_nodal_compatibility(g0_edges: &[EdgeData], spec: &PolygonSpec) -> Result<CompatibilityReport> {
    let n = spec.n_edges();
    let mut by_edge: Vec<Option<&EdgeData>> = vec![None; n];
    for d in g0_edges {
        if d.edge >= n {
            return Err(Error::Fields(format!("edge index {} out of range 0..{n}", d.edge)));
        }
        by_edge[d.edge] = Some(d);
    }
    for e in 0..n {
        if spec.edge_tags[e] == EdgeTag::Gamma && by_edge[e].is_none() {
            return Err(Error::Fields(format!("missing Dirichlet data on accessible edge {e}")));
        }
    }
    let corners = crate::geometry::classify_corners(spec)?;
    let mut gaps = Vec::new();
    let mut max_gap = 0.0f64;
    for c in &corners {
        if c.kind != CornerKind::Gamma {
            continue;
        }
        let [prev, next] = c.incident_edges;
        let (f_prev, f_next) = (by_edge[prev].unwrap(), by_edge[next].unwrap());
        let gap = ((f_prev.eval)(c.position) - (f_next.eval)(c.position)).abs();
        max_gap = max_gap.max(gap);
        gaps.push(CornerGap {
            vertex: c.vertex,
            position: c.position,
            gap,
            flagged: gap > COMPATIBILITY_FLAG_TOL,
        });
    }
    Ok(CompatibilityReport { gaps, max_gap })
}
