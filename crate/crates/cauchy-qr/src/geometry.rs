//! Polygonal domain description: tagged boundary edges, corner
//! classification and the Sobolev regularity exponent driven by corner
//! openings.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary tag. `G` marks the accessible part of the boundary (both
/// Dirichlet and Neumann data known), `GT` the inaccessible part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeTag {
    #[serde(rename = "G")]
    Gamma,
    #[serde(rename = "GT")]
    GammaTilde,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Gamma => "G",
            EdgeTag::GammaTilde => "GT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "G" => Some(EdgeTag::Gamma),
            "GT" => Some(EdgeTag::GammaTilde),
            _ => None,
        }
    }
}

/// Simple polygon with counterclockwise vertices; edge `i` joins vertex `i`
/// to vertex `(i+1) % n` and carries one tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub vertices: Vec<[f64; 2]>,
    pub edge_tags: Vec<EdgeTag>,
}

/// Corner kind, decided by the tags of the two incident edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CornerKind {
    Gamma,
    GammaTilde,
    Mixed,
}

/// One polygon corner: interior opening angle and incident edge indices
/// `[previous, next]` in counterclockwise order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CornerRecord {
    pub vertex: usize,
    pub position: [f64; 2],
    pub omega: f64,
    pub kind: CornerKind,
    pub incident_edges: [usize; 2],
}

/// Supremal regularity exponents split by corner family, plus the working
/// exponent `s_used = s_sup - slack`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentReport {
    pub s_c_sup: f64,
    pub s_m_sup: f64,
    pub s_sup: f64,
    pub s_used: f64,
}

/// Default safety margin below the supremal exponent.
pub const DEFAULT_SLACK: f64 = 0.01;

/// Named sides of the unit square, counterclockwise from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareSide {
    Bottom,
    Right,
    Top,
    Left,
}

impl SquareSide {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bottom" => Some(SquareSide::Bottom),
            "right" => Some(SquareSide::Right),
            "top" => Some(SquareSide::Top),
            "left" => Some(SquareSide::Left),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            SquareSide::Bottom => 0,
            SquareSide::Right => 1,
            SquareSide::Top => 2,
            SquareSide::Left => 3,
        }
    }
}

impl PolygonSpec {
    pub fn new(vertices: Vec<[f64; 2]>, edge_tags: Vec<EdgeTag>) -> Result<Self> {
        let spec = PolygonSpec { vertices, edge_tags };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit square; `gamma` lists the accessible sides, the rest are `GT`.
    pub fn unit_square(gamma: &[SquareSide]) -> Result<Self> {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mut tags = [EdgeTag::GammaTilde; 4];
        for side in gamma {
            tags[side.index()] = EdgeTag::Gamma;
        }
        PolygonSpec::new(vertices, tags.to_vec())
    }

    /// L-shaped domain: the unit square with the closed upper-right quarter
    /// removed. Six edges, counterclockwise from the origin; `gamma` lists
    /// accessible edge indices. The reentrant corner sits at (1/2, 1/2).
    pub fn l_shape(gamma: &[usize]) -> Result<Self> {
        let vertices = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ];
        let mut tags = [EdgeTag::GammaTilde; 6];
        for &i in gamma {
            if i >= 6 {
                return Err(Error::Geometry(format!("L-shape edge index {i} out of range 0..6")));
            }
            tags[i] = EdgeTag::Gamma;
        }
        PolygonSpec::new(vertices, tags.to_vec())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PolygonSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polygon serialization cannot fail")
    }

    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_endpoints(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = self.edge_endpoints(i);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    /// Unit outward normal of edge `i`; the interior lies left of the
    /// counterclockwise edge direction.
    pub fn edge_normal(&self, i: usize) -> [f64; 2] {
        let (a, b) = self.edge_endpoints(i);
        let t = [b[0] - a[0], b[1] - a[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        [t[1] / len, -t[0] / len]
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * acc
    }

    pub fn area(&self) -> f64 {
        self.signed_area()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in self.vertices.iter().skip(i + 1) {
                d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        d
    }

    pub fn has_tag(&self, tag: EdgeTag) -> bool {
        self.edge_tags.iter().any(|&t| t == tag)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if self.edge_tags.len() != n {
            return Err(Error::Geometry(format!(
                "{} edge tags for {} edges; edge i joins vertex i to vertex (i+1) % n",
                self.edge_tags.len(),
                n
            )));
        }
        for i in 0..n {
            let (a, b) = self.edge_endpoints(i);
            if a == b {
                return Err(Error::Geometry(format!("edge {i} has zero length (repeated vertex)")));
            }
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::Geometry(
                "vertices must be counterclockwise (positive signed area); reverse the vertex list".into(),
            ));
        }
        if !self.has_tag(EdgeTag::Gamma) || !self.has_tag(EdgeTag::GammaTilde) {
            return Err(Error::Geometry(
                "boundary must contain at least one G edge and one GT edge".into(),
            ));
        }
        // Zero-opening corners are caught before the simplicity scan so a
        // doubled-back spike names its vertex instead of an edge pair.
        for j in 0..n {
            let omega = self.interior_angle(j);
            if omega <= ANGLE_TOL || omega >= 2.0 * std::f64::consts::PI - ANGLE_TOL {
                return Err(Error::Geometry(format!(
                    "degenerate corner at vertex {j} ({}, {}): opening angle {omega:.3e} outside (0, 2*pi)",
                    self.vertices[j][0], self.vertices[j][1]
                )));
            }
        }
        self.check_simple()?;
        Ok(())
    }

    /// Interior opening angle at vertex `j` in (0, 2*pi); pi - (turn angle)
    /// for a counterclockwise polygon, so reflex corners exceed pi.
    fn interior_angle(&self, j: usize) -> f64 {
        let n = self.vertices.len();
        let prev = self.vertices[(j + n - 1) % n];
        let here = self.vertices[j];
        let next = self.vertices[(j + 1) % n];
        let d1 = [here[0] - prev[0], here[1] - prev[1]];
        let d2 = [next[0] - here[0], next[1] - here[1]];
        let cross = d1[0] * d2[1] - d1[1] * d2[0];
        let dot = d1[0] * d2[0] + d1[1] * d2[1];
        std::f64::consts::PI - cross.atan2(dot)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Adjacent edges share exactly one endpoint; skip them.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = self.edge_endpoints(i);
                let (c, d) = self.edge_endpoints(j);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::Geometry(format!("polygon is not simple: edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }
}

const ANGLE_TOL: f64 = 1e-12;

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Walks the polygon and classifies every corner by the tags of its two
/// incident edges. Flat transitions (opening exactly pi) between differently
/// tagged edges are legal and classified `Mixed`.
pub fn classify_corners(spec: &PolygonSpec) -> Result<Vec<CornerRecord>> {
    let n = spec.vertices.len();
    let mut corners = Vec::with_capacity(n);
    let mut angle_sum = 0.0;
    for j in 0..n {
        let e_prev = (j + n - 1) % n;
        let e_next = j;
        let omega = spec.interior_angle(j);
        angle_sum += omega;
        let kind = match (spec.edge_tags[e_prev], spec.edge_tags[e_next]) {
            (EdgeTag::Gamma, EdgeTag::Gamma) => CornerKind::Gamma,
            (EdgeTag::GammaTilde, EdgeTag::GammaTilde) => CornerKind::GammaTilde,
            _ => CornerKind::Mixed,
        };
        corners.push(CornerRecord {
            vertex: j,
            position: spec.vertices[j],
            omega,
            kind,
            incident_edges: [e_prev, e_next],
        });
    }
    let expected = (n as f64 - 2.0) * std::f64::consts::PI;
    if (angle_sum - expected).abs() > 1e-9 {
        return Err(Error::Geometry(format!(
            "interior angles sum to {angle_sum:.15}, expected (n-2)*pi = {expected:.15}"
        )));
    }
    Ok(corners)
}

/// Supremal regularity exponent of the regularized solution pair.
///
/// Corners on a single boundary part limit `s` through `1 + pi/omega` once
/// some opening exceeds pi; mixed corners through `1 + pi/(2*omega)` once
/// some opening reaches pi/2. Without such corners a family contributes the
/// unconstrained value 2. The working exponent backs off by `slack` because
/// the suprema are not attained.
pub fn regularity_exponent(corners: &[CornerRecord], slack: f64) -> Result<ExponentReport> {
    use std::f64::consts::PI;
    let single: Vec<&CornerRecord> = corners
        .iter()
        .filter(|c| c.kind != CornerKind::Mixed)
        .collect();
    let mixed: Vec<&CornerRecord> = corners
        .iter()
        .filter(|c| c.kind == CornerKind::Mixed)
        .collect();

    let s_c_sup = if single.iter().any(|c| c.omega > PI) {
        single
            .iter()
            .map(|c| 1.0 + PI / c.omega)
            .fold(f64::INFINITY, f64::min)
            .min(2.0)
    } else {
        2.0
    };
    let s_m_sup = if mixed.iter().any(|c| c.omega >= PI / 2.0) {
        mixed
            .iter()
            .map(|c| 1.0 + PI / (2.0 * c.omega))
            .fold(f64::INFINITY, f64::min)
            .min(2.0)
    } else {
        2.0
    };
    let s_sup = s_c_sup.min(s_m_sup);
    if !(0.0..s_sup - 1.0).contains(&slack) {
        return Err(Error::Geometry(format!(
            "slack {slack} must lie in [0, s_sup - 1) = [0, {})",
            s_sup - 1.0
        )));
    }
    Ok(ExponentReport {
        s_c_sup,
        s_m_sup,
        s_sup,
        s_used: s_sup - slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square_bottom_right() -> PolygonSpec {
        PolygonSpec::unit_square(&[SquareSide::Bottom, SquareSide::Right]).unwrap()
    }

    #[test]
    fn square_corner_classification() {
        let corners = classify_corners(&square_bottom_right()).unwrap();
        assert_eq!(corners.len(), 4);
        for c in &corners {
            assert_relative_eq!(c.omega, PI / 2.0, max_relative = 1e-14);
        }
        // (0,0): GT left edge meets G bottom edge.
        assert_eq!(corners[0].kind, CornerKind::Mixed);
        // (1,0): G bottom meets G right.
        assert_eq!(corners[1].kind, CornerKind::Gamma);
        // (1,1): G right meets GT top.
        assert_eq!(corners[2].kind, CornerKind::Mixed);
        // (0,1): GT top meets GT left.
        assert_eq!(corners[3].kind, CornerKind::GammaTilde);
        assert_eq!(corners[1].incident_edges, [0, 1]);
    }

    #[test]
    fn reflex_pentagon_angles_match_hand_computation() {
        let spec = PolygonSpec::new(
            vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 2.0]],
            vec![
                EdgeTag::Gamma,
                EdgeTag::Gamma,
                EdgeTag::Gamma,
                EdgeTag::GammaTilde,
                EdgeTag::GammaTilde,
            ],
        )
        .unwrap();
        let corners = classify_corners(&spec).unwrap();
        let expected = [PI / 2.0, PI / 4.0, 3.0 * PI / 2.0, PI / 4.0, PI / 2.0];
        for (c, &omega) in corners.iter().zip(expected.iter()) {
            assert_relative_eq!(c.omega, omega, max_relative = 1e-13);
        }
        let sum: f64 = corners.iter().map(|c| c.omega).sum();
        assert_relative_eq!(sum, 3.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn square_exponents() {
        let corners = classify_corners(&square_bottom_right()).unwrap();
        let rep = regularity_exponent(&corners, DEFAULT_SLACK).unwrap();
        assert_relative_eq!(rep.s_c_sup, 2.0);
        assert_relative_eq!(rep.s_m_sup, 2.0);
        assert_relative_eq!(rep.s_sup, 2.0);
        assert_relative_eq!(rep.s_used, 1.99);
    }

    #[test]
    fn flat_mixed_corner_gives_three_halves() {
        // Unit square with the bottom split at (1/2, 0): G on the left half,
        // GT on the right half, so the flat transition is a mixed corner with
        // opening pi.
        let spec = PolygonSpec::new(
            vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![
                EdgeTag::Gamma,
                EdgeTag::GammaTilde,
                EdgeTag::GammaTilde,
                EdgeTag::GammaTilde,
                EdgeTag::Gamma,
            ],
        )
        .unwrap();
        let corners = classify_corners(&spec).unwrap();
        let flat = &corners[1];
        assert_eq!(flat.kind, CornerKind::Mixed);
        assert_relative_eq!(flat.omega, PI, max_relative = 1e-14);
        let rep = regularity_exponent(&corners, DEFAULT_SLACK).unwrap();
        assert_relative_eq!(rep.s_m_sup, 1.5);
        assert_relative_eq!(rep.s_used, 1.49);
    }

    #[test]
    fn reentrant_gamma_corner_caps_s_c() {
        // Hexagonal L-shape with every edge on G except one, so the reentrant
        // 3*pi/2 corner at (1/2,1/2) lies between two G edges.
        let spec = PolygonSpec::l_shape(&[0, 1, 2, 3, 4]).unwrap();
        let corners = classify_corners(&spec).unwrap();
        let reentrant = corners.iter().find(|c| c.omega > PI).unwrap();
        assert_eq!(reentrant.kind, CornerKind::Gamma);
        assert_relative_eq!(reentrant.omega, 1.5 * PI, max_relative = 1e-14);
        let rep = regularity_exponent(&corners, DEFAULT_SLACK).unwrap();
        assert_relative_eq!(rep.s_c_sup, 1.0 + 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(rep.s_sup, 5.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn l_shape_mixed_reentrant_corner() {
        // G on the two legs adjacent to the reentrant corner's previous side,
        // GT after: edges 0..=2 accessible makes the corner at (1/2,1/2)
        // mixed with opening 3*pi/2.
        let spec = PolygonSpec::l_shape(&[0, 1, 2]).unwrap();
        let corners = classify_corners(&spec).unwrap();
        let c = &corners[3];
        assert_relative_eq!(c.omega, 1.5 * PI, max_relative = 1e-14);
        assert_eq!(c.kind, CornerKind::Mixed);
        let rep = regularity_exponent(&corners, DEFAULT_SLACK).unwrap();
        assert_relative_eq!(rep.s_m_sup, 1.0 + 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn adding_a_constraining_corner_never_raises_s() {
        let base = classify_corners(&square_bottom_right()).unwrap();
        let rep0 = regularity_exponent(&base, 0.0).unwrap();
        let mut extended = base.clone();
        extended.push(CornerRecord {
            vertex: 4,
            position: [0.5, 0.5],
            omega: 1.2 * PI,
            kind: CornerKind::Mixed,
            incident_edges: [0, 0],
        });
        let rep1 = regularity_exponent(&extended, 0.0).unwrap();
        assert!(rep1.s_sup <= rep0.s_sup + 1e-15);
    }

    #[test]
    fn degenerate_zero_angle_rejected_with_vertex_name() {
        // Vertex 1 doubles back on itself.
        let err = PolygonSpec::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [0.5, 1.0]],
            vec![EdgeTag::Gamma, EdgeTag::Gamma, EdgeTag::GammaTilde, EdgeTag::GammaTilde],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vertex 1"), "message was: {msg}");
    }

    #[test]
    fn clockwise_rejected() {
        let err = PolygonSpec::new(
            vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]],
            vec![EdgeTag::Gamma, EdgeTag::Gamma, EdgeTag::GammaTilde, EdgeTag::GammaTilde],
        )
        .unwrap_err();
        assert!(err.to_string().contains("counterclockwise"));
    }

    #[test]
    fn self_intersecting_rejected() {
        // Positive signed area and no degenerate corners, but edges 0 and 2
        // cross, so only the simplicity scan can reject it.
        let err = PolygonSpec::new(
            vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [2.0, -2.0], [0.0, 4.0]],
            vec![
                EdgeTag::Gamma,
                EdgeTag::Gamma,
                EdgeTag::GammaTilde,
                EdgeTag::GammaTilde,
                EdgeTag::GammaTilde,
            ],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not simple"));
    }

    #[test]
    fn missing_tag_kind_rejected() {
        let err = PolygonSpec::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![EdgeTag::Gamma; 4],
        )
        .unwrap_err();
        assert!(err.to_string().contains("at least one"));
    }

    #[test]
    fn excessive_slack_rejected() {
        let corners = classify_corners(&square_bottom_right()).unwrap();
        assert!(regularity_exponent(&corners, 1.0).is_err());
        assert!(regularity_exponent(&corners, -0.1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = square_bottom_right();
        let text = spec.to_json();
        assert!(text.contains("\"G\"") && text.contains("\"GT\""));
        let back = PolygonSpec::from_json(&text).unwrap();
        assert_eq!(back.vertices, spec.vertices);
        assert_eq!(back.edge_tags, spec.edge_tags);
    }

    #[test]
    fn json_matches_documented_shape() {
        let text = r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "edge_tags": ["G","G","GT","GT"]}"#;
        let spec = PolygonSpec::from_json(text).unwrap();
        assert_eq!(spec.n_edges(), 4);
        assert_eq!(spec.edge_tags[0], EdgeTag::Gamma);
        assert_eq!(spec.edge_tags[3], EdgeTag::GammaTilde);
    }

    #[test]
    fn outward_normals_point_outward() {
        let spec = square_bottom_right();
        let expected = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        for i in 0..4 {
            let n = spec.edge_normal(i);
            assert_relative_eq!(n[0], expected[i][0], epsilon = 1e-15);
            assert_relative_eq!(n[1], expected[i][1], epsilon = 1e-15);
        }
    }
}
