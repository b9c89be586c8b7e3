//! Conforming P1 triangulations: structured generators for the unit square
//! and the L-shaped domain, uniform refinement, plaintext serialization and
//! point location.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geometry::{EdgeTag, PolygonSpec};
use crate::{fmt_f64, Error, Result};

/// Oriented boundary edge; `nodes` follow the counterclockwise boundary walk,
/// so the domain interior lies on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

/// Built-in structured families with O(1) point location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuredKind {
    UnitSquare,
    LShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuredInfo {
    pub kind: StructuredKind,
    pub n: usize,
}

/// Triangle mesh with counterclockwise elements and tagged boundary edges.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Largest element diameter.
    pub h: f64,
    /// Set for meshes produced by the built-in generators (and preserved by
    /// uniform refinement); enables O(1) point location.
    pub structured: Option<StructuredInfo>,
}

const SQUARE_VERTICES: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
const LSHAPE_VERTICES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [1.0, 0.5],
    [0.5, 0.5],
    [0.5, 1.0],
    [0.0, 1.0],
];

fn points_match(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12
}

/// Matches `spec` against a vertex template up to cyclic rotation; returns
/// the rotation `r` such that `spec.vertices[(k + r) % n] == template[k]`.
fn match_template(spec: &PolygonSpec, template: &[[f64; 2]]) -> Option<usize> {
    let n = template.len();
    if spec.vertices.len() != n {
        return None;
    }
    (0..n).find(|&r| (0..n).all(|k| points_match(spec.vertices[(k + r) % n], template[k])))
}

/// Generates the structured mesh for a supported polygon. `n` is the number
/// of subdivisions per unit side; cells split along the bottom-left to
/// top-right diagonal, so `h = sqrt(2)/n`.
pub fn generate_structured(spec: &PolygonSpec, n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::Mesh("n_divisions must be positive".into()));
    }
    if let Some(r) = match_template(spec, &SQUARE_VERTICES) {
        let tags: Vec<EdgeTag> = (0..4).map(|k| spec.edge_tags[(k + r) % 4]).collect();
        return build_square(n, &tags, spec);
    }
    if let Some(r) = match_template(spec, &LSHAPE_VERTICES) {
        if n % 2 != 0 {
            return Err(Error::Mesh(format!(
                "L-shape needs an even n_divisions so the reentrant corner lies on the grid; got {n}"
            )));
        }
        let tags: Vec<EdgeTag> = (0..6).map(|k| spec.edge_tags[(k + r) % 6]).collect();
        return build_lshape(n, &tags, spec);
    }
    Err(Error::Mesh(
        "no structured generator for this polygon (supported: unit square, L-shape); \
         build the mesh externally and load it with read_mesh"
            .into(),
    ))
}

fn grid_coord(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

fn build_square(n: usize, _tags: &[EdgeTag], spec: &PolygonSpec) -> Result<TriMesh> {
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for iy in 0..=n {
        for ix in 0..=n {
            nodes.push([grid_coord(ix, n), grid_coord(iy, n)]);
        }
    }
    let at = |ix: usize, iy: usize| iy * (n + 1) + ix;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            let (a, b, c, d) = (at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    finish_mesh(nodes, triangles, spec, Some(StructuredInfo { kind: StructuredKind::UnitSquare, n }))
}

/// L-shape grid row widths: full rows below the notch, half rows above.
fn lshape_node_index(ix: usize, iy: usize, n: usize) -> usize {
    let half = n / 2;
    if iy <= half {
        iy * (n + 1) + ix
    } else {
        (half + 1) * (n + 1) + (iy - half - 1) * (half + 1) + ix
    }
}

fn build_lshape(n: usize, _tags: &[EdgeTag], spec: &PolygonSpec) -> Result<TriMesh> {
    let half = n / 2;
    let mut nodes = Vec::new();
    for iy in 0..=n {
        let width = if iy <= half { n } else { half };
        for ix in 0..=width {
            nodes.push([grid_coord(ix, n), grid_coord(iy, n)]);
        }
    }
    let at = |ix: usize, iy: usize| lshape_node_index(ix, iy, n);
    let mut triangles = Vec::new();
    for iy in 0..n {
        let width = if iy < half { n } else { half };
        for ix in 0..width {
            let (a, b, c, d) = (at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    finish_mesh(nodes, triangles, spec, Some(StructuredInfo { kind: StructuredKind::LShape, n }))
}

/// Extracts the boundary (triangle edges with single incidence, already in
/// counterclockwise orientation), tags it against the polygon and assembles
/// the mesh.
fn finish_mesh(
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    spec: &PolygonSpec,
    structured: Option<StructuredInfo>,
) -> Result<TriMesh> {
    let boundary = extract_boundary(&nodes, &triangles)?;
    let boundary_edges = tag_boundary(&nodes, &boundary, spec)?;
    let h = max_diameter(&nodes, &triangles);
    let mesh = TriMesh { nodes, triangles, boundary_edges, h, structured };
    mesh.validate(Some(spec))?;
    Ok(mesh)
}

/// Ordered boundary edges as traversed by their owning triangles.
fn extract_boundary(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> Result<Vec<[usize; 2]>> {
    let mut incidence: BTreeMap<(usize, usize), Vec<[usize; 2]>> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a >= nodes.len() || b >= nodes.len() {
                return Err(Error::Mesh(format!("triangle references node {} out of range", a.max(b))));
            }
            incidence.entry((a.min(b), a.max(b))).or_default().push([a, b]);
        }
    }
    let mut boundary = Vec::new();
    for (key, dirs) in &incidence {
        match dirs.len() {
            1 => boundary.push(dirs[0]),
            2 => {
                if dirs[0] == dirs[1] {
                    return Err(Error::Mesh(format!(
                        "edge ({}, {}) traversed twice in the same direction; inconsistent orientation",
                        key.0, key.1
                    )));
                }
            }
            m => {
                return Err(Error::Mesh(format!(
                    "edge ({}, {}) shared by {m} triangles; mesh is not conforming",
                    key.0, key.1
                )))
            }
        }
    }
    Ok(boundary)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Assigns each boundary edge the tag of the nearest polygon edge (by
/// midpoint distance); ties within tolerance resolve to the lower edge index.
fn tag_boundary(nodes: &[[f64; 2]], boundary: &[[usize; 2]], spec: &PolygonSpec) -> Result<Vec<BoundaryEdge>> {
    let tol = 1e-9 * spec.diameter();
    let mut out = Vec::with_capacity(boundary.len());
    for &[a, b] in boundary {
        let mid = [
            0.5 * (nodes[a][0] + nodes[b][0]),
            0.5 * (nodes[a][1] + nodes[b][1]),
        ];
        let mut best: Option<(usize, f64)> = None;
        for e in 0..spec.n_edges() {
            let (p, q) = spec.edge_endpoints(e);
            let d = point_segment_distance(mid, p, q);
            // Strict improvement keeps the lower index on ties.
            if best.map_or(true, |(_, bd)| d < bd - tol) {
                best = Some((e, d));
            }
        }
        let (e, d) = best.expect("polygon has at least 3 edges");
        if d > tol {
            return Err(Error::Mesh(format!(
                "boundary edge ({a}, {b}) midpoint ({}, {}) lies {d:.3e} away from every polygon edge",
                mid[0], mid[1]
            )));
        }
        out.push(BoundaryEdge { nodes: [a, b], tag: spec.edge_tags[e] });
    }
    Ok(out)
}

fn max_diameter(nodes: &[[f64; 2]], triangles: &[[usize; 3]]) -> f64 {
    let mut h: f64 = 0.0;
    for t in triangles {
        for k in 0..3 {
            let a = nodes[t[k]];
            let b = nodes[t[(k + 1) % 3]];
            h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }
    h
}

impl TriMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    pub fn total_area(&self) -> f64 {
        // Neumaier-compensated sum: a naive sum over ~1e6 triangles drifts by
        // more than the 1e-12 relative slack validate() allows for the area.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            let s = sum + a;
            comp += if sum.abs() >= a.abs() { (sum - s) + a } else { (a - s) + sum };
            sum = s;
        }
        sum + comp
    }

    pub fn min_angle_degrees(&self) -> f64 {
        let mut min_angle = f64::INFINITY;
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[t[k]];
                let q = self.nodes[t[(k + 1) % 3]];
                let r = self.nodes[t[(k + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let cross = u[0] * v[1] - u[1] * v[0];
                let dot = u[0] * v[0] + u[1] * v[1];
                min_angle = min_angle.min(cross.atan2(dot).abs());
            }
        }
        min_angle.to_degrees()
    }

    /// Structural invariants: counterclockwise elements, conforming edges,
    /// disc topology (V - E + F = 1), boundary closure. With a polygon the
    /// total area and (for built-ins) the sliver bound are checked too.
    pub fn validate(&self, spec: Option<&PolygonSpec>) -> Result<()> {
        for (i, _) in self.triangles.iter().enumerate() {
            let area = self.triangle_area(i);
            if area <= 0.0 {
                return Err(Error::Mesh(format!("triangle {i} has non-positive area {area:.3e}")));
            }
        }
        let boundary = extract_boundary(&self.nodes, &self.triangles)?;
        let mut seen: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                seen.insert((a.min(b), a.max(b)), ());
            }
        }
        let euler = self.nodes.len() as i64 - seen.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::Mesh(format!("V - E + F = {euler}, expected 1 (simply connected mesh)")));
        }
        let mut tagged: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for be in &self.boundary_edges {
            tagged.insert((be.nodes[0].min(be.nodes[1]), be.nodes[0].max(be.nodes[1])), ());
        }
        if tagged.len() != boundary.len() || self.boundary_edges.len() != boundary.len() {
            return Err(Error::Mesh(format!(
                "{} tagged boundary edges do not tile the {} topological boundary edges",
                self.boundary_edges.len(),
                boundary.len()
            )));
        }
        for &[a, b] in &boundary {
            if !tagged.contains_key(&(a.min(b), a.max(b))) {
                return Err(Error::Mesh(format!("boundary edge ({a}, {b}) is untagged")));
            }
        }
        if let Some(spec) = spec {
            let area = self.total_area();
            let expected = spec.area();
            if ((area - expected) / expected).abs() > 1e-12 {
                return Err(Error::Mesh(format!(
                    "mesh area {area:.17} differs from polygon area {expected:.17}"
                )));
            }
            if self.structured.is_some() && self.min_angle_degrees() < 20.0 {
                return Err(Error::Mesh(format!(
                    "minimum angle {:.2} degrees below the 20 degree sliver bound",
                    self.min_angle_degrees()
                )));
            }
        }
        Ok(())
    }

    /// Splits every triangle into four via edge midpoints. Children of a
    /// boundary edge inherit its tag; nodes are re-sorted lexicographically
    /// by (y, x) so refining a structured mesh reproduces the finer
    /// structured numbering.
    pub fn refine_uniform(&self) -> TriMesh {
        let mut nodes = self.nodes.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let p = nodes[a];
                let q = nodes[b];
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut nodes);
            let bc = mid(b, c, &mut nodes);
            let ca = mid(c, a, &mut nodes);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for be in &self.boundary_edges {
            let [a, b] = be.nodes;
            let m = *midpoint
                .get(&(a.min(b), a.max(b)))
                .expect("boundary edge was split with its triangle");
            boundary_edges.push(BoundaryEdge { nodes: [a, m], tag: be.tag });
            boundary_edges.push(BoundaryEdge { nodes: [m, b], tag: be.tag });
        }

        // Relabel nodes lexicographically by (y, x).
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&i, &j| {
            (nodes[i][1], nodes[i][0])
                .partial_cmp(&(nodes[j][1], nodes[j][0]))
                .expect("finite coordinates")
        });
        let mut relabel = vec![0usize; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let nodes: Vec<[f64; 2]> = order.iter().map(|&old| nodes[old]).collect();
        let triangles: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| [relabel[t[0]], relabel[t[1]], relabel[t[2]]])
            .collect();
        let boundary_edges: Vec<BoundaryEdge> = boundary_edges
            .iter()
            .map(|be| BoundaryEdge { nodes: [relabel[be.nodes[0]], relabel[be.nodes[1]]], tag: be.tag })
            .collect();
        let h = max_diameter(&nodes, &triangles);
        let structured = self.structured.map(|s| StructuredInfo { kind: s.kind, n: 2 * s.n });
        TriMesh { nodes, triangles, boundary_edges, h, structured }
    }

    /// Locates `p`, returning the supporting nodes and barycentric
    /// coordinates. O(1) on structured meshes, linear scan otherwise.
    pub fn locate(&self, p: [f64; 2]) -> Option<([usize; 3], [f64; 3])> {
        const TOL: f64 = 1e-12;
        if let Some(info) = self.structured {
            let n = info.n;
            let half = n / 2;
            let nf = n as f64;
            if !(-TOL..=1.0 + TOL).contains(&p[0]) || !(-TOL..=1.0 + TOL).contains(&p[1]) {
                return None;
            }
            let ix = ((p[0] * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
            let iy = ((p[1] * nf).floor() as isize).clamp(0, n as isize - 1) as usize;
            let (ix, iy) = match info.kind {
                StructuredKind::UnitSquare => (ix, iy),
                StructuredKind::LShape => {
                    if ix >= half && iy >= half {
                        // Points on the notch boundary belong to adjacent cells.
                        if ix == half && (p[0] - 0.5).abs() <= TOL {
                            (half - 1, iy)
                        } else if iy == half && (p[1] - 0.5).abs() <= TOL {
                            (ix, half - 1)
                        } else {
                            return None;
                        }
                    } else {
                        (ix, iy)
                    }
                }
            };
            let at = |ix: usize, iy: usize| match info.kind {
                StructuredKind::UnitSquare => iy * (n + 1) + ix,
                StructuredKind::LShape => lshape_node_index(ix, iy, n),
            };
            let fx = p[0] * nf - ix as f64;
            let fy = p[1] * nf - iy as f64;
            // The cell diagonal runs bottom-left to top-right; below it lies
            // triangle (bl, br, tr), above it (bl, tr, tl).
            let tri = if fx >= fy {
                [at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1)]
            } else {
                [at(ix, iy), at(ix + 1, iy + 1), at(ix, iy + 1)]
            };
            return Some((tri, self.barycentric(tri, p)));
        }
        for t in &self.triangles {
            let bary = self.barycentric(*t, p);
            if bary.iter().all(|&l| l >= -TOL) {
                return Some((*t, bary));
            }
        }
        None
    }

    fn barycentric(&self, tri: [usize; 3], p: [f64; 2]) -> [f64; 3] {
        let (a, b, c) = (self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / det;
        let l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / det;
        [l1, l2, 1.0 - l1 - l2]
    }

    /// Plaintext form: a header line, node coordinates, triangle node
    /// indices, tagged boundary edges. Floats carry 17 significant digits so
    /// write/read round-trips are bit-exact.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "nodes {} triangles {} bedges {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        )
        .unwrap();
        for p in &self.nodes {
            writeln!(out, "{} {}", fmt_f64(p[0]), fmt_f64(p[1])).unwrap();
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        for be in &self.boundary_edges {
            writeln!(out, "{} {} {}", be.nodes[0], be.nodes[1], be.tag.as_str()).unwrap();
        }
        out
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.write_text())?;
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<TriMesh> {
        let lines: Vec<&str> = text.lines().collect();
        let fail = |line: usize, msg: String| Error::MeshParse { line, msg };
        let get_line = |pos: usize, block: &str| -> Result<&str> {
            lines
                .get(pos)
                .copied()
                .ok_or_else(|| fail(lines.len(), format!("file ends inside the {block} block")))
        };

        let header = get_line(0, "header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let parse_count = |idx: usize, name: &str| -> Result<usize> {
            if parts.len() != 6 || parts[idx * 2] != name {
                return Err(fail(1, format!("expected header 'nodes N triangles M bedges K', got '{header}'")));
            }
            parts[idx * 2 + 1]
                .parse()
                .map_err(|_| fail(1, format!("invalid {name} count '{}'", parts[idx * 2 + 1])))
        };
        let n_nodes = parse_count(0, "nodes")?;
        let n_tris = parse_count(1, "triangles")?;
        let n_bedges = parse_count(2, "bedges")?;

        let mut nodes = Vec::with_capacity(n_nodes);
        for k in 0..n_nodes {
            let pos = 1 + k;
            let line = get_line(pos, "node")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(fail(pos + 1, format!("expected 'x y', got '{line}'")));
            }
            let mut coord = [0.0f64; 2];
            for (slot, f) in coord.iter_mut().zip(fields.iter()) {
                *slot = f
                    .parse()
                    .map_err(|_| fail(pos + 1, format!("invalid coordinate '{f}'")))?;
                if !slot.is_finite() {
                    return Err(fail(pos + 1, "coordinates must be finite".into()));
                }
            }
            nodes.push(coord);
        }

        let mut triangles = Vec::with_capacity(n_tris);
        for k in 0..n_tris {
            let pos = 1 + n_nodes + k;
            let line = get_line(pos, "triangle")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(fail(pos + 1, format!("expected 'i j k', got '{line}'")));
            }
            let mut tri = [0usize; 3];
            for (slot, f) in tri.iter_mut().zip(fields.iter()) {
                *slot = f
                    .parse()
                    .map_err(|_| fail(pos + 1, format!("invalid node index '{f}'")))?;
                if *slot >= n_nodes {
                    return Err(fail(pos + 1, format!("node index {slot} out of range 0..{n_nodes}")));
                }
            }
            triangles.push(tri);
        }

        let mut boundary_edges = Vec::with_capacity(n_bedges);
        for k in 0..n_bedges {
            let pos = 1 + n_nodes + n_tris + k;
            let line = get_line(pos, "boundary edge")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(fail(pos + 1, format!("expected 'i j TAG', got '{line}'")));
            }
            let mut pair = [0usize; 2];
            for (slot, f) in pair.iter_mut().zip(fields.iter()) {
                *slot = f
                    .parse()
                    .map_err(|_| fail(pos + 1, format!("invalid node index '{f}'")))?;
                if *slot >= n_nodes {
                    return Err(fail(pos + 1, format!("node index {slot} out of range 0..{n_nodes}")));
                }
            }
            let tag = EdgeTag::parse(fields[2])
                .ok_or_else(|| fail(pos + 1, format!("invalid tag '{}' (expected G or GT)", fields[2])))?;
            boundary_edges.push(BoundaryEdge { nodes: pair, tag });
        }

        let tail_start = 1 + n_nodes + n_tris + n_bedges;
        for (k, line) in lines.iter().enumerate().skip(tail_start) {
            if !line.trim().is_empty() {
                return Err(fail(k + 1, format!("unexpected trailing content '{line}'")));
            }
        }
        let h = max_diameter(&nodes, &triangles);
        let mesh = TriMesh { nodes, triangles, boundary_edges, h, structured: None };
        mesh.validate(None)?;
        Ok(mesh)
    }

    pub fn read_file(path: &std::path::Path) -> Result<TriMesh> {
        let text = std::fs::read_to_string(path)?;
        TriMesh::read_text(&text)
    }

    /// Nodes lying on the closure of edges carrying `tag` (both endpoints of
    /// every tagged edge, so shared corners are included).
    pub fn nodes_on_closed_part(&self, tag: EdgeTag) -> Vec<usize> {
        let mut on: Vec<bool> = vec![false; self.nodes.len()];
        for be in &self.boundary_edges {
            if be.tag == tag {
                on[be.nodes[0]] = true;
                on[be.nodes[1]] = true;
            }
        }
        (0..self.nodes.len()).filter(|&i| on[i]).collect()
    }

    pub fn edges_with_tag(&self, tag: EdgeTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |be| be.tag == tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SquareSide;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square_spec() -> PolygonSpec {
        PolygonSpec::unit_square(&[SquareSide::Bottom, SquareSide::Right]).unwrap()
    }

    fn lshape_spec() -> PolygonSpec {
        PolygonSpec::l_shape(&[0, 1]).unwrap()
    }

    #[test]
    fn square_n2_counts() {
        let mesh = generate_structured(&square_spec(), 2).unwrap();
        assert_eq!(mesh.n_nodes(), 9);
        assert_eq!(mesh.n_triangles(), 8);
        assert_eq!(mesh.boundary_edges.len(), 8);
        assert_relative_eq!(mesh.h, std::f64::consts::SQRT_2 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(mesh.total_area(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn square_n4_counts() {
        let mesh = generate_structured(&square_spec(), 4).unwrap();
        assert_eq!(mesh.n_nodes(), 25);
        assert_eq!(mesh.n_triangles(), 32);
        assert_relative_eq!(mesh.h, std::f64::consts::SQRT_2 / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn lshape_n4_counts_and_area() {
        let mesh = generate_structured(&lshape_spec(), 4).unwrap();
        assert_eq!(mesh.n_nodes(), 21);
        assert_eq!(mesh.n_triangles(), 24);
        assert_eq!(mesh.boundary_edges.len(), 16);
        assert_relative_eq!(mesh.total_area(), 0.75, max_relative = 1e-14);
    }

    #[test]
    fn lshape_odd_n_rejected() {
        assert!(generate_structured(&lshape_spec(), 3).is_err());
    }

    #[test]
    fn unsupported_polygon_points_to_file_ingestion() {
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
        let err = generate_structured(&spec, 4).unwrap_err();
        assert!(err.to_string().contains("read_mesh"), "got: {err}");
    }

    #[test]
    fn rotated_vertex_list_still_matches() {
        // Same square, listed starting from (1,0); tags rotate with it.
        let spec = PolygonSpec::new(
            vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]],
            vec![EdgeTag::Gamma, EdgeTag::GammaTilde, EdgeTag::GammaTilde, EdgeTag::Gamma],
        )
        .unwrap();
        let mesh = generate_structured(&spec, 2).unwrap();
        // Bottom edge midpoints are on G, top on GT.
        for be in &mesh.boundary_edges {
            let mid_y = 0.5 * (mesh.nodes[be.nodes[0]][1] + mesh.nodes[be.nodes[1]][1]);
            if mid_y.abs() < 1e-12 {
                assert_eq!(be.tag, EdgeTag::Gamma);
            }
            if (mid_y - 1.0).abs() < 1e-12 {
                assert_eq!(be.tag, EdgeTag::GammaTilde);
            }
        }
    }

    #[test]
    fn square_tags_match_sides() {
        let mesh = generate_structured(&square_spec(), 4).unwrap();
        let mut count_g = 0;
        let mut count_gt = 0;
        for be in &mesh.boundary_edges {
            let a = mesh.nodes[be.nodes[0]];
            let b = mesh.nodes[be.nodes[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let expect = if mid[1].abs() < 1e-12 || (mid[0] - 1.0).abs() < 1e-12 {
                EdgeTag::Gamma
            } else {
                EdgeTag::GammaTilde
            };
            assert_eq!(be.tag, expect, "edge at {mid:?}");
            match be.tag {
                EdgeTag::Gamma => count_g += 1,
                EdgeTag::GammaTilde => count_gt += 1,
            }
        }
        assert_eq!(count_g, 8);
        assert_eq!(count_gt, 8);
    }

    #[test]
    fn boundary_is_counterclockwise() {
        let mesh = generate_structured(&square_spec(), 2).unwrap();
        // Walk each oriented boundary edge: the outward normal (t_y, -t_x)
        // must point away from the domain center.
        for be in &mesh.boundary_edges {
            let a = mesh.nodes[be.nodes[0]];
            let b = mesh.nodes[be.nodes[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let t = [b[0] - a[0], b[1] - a[1]];
            let nu = [t[1], -t[0]];
            let from_center = [mid[0] - 0.5, mid[1] - 0.5];
            assert!(nu[0] * from_center[0] + nu[1] * from_center[1] > 0.0);
        }
    }

    #[test]
    fn refine_halves_h_and_preserves_counts() {
        let mesh = generate_structured(&square_spec(), 2).unwrap();
        let fine = mesh.refine_uniform();
        assert_relative_eq!(fine.h, mesh.h / 2.0, max_relative = 1e-15);
        assert_eq!(fine.n_triangles(), 4 * mesh.n_triangles());
        // New node count = old nodes + old edges.
        let edges = mesh.n_nodes() + mesh.n_triangles() - 1; // V - E + F = 1
        assert_eq!(fine.n_nodes(), mesh.n_nodes() + edges);
        assert_eq!(fine.boundary_edges.len(), 2 * mesh.boundary_edges.len());
        fine.validate(Some(&square_spec())).unwrap();
    }

    #[test]
    fn refine_matches_structured_generator() {
        // Power-of-two grids have exact midpoints, so refinement reproduces
        // the finer generator bit for bit.
        let coarse = generate_structured(&square_spec(), 2).unwrap();
        let refined = coarse.refine_uniform();
        let direct = generate_structured(&square_spec(), 4).unwrap();
        assert_eq!(refined.nodes, direct.nodes);
        // Triangles agree as oriented cycles; canonicalize the rotation.
        let canon = |t: &[usize; 3]| -> [usize; 3] {
            let k = (0..3).min_by_key(|&k| t[k]).unwrap();
            [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
        };
        let mut a: Vec<_> = refined.triangles.iter().map(canon).collect();
        let mut b: Vec<_> = direct.triangles.iter().map(canon).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let key = |be: &BoundaryEdge| (be.nodes[0].min(be.nodes[1]), be.nodes[0].max(be.nodes[1]), be.tag);
        let mut ta: Vec<_> = refined.boundary_edges.iter().map(key).collect();
        let mut tb: Vec<_> = direct.boundary_edges.iter().map(key).collect();
        ta.sort();
        tb.sort();
        assert_eq!(ta, tb);
    }

    #[test]
    fn refine_lshape_preserves_tags_and_area() {
        let mesh = generate_structured(&lshape_spec(), 2).unwrap();
        let fine = mesh.refine_uniform();
        assert_relative_eq!(fine.total_area(), 0.75, max_relative = 1e-14);
        fine.validate(Some(&lshape_spec())).unwrap();
        let g_len: f64 = fine
            .edges_with_tag(EdgeTag::Gamma)
            .map(|be| {
                let a = fine.nodes[be.nodes[0]];
                let b = fine.nodes[be.nodes[1]];
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .sum();
        // G covers the bottom (length 1) and the lower right side (length 1/2).
        assert_relative_eq!(g_len, 1.5, max_relative = 1e-14);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mesh = generate_structured(&square_spec(), 3).unwrap();
        let text = mesh.write_text();
        let back = TriMesh::read_text(&text).unwrap();
        assert_eq!(back.nodes.len(), mesh.nodes.len());
        for (a, b) in back.nodes.iter().zip(mesh.nodes.iter()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.boundary_edges, mesh.boundary_edges);
        assert_eq!(back.write_text(), text);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let mesh = generate_structured(&square_spec(), 2).unwrap();
        let mut text = mesh.write_text();
        // Corrupt the first node line (line 2).
        text = text.replacen("0.0000000000000000e0 0.0000000000000000e0", "0.0 zzz", 1);
        match TriMesh::read_text(&text) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_header = "nodes 3 triangles\n";
        match TriMesh::read_text(bad_header) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }

        let text = mesh.write_text().replacen("0 1 4", "0 1 99", 1);
        match TriMesh::read_text(&text) {
            Err(Error::MeshParse { msg, .. }) => assert!(msg.contains("out of range")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nonconforming_mesh_rejected() {
        // Two triangles sharing an edge traversed in the same direction
        // (second triangle flipped): orientation error.
        let text = "nodes 4 triangles 2 bedges 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 1 3\n0 1 G\n1 2 G\n2 3 GT\n3 0 GT\n";
        assert!(TriMesh::read_text(text).is_err());
    }

    #[test]
    fn min_angle_of_structured_meshes() {
        let mesh = generate_structured(&square_spec(), 4).unwrap();
        assert!((mesh.min_angle_degrees() - 45.0).abs() < 1e-10);
    }

    #[test]
    fn locate_on_square_matches_scan() {
        let mesh = generate_structured(&square_spec(), 4).unwrap();
        let pts = [[0.13, 0.77], [0.5, 0.5], [0.999, 0.001], [0.0, 0.0], [1.0, 1.0], [0.25, 0.25]];
        for p in pts {
            let (tri, bary) = mesh.locate(p).unwrap();
            let mut x = [0.0, 0.0];
            for k in 0..3 {
                x[0] += bary[k] * mesh.nodes[tri[k]][0];
                x[1] += bary[k] * mesh.nodes[tri[k]][1];
            }
            assert_relative_eq!(x[0], p[0], epsilon = 1e-13);
            assert_relative_eq!(x[1], p[1], epsilon = 1e-13);
            assert!(bary.iter().all(|&l| l >= -1e-12));
        }
        assert!(mesh.locate([1.2, 0.5]).is_none());
    }

    #[test]
    fn locate_on_lshape_rejects_notch() {
        let mesh = generate_structured(&lshape_spec(), 4).unwrap();
        assert!(mesh.locate([0.75, 0.75]).is_none());
        assert!(mesh.locate([0.25, 0.75]).is_some());
        assert!(mesh.locate([0.75, 0.25]).is_some());
        // Notch boundary still belongs to the mesh.
        let (tri, bary) = mesh.locate([0.5, 0.75]).unwrap();
        let x: f64 = (0..3).map(|k| bary[k] * mesh.nodes[tri[k]][0]).sum();
        assert_relative_eq!(x, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn locate_after_refinement_works() {
        let mesh = generate_structured(&lshape_spec(), 2).unwrap().refine_uniform();
        assert_eq!(mesh.structured.unwrap().n, 4);
        let (_, bary) = mesh.locate([0.3, 0.9]).unwrap();
        assert!(bary.iter().all(|&l| l >= -1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn round_trip_any_structured(n in 1usize..6, gamma_mask in 1u8..15) {
            let mut gamma = Vec::new();
            let sides = [SquareSide::Bottom, SquareSide::Right, SquareSide::Top, SquareSide::Left];
            for (k, side) in sides.iter().enumerate() {
                if gamma_mask & (1 << k) != 0 {
                    gamma.push(*side);
                }
            }
            let spec = PolygonSpec::unit_square(&gamma).unwrap();
            let mesh = generate_structured(&spec, n).unwrap();
            let text = mesh.write_text();
            let back = TriMesh::read_text(&text).unwrap();
            prop_assert_eq!(back.write_text(), text);
        }

        #[test]
        fn refinement_conserves_area_and_tags(n in 1usize..4) {
            let spec = square_spec();
            let mesh = generate_structured(&spec, n).unwrap();
            let fine = mesh.refine_uniform();
            prop_assert!((fine.total_area() - 1.0).abs() < 1e-13);
            let count = |m: &TriMesh, tag| m.boundary_edges.iter().filter(|b| b.tag == tag).count();
            prop_assert_eq!(count(&fine, EdgeTag::Gamma), 2 * count(&mesh, EdgeTag::Gamma));
            prop_assert_eq!(count(&fine, EdgeTag::GammaTilde), 2 * count(&mesh, EdgeTag::GammaTilde));
        }
    }
}
