use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Relative area threshold below which a triangle counts as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-12;

/// A validated triangle mesh, possibly open.
///
/// Invariants checked on construction: indices in range, no repeated vertex inside a triangle,
/// no triangle with area below `1e-12 · diag²` (diag = bounding-box diagonal), and no edge shared
/// by more than two triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        for (i, p) in self.vertices.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMesh(format!("non-finite coordinate in vertex {i}")));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "vertex index {bad} out of range in triangle {t} ({nv} vertices)"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("repeated vertex in triangle {t}")));
            }
        }
        let diag = self.bounding_box_diagonal();
        let min_area = DEGENERATE_REL_AREA * diag * diag;
        for t in 0..self.triangles.len() {
            let area = self.triangle_area(t);
            if !(area > min_area) {
                return Err(Error::InvalidMesh(format!(
                    "degenerate triangle {t} (area {area:e})"
                )));
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for (a, b) in tri_edges(tri) {
                let c = seen.entry(edge_key(a, b)).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "non-manifold edge ({}, {}) shared by more than two triangles (triangle {t})",
                        a.min(b),
                        a.max(b)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * norm(cross(sub(q, p), sub(r, p)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Number of triangles incident to every undirected edge, keyed by `(min, max)`.
    pub fn edge_incidence(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(self.triangles.len() * 3 / 2 + 1);
        for tri in &self.triangles {
            for (a, b) in tri_edges(tri) {
                *map.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        map
    }

    /// All undirected edges as `[min, max]`, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .edge_incidence()
            .into_keys()
            .map(|(a, b)| [a, b])
            .collect();
        e.sort_unstable();
        e
    }

    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .edge_incidence()
            .into_iter()
            .filter_map(|((a, b), c)| (c == 1).then_some([a, b]))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn is_closed(&self) -> bool {
        self.edge_incidence().values().all(|&c| c == 2)
    }

    /// Membership mask of vertices lying on a boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for [a, b] in self.boundary_edges() {
            mask[a] = true;
            mask[b] = true;
        }
        mask
    }

    /// Number of connected components of the boundary-edge graph.
    pub fn boundary_loop_count(&self) -> usize {
        let edges = self.boundary_edges();
        let mut uf = UnionFind::new(self.vertices.len());
        let mut on_boundary = vec![false; self.vertices.len()];
        for &[a, b] in &edges {
            uf.union(a, b);
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
        let mut roots: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| on_boundary[v])
            .map(|v| uf.find(v))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_incidence().len() as i64
            + self.triangles.len() as i64
    }

    /// Number of connected components, counting triangles joined through shared edges.
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.triangles.len());
        let mut first: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for (a, b) in tri_edges(tri) {
                match first.get(&edge_key(a, b)) {
                    Some(&s) => uf.union(s, t),
                    None => {
                        first.insert(edge_key(a, b), t);
                    }
                }
            }
        }
        let mut roots: Vec<usize> = (0..self.triangles.len()).map(|t| uf.find(t)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Applies `f` to every vertex and re-validates.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Result<Self> {
        Self::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.triangles.clone(),
        )
    }

    /// Drops the triangles flagged in `remove`, then drops unreferenced vertices and reindexes.
    pub fn without_triangles(&self, remove: &[bool]) -> Result<Self> {
        assert_eq!(remove.len(), self.triangles.len());
        let kept: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .zip(remove)
            .filter_map(|(t, &r)| (!r).then_some(*t))
            .collect();
        compact(&self.vertices, kept)
    }
}

/// Builds a mesh from a vertex pool and triangles, dropping unreferenced vertices.
pub(crate) fn compact(vertices: &[Point3], triangles: Vec<[usize; 3]>) -> Result<TriangleMesh> {
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut new_vertices = Vec::new();
    let mut new_triangles = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut nt = [0; 3];
        for (k, &v) in tri.iter().enumerate() {
            if remap[v] == usize::MAX {
                remap[v] = new_vertices.len();
                new_vertices.push(vertices[v]);
            }
            nt[k] = remap[v];
        }
        new_triangles.push(nt);
    }
    TriangleMesh::new(new_vertices, new_triangles)
}

/// Undirected edges incident to exactly one triangle, sorted; empty iff the mesh is closed.
pub fn mesh_boundary_edges(mesh: &TriangleMesh) -> Vec<[usize; 2]> {
    mesh.boundary_edges()
}

pub fn load_triangle_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path)?;
    parse_off(&text)
}

/// Parses ASCII OFF. The counts may sit on the `OFF` line or on the next line; `#` starts a
/// comment. Only triangular faces are accepted.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("OFF") {
        return Err(Error::parse(ln, "missing OFF header"));
    }
    let rest: Vec<&str> = head.collect();
    let (ln, counts) = if rest.is_empty() {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(ln, "missing count line"))?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, rest)
    };
    if counts.len() < 2 {
        return Err(Error::parse(ln, "expected \"V F E\" counts"));
    }
    let nv: usize = parse_num(counts[0], ln)?;
    let nf: usize = parse_num(counts[1], ln)?;

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(ln, format!("expected {nv} vertices, found {i}")))?;
        let xs: Vec<&str> = l.split_whitespace().collect();
        if xs.len() < 3 {
            return Err(Error::parse(ln, "vertex line needs three coordinates"));
        }
        vertices.push([
            parse_num(xs[0], ln)?,
            parse_num(xs[1], ln)?,
            parse_num(xs[2], ln)?,
        ]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for i in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(ln, format!("expected {nf} faces, found {i}")))?;
        let xs: Vec<&str> = l.split_whitespace().collect();
        let arity: usize = parse_num(xs[0], ln)?;
        if arity != 3 {
            return Err(Error::parse(ln, format!("face {i} is not a triangle")));
        }
        if xs.len() < 4 {
            return Err(Error::parse(ln, "face line needs three indices"));
        }
        triangles.push([
            parse_num(xs[1], ln)?,
            parse_num(xs[2], ln)?,
            parse_num(xs[3], ln)?,
        ]);
    }
    TriangleMesh::new(vertices, triangles)
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {s:?}")))
}

/// Writes ASCII OFF with full-precision coordinates.
pub fn write_off<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_triangles())?;
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub(crate) fn tri_edges(t: &[usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    #[test]
    fn tetrahedron_is_closed() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_triangles(), 4);
        assert!(m.is_closed());
        assert!(mesh_boundary_edges(&m).is_empty());
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn single_triangle_has_three_boundary_edges() {
        let m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(mesh_boundary_edges(&m), vec![[0, 1], [0, 2], [1, 2]]);
        assert_eq!(m.boundary_loop_count(), 1);
    }

    #[test]
    fn repeated_vertex_is_rejected() {
        let err = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 0 1\n").unwrap_err();
        assert!(err.to_string().contains("repeated vertex in triangle 0"), "{err}");
    }

    #[test]
    fn header_with_inline_counts_and_comments() {
        let m = parse_off("# comment\nOFF 3 1 0\n0 0 0 # a\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.num_triangles(), 1);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let err = parse_off("OFF\n4 4 0\n0 0 0\n1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let err = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("degenerate triangle 0"));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let err = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]]).unwrap_err();
        assert!(err.to_string().contains("non-manifold edge (0, 1)"), "{err}");
    }

    #[test]
    fn off_roundtrip() {
        let m = parse_off(TETRA).unwrap();
        let mut buf = Vec::new();
        write_off(&m, &mut buf).unwrap();
        let back = parse_off(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(m, back);
    }
}
