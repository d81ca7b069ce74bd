//! Triangle elements for surface meshes.
//!
//! Each triangle `(P1, P2, P3)` is parametrised as `p(u, v) = P1 + u·(P3 − P1) + v·(P2 − P1)`
//! over the reference triangle `u, v ≥ 0, u + v ≤ 1`, so `P1 = p(0,0)`, `P2 = p(0,1)` and
//! `P3 = p(1,0)`. The metric of this map is constant per triangle, which makes every local
//! matrix a metric-weighted combination of reference integrals computed once per basis order.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::{cross, dot, sub, BoundarySet, Point3, TriangleMesh};

use super::poly::{triangle_product_integral, NodalBasis};
use super::{empty_pair, BasisOrder, BoundaryCondition, FemSystem};

/// Reference triangle vertices in local order: P1, P2, P3.
const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
/// Local edges as pairs of local vertices.
const REF_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// What a local node sits on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalNode {
    Vertex(usize),
    /// Point `P_a + t·(P_b − P_a)` on the local edge `(a, b)`.
    Edge { a: usize, b: usize, t: f64 },
    Centroid,
}

#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub order: BasisOrder,
    pub basis: NodalBasis<2>,
    pub layout: Vec<LocalNode>,
}

impl ElementBasis {
    pub fn nodes_per_element(&self) -> usize {
        self.layout.len()
    }

    /// Reference `(u, v)` coordinates of the local nodes.
    pub fn reference_nodes(&self) -> &[[f64; 2]] {
        self.basis.nodes()
    }

    pub fn value(&self, l: usize, u: f64, v: f64) -> f64 {
        self.basis.value(l, &[u, v])
    }
}

/// Reference-triangle integrals shared by every element of one order.
#[derive(Debug, Clone)]
pub struct ElementTemplates {
    pub npe: usize,
    /// `gradient[i][j][l·npe + m] = ∫ ∂_i h_l ∂_j h_m du dv` with `i, j ∈ {u, v}`.
    pub gradient: [[Vec<f64>; 2]; 2],
    /// `mass[l·npe + m] = ∫ h_l h_m du dv`.
    pub mass: Vec<f64>,
}

impl ElementTemplates {
    pub fn g(&self, i: usize, j: usize, l: usize, m: usize) -> f64 {
        self.gradient[i][j][l * self.npe + m]
    }

    pub fn m(&self, l: usize, m: usize) -> f64 {
        self.mass[l * self.npe + m]
    }
}

fn layout(order: BasisOrder) -> Vec<LocalNode> {
    let mut nodes: Vec<LocalNode> = (0..3).map(LocalNode::Vertex).collect();
    let fractions: &[f64] = match order {
        BasisOrder::Linear => &[],
        BasisOrder::Quadratic => &[0.5],
        BasisOrder::Cubic => &[1.0 / 3.0, 2.0 / 3.0],
    };
    for &(a, b) in &REF_EDGES {
        for &t in fractions {
            nodes.push(LocalNode::Edge { a, b, t });
        }
    }
    if order == BasisOrder::Cubic {
        nodes.push(LocalNode::Centroid);
    }
    nodes
}

fn reference_position(node: LocalNode) -> [f64; 2] {
    match node {
        LocalNode::Vertex(a) => REF_VERTICES[a],
        LocalNode::Edge { a, b, t } => {
            let (pa, pb) = (REF_VERTICES[a], REF_VERTICES[b]);
            [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
        }
        LocalNode::Centroid => [1.0 / 3.0, 1.0 / 3.0],
    }
}

/// Monomials `u^a v^b` with `a + b ≤ degree`, by total degree.
fn complete_monomials(degree: u8) -> Vec<[u8; 2]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for b in 0..=total {
            out.push([total - b, b]);
        }
    }
    out
}

/// Nodal basis on the reference triangle: vertices, then edge nodes edge by edge, then the
/// centroid (cubic only).
pub fn reference_basis(order: BasisOrder) -> Result<ElementBasis> {
    let layout = layout(order);
    let nodes: Vec<[f64; 2]> = layout.iter().map(|&n| reference_position(n)).collect();
    let basis = NodalBasis::fit(complete_monomials(order.degree()), nodes)?;
    Ok(ElementBasis {
        order,
        basis,
        layout,
    })
}

/// Exact reference integrals via `∫∫ u^a v^b = a!·b!/(a+b+2)!`.
pub fn reference_integrals(basis: &ElementBasis) -> ElementTemplates {
    let npe = basis.nodes_per_element();
    let terms: Vec<_> = (0..npe).map(|l| basis.basis.terms(l)).collect();
    let dterms: Vec<[Vec<_>; 2]> = (0..npe)
        .map(|l| {
            [
                basis.basis.derivative_terms(l, 0),
                basis.basis.derivative_terms(l, 1),
            ]
        })
        .collect();
    let mut mass = vec![0.0; npe * npe];
    let mut gradient: [[Vec<f64>; 2]; 2] = Default::default();
    for row in gradient.iter_mut() {
        for g in row.iter_mut() {
            *g = vec![0.0; npe * npe];
        }
    }
    for l in 0..npe {
        for m in 0..npe {
            mass[l * npe + m] = triangle_product_integral(&terms[l], &terms[m]);
            for i in 0..2 {
                for j in 0..2 {
                    gradient[i][j][l * npe + m] =
                        triangle_product_integral(&dterms[l][i], &dterms[m][j]);
                }
            }
        }
    }
    ElementTemplates {
        npe,
        gradient,
        mass,
    }
}

fn cached(order: BasisOrder) -> &'static (ElementBasis, ElementTemplates) {
    static LINEAR: OnceLock<(ElementBasis, ElementTemplates)> = OnceLock::new();
    static QUADRATIC: OnceLock<(ElementBasis, ElementTemplates)> = OnceLock::new();
    static CUBIC: OnceLock<(ElementBasis, ElementTemplates)> = OnceLock::new();
    let cell = match order {
        BasisOrder::Linear => &LINEAR,
        BasisOrder::Quadratic => &QUADRATIC,
        BasisOrder::Cubic => &CUBIC,
    };
    cell.get_or_init(|| {
        let b = reference_basis(order).expect("reference triangle layouts are unisolvent");
        let t = reference_integrals(&b);
        (b, t)
    })
}

/// First fundamental form of the affine map of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub det: f64,
    /// `(g^11, g^12, g^22)`
    pub inverse: [f64; 3],
}

impl MetricTensor2 {
    pub fn area_element(&self) -> f64 {
        self.det.sqrt()
    }
}

/// Metric of `p(u,v) = P1 + u·(P3 − P1) + v·(P2 − P1)`:
/// `g11 = ‖P3−P1‖²`, `g22 = ‖P2−P1‖²`, `g12 = (P3−P1)·(P2−P1)`.
pub fn triangle_metric(p1: Point3, p2: Point3, p3: Point3) -> Result<MetricTensor2> {
    let eu = sub(p3, p1);
    let ev = sub(p2, p1);
    let g11 = dot(eu, eu);
    let g22 = dot(ev, ev);
    let g12 = dot(eu, ev);
    // |eu × ev|² equals g11·g22 − g12² without the cancellation
    let c = cross(eu, ev);
    let det = dot(c, c);
    if !(det > 1e-24 * g11 * g22) || !det.is_finite() {
        return Err(Error::DegenerateTriangle { index: 0, det });
    }
    Ok(MetricTensor2 {
        g11,
        g12,
        g22,
        det,
        inverse: [g22 / det, -g12 / det, g11 / det],
    })
}

/// Global numbering of the nodes of every triangle.
///
/// Vertices keep their mesh index. Quadratic edge midpoints follow as `V + e`; cubic trisection
/// nodes as `V + 2e + s`, where `s = 0` for the point one third of the way from the edge's
/// smaller vertex index and `s = 1` for two thirds. Cubic centroids follow as `V + 2E + t`.
#[derive(Debug, Clone)]
pub struct SurfaceNodeMap {
    order: BasisOrder,
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    element_nodes: Vec<usize>,
    num_nodes: usize,
    npe: usize,
}

impl SurfaceNodeMap {
    pub fn order(&self) -> BasisOrder {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nodes_per_element(&self) -> usize {
        self.npe
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global node ids, `nodes_per_element()` per triangle.
    pub fn element_nodes(&self) -> &[usize] {
        &self.element_nodes
    }

    pub fn element(&self, t: usize) -> &[usize] {
        &self.element_nodes[t * self.npe..(t + 1) * self.npe]
    }

    fn edge_node(&self, e: usize, slot: usize) -> usize {
        match self.order {
            BasisOrder::Linear => unreachable!(),
            BasisOrder::Quadratic => self.num_vertices + e,
            BasisOrder::Cubic => self.num_vertices + 2 * e + slot,
        }
    }

    /// Physical position of every global node.
    pub fn node_positions(&self, mesh: &TriangleMesh) -> Vec<Point3> {
        let layout = &cached(self.order).0.layout;
        let mut pos = vec![[f64::NAN; 3]; self.num_nodes];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = tri.map(|v| mesh.vertices()[v]);
            for (l, node) in layout.iter().enumerate() {
                let x = match *node {
                    LocalNode::Vertex(a) => p[a],
                    LocalNode::Edge { a, b, t } => lerp(p[a], p[b], t),
                    LocalNode::Centroid => {
                        let mut c = [0.0; 3];
                        for q in &p {
                            for k in 0..3 {
                                c[k] += q[k] / 3.0;
                            }
                        }
                        c
                    }
                };
                pos[self.element(t)[l]] = x;
            }
        }
        pos
    }

    /// Nodes lying on boundary edges (their endpoints and their edge nodes).
    pub fn boundary_nodes(&self, mesh: &TriangleMesh) -> BoundarySet {
        let boundary = mesh.boundary_edges();
        let mut nodes = Vec::new();
        for [a, b] in boundary {
            nodes.push(a);
            nodes.push(b);
            if self.order != BasisOrder::Linear {
                let e = self
                    .edges
                    .binary_search(&[a, b])
                    .expect("boundary edge is a mesh edge");
                nodes.push(self.edge_node(e, 0));
                if self.order == BasisOrder::Cubic {
                    nodes.push(self.edge_node(e, 1));
                }
            }
        }
        BoundarySet::new(nodes)
    }
}

pub fn global_node_map(mesh: &TriangleMesh, order: BasisOrder) -> SurfaceNodeMap {
    let layout = &cached(order).0.layout;
    let npe = layout.len();
    let nv = mesh.num_vertices();
    let edges = mesh.edges();
    let edge_index: HashMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(i, e)| ((e[0], e[1]), i))
        .collect();
    let ne = edges.len();
    let num_nodes = match order {
        BasisOrder::Linear => nv,
        BasisOrder::Quadratic => nv + ne,
        BasisOrder::Cubic => nv + 2 * ne + mesh.num_triangles(),
    };
    let mut map = SurfaceNodeMap {
        order,
        num_vertices: nv,
        edges,
        element_nodes: Vec::with_capacity(mesh.num_triangles() * npe),
        num_nodes,
        npe,
    };
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for node in layout {
            let id = match *node {
                LocalNode::Vertex(a) => tri[a],
                LocalNode::Edge { a, b, t: frac } => {
                    let (ga, gb) = (tri[a], tri[b]);
                    let e = edge_index[&(ga.min(gb), ga.max(gb))];
                    let from_min = if ga < gb { frac } else { 1.0 - frac };
                    map.edge_node(e, usize::from(from_min > 0.5))
                }
                LocalNode::Centroid => nv + 2 * ne + t,
            };
            map.element_nodes.push(id);
        }
    }
    map
}

/// Local stiffness and mass matrices (row-major) of one triangle.
pub(crate) fn local_matrices(
    templates: &ElementTemplates,
    metric: &MetricTensor2,
) -> (Vec<f64>, Vec<f64>) {
    let n = templates.npe;
    let da = metric.area_element();
    let [i11, i12, i22] = metric.inverse;
    let mut k = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    for l in 0..n {
        for m in l..n {
            let kv = da
                * (i11 * templates.g(0, 0, l, m)
                    + i12 * (templates.g(0, 1, l, m) + templates.g(1, 0, l, m))
                    + i22 * templates.g(1, 1, l, m));
            let bv = da * templates.m(l, m);
            k[l * n + m] = kv;
            k[m * n + l] = kv;
            b[l * n + m] = bv;
            b[m * n + l] = bv;
        }
    }
    (k, b)
}

/// Assembles `K` and `B` over all triangles, then applies the boundary condition.
pub fn assemble_surface(
    mesh: &TriangleMesh,
    order: BasisOrder,
    bc: BoundaryCondition,
) -> Result<FemSystem> {
    let nodes = global_node_map(mesh, order);
    let boundary = nodes.boundary_nodes(mesh);
    if bc == BoundaryCondition::Closed {
        let nb = mesh.boundary_edges().len();
        if nb > 0 {
            return Err(Error::BoundaryMismatch(format!(
                "mesh has {nb} boundary edges"
            )));
        }
    }
    let (_, templates) = cached(order);
    let npe = nodes.nodes_per_element();
    let (mut k, mut b) = empty_pair(nodes.num_nodes(), nodes.element_nodes(), npe);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| mesh.vertices()[v]);
        let metric = triangle_metric(p[0], p[1], p[2]).map_err(|e| match e {
            Error::DegenerateTriangle { det, .. } => Error::DegenerateTriangle { index: t, det },
            other => other,
        })?;
        let (kl, bl) = local_matrices(templates, &metric);
        let elem = nodes.element(t);
        k.add_local(elem, &kl);
        b.add_local(elem, &bl);
    }
    let positions = nodes.node_positions(mesh);
    FemSystem::finish(k, b, boundary, bc, positions)
}

fn lerp(a: Point3, b: Point3, t: f64) -> Point3 {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_basis_matches_closed_form() {
        let b = reference_basis(BasisOrder::Linear).unwrap();
        for &(u, v) in &[(0.1, 0.2), (0.5, 0.25), (0.0, 0.9)] {
            assert!(close(b.value(0, u, v), 1.0 - u - v, 1e-14));
            assert!(close(b.value(1, u, v), v, 1e-14));
            assert!(close(b.value(2, u, v), u, 1e-14));
        }
    }

    #[test]
    fn nodal_property_all_orders() {
        for order in [BasisOrder::Linear, BasisOrder::Quadratic, BasisOrder::Cubic] {
            let b = reference_basis(order).unwrap();
            let n = b.nodes_per_element();
            assert_eq!(n, [3, 6, 10][order.degree() as usize - 1]);
            for l in 0..n {
                for (m, x) in b.reference_nodes().iter().enumerate() {
                    let want = if l == m { 1.0 } else { 0.0 };
                    assert!(close(b.value(l, x[0], x[1]), want, 1e-12));
                }
            }
        }
    }

    #[test]
    fn cubic_partition_of_unity_random_points() {
        let b = reference_basis(BasisOrder::Cubic).unwrap();
        assert_eq!(b.basis.coefficients(0).len(), 10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            let s: f64 = (0..10).map(|l| b.value(l, u, v)).sum();
            assert!(close(s, 1.0, 1e-12));
        }
    }

    #[test]
    fn linear_templates_exact() {
        let t = reference_integrals(&reference_basis(BasisOrder::Linear).unwrap());
        let mass = [
            [1.0 / 12.0, 1.0 / 24.0, 1.0 / 24.0],
            [1.0 / 24.0, 1.0 / 12.0, 1.0 / 24.0],
            [1.0 / 24.0, 1.0 / 24.0, 1.0 / 12.0],
        ];
        let stiff = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for l in 0..3 {
            for m in 0..3 {
                assert!(close(t.m(l, m), mass[l][m], 1e-12));
                assert!(close(t.g(0, 0, l, m) + t.g(1, 1, l, m), stiff[l][m], 1e-12));
            }
        }
    }

    #[test]
    fn mass_templates_sum_to_reference_area() {
        for order in [BasisOrder::Linear, BasisOrder::Quadratic, BasisOrder::Cubic] {
            let t = reference_integrals(&reference_basis(order).unwrap());
            assert!(close(t.mass.iter().sum::<f64>(), 0.5, 1e-13));
            // transpose relation between mixed gradient templates
            for l in 0..t.npe {
                for m in 0..t.npe {
                    assert!(close(t.g(0, 1, l, m), t.g(1, 0, m, l), 1e-13));
                }
            }
        }
    }

    #[test]
    fn unit_right_triangle_metric_is_identity() {
        let g = triangle_metric([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!((g.g11, g.g12, g.g22, g.det), (1.0, 0.0, 1.0, 1.0));
        let g = triangle_metric([0.0, 0.0, 0.0], [0.0, 2.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!((g.g11, g.g12, g.g22, g.det), (1.0, 0.0, 4.0, 4.0));
    }

    #[test]
    fn metric_inverse_and_area() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p: Vec<Point3> = (0..3)
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            let g = triangle_metric(p[0], p[1], p[2]).unwrap();
            let [a, b, c] = g.inverse;
            // g · g⁻¹ = I
            assert!(close(g.g11 * a + g.g12 * b, 1.0, 1e-10 * (1.0 + g.g11 * a.abs())));
            assert!((g.g11 * b + g.g12 * c).abs() < 1e-10 * (1.0 + (g.g11 * b).abs()));
            assert!(close(g.g12 * b + g.g22 * c, 1.0, 1e-10 * (1.0 + g.g22 * c.abs())));
            let area = 0.5 * {
                let c = cross(sub(p[1], p[0]), sub(p[2], p[0]));
                dot(c, c).sqrt()
            };
            assert!(close(g.area_element(), 2.0 * area, 1e-12 * area.max(1e-3)));
        }
    }

    #[test]
    fn degenerate_metric_is_error() {
        assert!(triangle_metric([0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]).is_err());
    }

    fn two_triangles() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.3],
            ],
            vec![[0, 1, 2], [3, 2, 1]],
        )
        .unwrap()
    }

    #[test]
    fn node_counts() {
        let m = two_triangles();
        // V = 4, E = 5, F = 2
        assert_eq!(global_node_map(&m, BasisOrder::Linear).num_nodes(), 4);
        assert_eq!(global_node_map(&m, BasisOrder::Quadratic).num_nodes(), 9);
        assert_eq!(global_node_map(&m, BasisOrder::Cubic).num_nodes(), 16);
    }

    #[test]
    fn shared_edge_nodes_coincide() {
        let m = two_triangles();
        for order in [BasisOrder::Quadratic, BasisOrder::Cubic] {
            let map = global_node_map(&m, order);
            // every node id must resolve to one physical point from both triangles
            let layout = &cached(order).0.layout;
            let mut seen: HashMap<usize, Point3> = HashMap::new();
            for (t, tri) in m.triangles().iter().enumerate() {
                let p = tri.map(|v| m.vertices()[v]);
                for (l, node) in layout.iter().enumerate() {
                    if let LocalNode::Edge { a, b, t: f } = *node {
                        let x = lerp(p[a], p[b], f);
                        let id = map.element(t)[l];
                        if let Some(prev) = seen.insert(id, x) {
                            for k in 0..3 {
                                assert!(close(prev[k], x[k], 1e-15));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_triangle_neumann_equals_templates() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let sys = assemble_surface(&m, BasisOrder::Linear, BoundaryCondition::Neumann).unwrap();
        let t = &cached(BasisOrder::Linear).1;
        for l in 0..3 {
            for j in 0..3 {
                assert!(close(sys.mass.get(l, j), t.m(l, j), 1e-15));
                assert!(close(
                    sys.stiffness.get(l, j),
                    t.g(0, 0, l, j) + t.g(1, 1, l, j),
                    1e-15
                ));
            }
        }
    }

    #[test]
    fn shared_edge_entries_are_summed() {
        let m = two_triangles();
        let sys = assemble_surface(&m, BasisOrder::Linear, BoundaryCondition::Neumann).unwrap();
        let tmpl = &cached(BasisOrder::Linear).1;
        // brute force: accumulate per-triangle local matrices by hand
        let mut k = [[0.0; 4]; 4];
        let mut b = [[0.0; 4]; 4];
        for tri in m.triangles() {
            let p = tri.map(|v| m.vertices()[v]);
            let g = triangle_metric(p[0], p[1], p[2]).unwrap();
            let (kl, bl) = local_matrices(tmpl, &g);
            for l in 0..3 {
                for j in 0..3 {
                    k[tri[l]][tri[j]] += kl[l * 3 + j];
                    b[tri[l]][tri[j]] += bl[l * 3 + j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!(close(sys.stiffness.get(i, j), k[i][j], 1e-14));
                assert!(close(sys.mass.get(i, j), b[i][j], 1e-14));
            }
        }
        // the shared edge (1, 2) receives contributions from both triangles
        assert!(sys.mass.get(1, 2) > 1.5 * tmpl.m(1, 2) * 0.99);
    }

    #[test]
    fn closed_bc_rejects_open_mesh() {
        let err = assemble_surface(&two_triangles(), BasisOrder::Linear, BoundaryCondition::Closed)
            .unwrap_err();
        assert!(err.to_string().contains("mesh has 4 boundary edges"), "{err}");
    }

    #[test]
    fn dirichlet_deletes_boundary_rows() {
        let m = two_triangles();
        let err =
            assemble_surface(&m, BasisOrder::Linear, BoundaryCondition::Dirichlet).unwrap_err();
        assert!(matches!(err, Error::NoInteriorDofs));
        // cubic: two centroids are the only interior nodes
        let sys = assemble_surface(&m, BasisOrder::Cubic, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(sys.dim(), 2 + 2);
    }
}
