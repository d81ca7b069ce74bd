//! Trilinear and serendipity-cubic voxel elements.
//!
//! A voxel with lower corner `(x, y, z)` and edge lengths `(s1, s2, s3)` is parametrised by
//! `p(u, v, w) = (x + s1·u, y + s2·v, z + s3·w)` over the unit cube. The metric is the constant
//! diagonal `(s1², s2², s3²)`, so one pair of local matrices serves every voxel of a grid.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::{voxel_boundary_nodes, Point3, VoxelGrid};

use super::poly::NodalBasis;
use super::{empty_pair, BasisOrder, BoundaryCondition, FemSystem};

/// Monomials of the cubic serendipity family, in listing order.
const CUBIC_MONOMIALS: [[u8; 3]; 32] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
    [2, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [2, 1, 1],
    [0, 2, 0],
    [1, 2, 0],
    [0, 2, 1],
    [1, 2, 1],
    [0, 0, 2],
    [1, 0, 2],
    [0, 1, 2],
    [1, 1, 2],
    [3, 0, 0],
    [3, 1, 0],
    [3, 0, 1],
    [3, 1, 1],
    [0, 3, 0],
    [1, 3, 0],
    [0, 3, 1],
    [1, 3, 1],
    [0, 0, 3],
    [1, 0, 3],
    [0, 1, 3],
    [1, 1, 3],
];

/// Local node coordinates in thirds of the unit cube (each component in `0..=3`).
///
/// Vertices come first, vertex `v` at `3·(v & 1, (v >> 1) & 1, (v >> 2) & 1)`. The cubic layout
/// then lists the 12 edges, those parallel to x, then y, then z, with the two trisection points
/// of each edge at 1 and 2 along it.
pub fn reference_nodes_thirds(order: BasisOrder) -> &'static [[u8; 3]] {
    static LINEAR: OnceLock<Vec<[u8; 3]>> = OnceLock::new();
    static CUBIC: OnceLock<Vec<[u8; 3]>> = OnceLock::new();
    let vertices = || -> Vec<[u8; 3]> {
        (0..8u8)
            .map(|v| [3 * (v & 1), 3 * ((v >> 1) & 1), 3 * ((v >> 2) & 1)])
            .collect()
    };
    match order {
        BasisOrder::Linear => LINEAR.get_or_init(vertices),
        _ => CUBIC.get_or_init(|| {
            let mut nodes = vertices();
            for axis in 0..3 {
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                for corner in 0..4u8 {
                    for t in [1u8, 2] {
                        let mut p = [0u8; 3];
                        p[axis] = t;
                        p[a.min(b)] = 3 * (corner & 1);
                        p[a.max(b)] = 3 * ((corner >> 1) & 1);
                        nodes.push(p);
                    }
                }
            }
            nodes
        }),
    }
}

fn check_order(order: BasisOrder) -> Result<()> {
    if order == BasisOrder::Quadratic {
        return Err(Error::Unsupported(
            "voxel elements support linear and cubic bases only".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct VoxelBasis {
    pub order: BasisOrder,
    pub basis: NodalBasis<3>,
}

impl VoxelBasis {
    pub fn nodes_per_element(&self) -> usize {
        self.basis.len()
    }

    pub fn value(&self, l: usize, x: [f64; 3]) -> f64 {
        self.basis.value(l, &x)
    }

    pub fn gradient(&self, l: usize, x: [f64; 3]) -> [f64; 3] {
        self.basis.gradient(l, &x)
    }
}

/// Nodal basis on the unit cube: trilinear (8 nodes) or serendipity cubic (32 nodes).
pub fn voxel_basis(order: BasisOrder) -> Result<VoxelBasis> {
    check_order(order)?;
    let exponents: Vec<[u8; 3]> = match order {
        BasisOrder::Linear => CUBIC_MONOMIALS[..8].to_vec(),
        _ => CUBIC_MONOMIALS.to_vec(),
    };
    let nodes = reference_nodes_thirds(order)
        .iter()
        .map(|p| p.map(|c| f64::from(c) / 3.0))
        .collect();
    Ok(VoxelBasis {
        order,
        basis: NodalBasis::fit(exponents, nodes)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor3 {
    pub diagonal: [f64; 3],
}

impl MetricTensor3 {
    pub fn from_spacing(spacing: [f64; 3]) -> Result<Self> {
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be strictly positive, got {spacing:?}"
            )));
        }
        Ok(Self {
            diagonal: spacing.map(|s| s * s),
        })
    }

    pub fn det(&self) -> f64 {
        self.diagonal.iter().product()
    }
}

/// Local matrices shared by all voxels of one grid, already scaled by the spacing.
#[derive(Debug, Clone)]
pub struct VoxelTemplates {
    pub npe: usize,
    /// row-major `npe × npe`
    pub stiffness: Vec<f64>,
    /// row-major `npe × npe`
    pub mass: Vec<f64>,
}

impl VoxelTemplates {
    pub fn k(&self, l: usize, m: usize) -> f64 {
        self.stiffness[l * self.npe + m]
    }

    pub fn b(&self, l: usize, m: usize) -> f64 {
        self.mass[l * self.npe + m]
    }
}

/// Unit-cube integrals: `∫ h_l h_m` and, per axis, `∫ ∂_i h_l ∂_i h_m`.
struct UnitIntegrals {
    mass: Vec<f64>,
    axis: [Vec<f64>; 3],
}

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// 4-point Gauss–Legendre on [0, 1] in each axis, exact for per-axis degree ≤ 7.
fn unit_integrals(basis: &VoxelBasis) -> UnitIntegrals {
    let n = basis.nodes_per_element();
    let pts: Vec<(f64, f64)> = GL4_NODES
        .iter()
        .zip(GL4_WEIGHTS)
        .map(|(&x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut mass = vec![0.0; n * n];
    let mut axis: [Vec<f64>; 3] = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    let mut h = vec![0.0; n];
    let mut g = vec![[0.0; 3]; n];
    for &(w, ww) in &pts {
        for &(v, wv) in &pts {
            for &(u, wu) in &pts {
                let weight = wu * wv * ww;
                for l in 0..n {
                    h[l] = basis.value(l, [u, v, w]);
                    g[l] = basis.gradient(l, [u, v, w]);
                }
                for l in 0..n {
                    for m in l..n {
                        mass[l * n + m] += weight * h[l] * h[m];
                        for (i, a) in axis.iter_mut().enumerate() {
                            a[l * n + m] += weight * g[l][i] * g[m][i];
                        }
                    }
                }
            }
        }
    }
    // mirror so the templates are exactly symmetric
    for l in 0..n {
        for m in 0..l {
            mass[l * n + m] = mass[m * n + l];
            for a in axis.iter_mut() {
                a[l * n + m] = a[m * n + l];
            }
        }
    }
    UnitIntegrals { mass, axis }
}

fn cached_unit(order: BasisOrder) -> &'static (VoxelBasis, UnitIntegrals) {
    static LINEAR: OnceLock<(VoxelBasis, UnitIntegrals)> = OnceLock::new();
    static CUBIC: OnceLock<(VoxelBasis, UnitIntegrals)> = OnceLock::new();
    let cell = if order == BasisOrder::Linear {
        &LINEAR
    } else {
        &CUBIC
    };
    cell.get_or_init(|| {
        let b = voxel_basis(order).expect("voxel layouts are unisolvent");
        let u = unit_integrals(&b);
        (b, u)
    })
}

/// `B = s1 s2 s3 ∫ h_l h_m`, `K = s1 s2 s3 Σ_i s_i⁻² ∫ ∂_i h_l ∂_i h_m` over the unit cube.
pub fn voxel_templates(basis: &VoxelBasis, spacing: [f64; 3]) -> Result<VoxelTemplates> {
    let metric = MetricTensor3::from_spacing(spacing)?;
    let cached = cached_unit(basis.order);
    let fresh;
    // a caller-built basis of the same order is identical to the cached one
    let unit = if cached.0.nodes_per_element() == basis.nodes_per_element() {
        &cached.1
    } else {
        fresh = unit_integrals(basis);
        &fresh
    };
    Ok(scale_unit(unit, basis.nodes_per_element(), &metric))
}

fn scale_unit(unit: &UnitIntegrals, npe: usize, metric: &MetricTensor3) -> VoxelTemplates {
    let vol = metric.det().sqrt();
    let inv = metric.diagonal.map(|d| vol / d);
    let mass = unit.mass.iter().map(|&m| vol * m).collect();
    let stiffness = (0..npe * npe)
        .map(|p| inv[0] * unit.axis[0][p] + inv[1] * unit.axis[1][p] + inv[2] * unit.axis[2][p])
        .collect();
    VoxelTemplates {
        npe,
        stiffness,
        mass,
    }
}

/// Global numbering of voxel nodes.
///
/// Every node has an integer key on the lattice of thirds, `3·(i, j, k) + local`, so nodes
/// shared between voxels coincide by construction. Global ids follow the keys sorted by z, then
/// y, then x, and voxels are kept in the same canonical order, making the numbering independent
/// of the order in which voxels are supplied.
#[derive(Debug, Clone)]
pub struct VoxelNodeMap {
    order: BasisOrder,
    voxels: Vec<[usize; 3]>,
    element_nodes: Vec<usize>,
    keys: Vec<[usize; 3]>,
}

impl VoxelNodeMap {
    pub(crate) fn from_voxels(mut voxels: Vec<[usize; 3]>, order: BasisOrder) -> Result<Self> {
        check_order(order)?;
        if voxels.is_empty() {
            return Err(Error::InvalidGrid("grid has no active voxels".into()));
        }
        voxels.sort_unstable_by_key(|v| [v[2], v[1], v[0]]);
        voxels.dedup();
        let local = reference_nodes_thirds(order);
        let key = |v: &[usize; 3], r: &[u8; 3]| -> [usize; 3] {
            [
                3 * v[2] + usize::from(r[2]),
                3 * v[1] + usize::from(r[1]),
                3 * v[0] + usize::from(r[0]),
            ]
        };
        let mut keys: Vec<[usize; 3]> = voxels
            .iter()
            .flat_map(|v| local.iter().map(move |r| key(v, r)))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let index: HashMap<[usize; 3], usize> =
            keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let element_nodes = voxels
            .iter()
            .flat_map(|v| local.iter().map(|r| index[&key(v, r)]).collect::<Vec<_>>())
            .collect();
        Ok(Self {
            order,
            voxels,
            element_nodes,
            keys,
        })
    }

    pub fn order(&self) -> BasisOrder {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.keys.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        reference_nodes_thirds(self.order).len()
    }

    /// Active voxels in canonical order, one element each.
    pub fn voxels(&self) -> &[[usize; 3]] {
        &self.voxels
    }

    /// Global node ids, `nodes_per_element()` per voxel.
    pub fn element_nodes(&self) -> &[usize] {
        &self.element_nodes
    }

    /// Physical node positions for the given spacing, with the grid origin at zero.
    pub fn node_positions(&self, spacing: [f64; 3]) -> Vec<Point3> {
        self.keys
            .iter()
            .map(|k| {
                [
                    spacing[0] * k[2] as f64 / 3.0,
                    spacing[1] * k[1] as f64 / 3.0,
                    spacing[2] * k[0] as f64 / 3.0,
                ]
            })
            .collect()
    }
}

pub fn voxel_node_map(grid: &VoxelGrid, order: BasisOrder) -> Result<VoxelNodeMap> {
    VoxelNodeMap::from_voxels(grid.active_voxels(), order)
}

/// Assembles `K` and `B` over the active voxels, then applies the boundary condition.
pub fn assemble_voxel(
    grid: &VoxelGrid,
    order: BasisOrder,
    bc: BoundaryCondition,
) -> Result<FemSystem> {
    if bc == BoundaryCondition::Closed {
        return Err(Error::InvalidArgument(
            "voxel solids have a boundary; use dirichlet or neumann".into(),
        ));
    }
    let nodes = voxel_node_map(grid, order)?;
    let boundary = voxel_boundary_nodes(grid, &nodes);
    let (basis, unit) = cached_unit(order);
    let npe = basis.nodes_per_element();
    let templates = scale_unit(unit, npe, &MetricTensor3::from_spacing(grid.spacing())?);
    let (mut k, mut b) = empty_pair(nodes.num_nodes(), nodes.element_nodes(), npe);
    for elem in nodes.element_nodes().chunks_exact(npe) {
        k.add_local(elem, &templates.stiffness);
        b.add_local(elem, &templates.mass);
    }
    let positions = nodes.node_positions(grid.spacing());
    FemSystem::finish(k, b, boundary, bc, positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Exact integral over the unit cube of a product of two term lists.
    fn exact(p: &[(f64, [u8; 3])], q: &[(f64, [u8; 3])]) -> f64 {
        let mut s = 0.0;
        for (a, ea) in p {
            for (b, eb) in q {
                let mut w = a * b;
                for k in 0..3 {
                    w /= f64::from(ea[k] + eb[k] + 1);
                }
                s += w;
            }
        }
        s
    }

    #[test]
    fn layouts() {
        let lin = reference_nodes_thirds(BasisOrder::Linear);
        let cub = reference_nodes_thirds(BasisOrder::Cubic);
        assert_eq!(lin.len(), 8);
        assert_eq!(cub.len(), 32);
        assert_eq!(&cub[..8], lin);
        let mut sorted = cub.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
        // edge nodes have exactly one coordinate strictly inside
        for p in &cub[8..] {
            assert_eq!(p.iter().filter(|&&c| c == 1 || c == 2).count(), 1);
        }
    }

    #[test]
    fn trilinear_vertex_function() {
        let b = voxel_basis(BasisOrder::Linear).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let want = (1.0 - x[0]) * (1.0 - x[1]) * (1.0 - x[2]);
            assert!(close(b.value(0, x), want, 1e-14));
        }
    }

    #[test]
    fn nodal_and_partition_of_unity() {
        for order in [BasisOrder::Linear, BasisOrder::Cubic] {
            let b = voxel_basis(order).unwrap();
            let n = b.nodes_per_element();
            for l in 0..n {
                for (m, x) in b.basis.nodes().iter().enumerate() {
                    let want = if l == m { 1.0 } else { 0.0 };
                    assert!(close(b.value(l, *x), want, 1e-12));
                }
            }
            let s: f64 = (0..n).map(|l| b.value(l, [0.3, 0.7, 0.1])).sum();
            assert!(close(s, 1.0, 1e-12));
        }
        assert_eq!(
            voxel_basis(BasisOrder::Cubic).unwrap().basis.exponents(),
            &CUBIC_MONOMIALS[..]
        );
    }

    #[test]
    fn quadratic_is_unsupported() {
        assert!(matches!(
            voxel_basis(BasisOrder::Quadratic),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn quadrature_matches_exact_integration() {
        for order in [BasisOrder::Linear, BasisOrder::Cubic] {
            let b = voxel_basis(order).unwrap();
            let n = b.nodes_per_element();
            let unit = unit_integrals(&b);
            let terms: Vec<_> = (0..n).map(|l| b.basis.terms(l)).collect();
            for l in 0..n {
                for m in 0..n {
                    let want = exact(&terms[l], &terms[m]);
                    assert!(close(unit.mass[l * n + m], want, 1e-13));
                    for i in 0..3 {
                        let want = exact(
                            &b.basis.derivative_terms(l, i),
                            &b.basis.derivative_terms(m, i),
                        );
                        assert!(close(unit.axis[i][l * n + m], want, 1e-11));
                    }
                }
            }
        }
    }

    #[test]
    fn linear_mass_values() {
        let b = voxel_basis(BasisOrder::Linear).unwrap();
        let t = voxel_templates(&b, [1.0; 3]).unwrap();
        for l in 0..8usize {
            for m in 0..8 {
                let differing = (l ^ m).count_ones() as usize;
                let want = [1.0 / 27.0, 1.0 / 54.0, 1.0 / 108.0, 1.0 / 216.0][differing];
                assert!(close(t.b(l, m), want, 1e-15), "{l} {m}");
            }
        }
    }

    #[test]
    fn template_invariants() {
        for order in [BasisOrder::Linear, BasisOrder::Cubic] {
            let b = voxel_basis(order).unwrap();
            for spacing in [[1.0; 3], [2.0, 1.0, 0.5]] {
                let t = voxel_templates(&b, spacing).unwrap();
                let n = t.npe;
                let vol: f64 = spacing.iter().product();
                assert!(close(t.mass.iter().sum(), vol, 1e-12));
                for l in 0..n {
                    let row: f64 = (0..n).map(|m| t.k(l, m)).sum();
                    assert!(row.abs() < 1e-12);
                    for m in 0..n {
                        assert!(close(t.k(l, m), t.k(m, l), 1e-14));
                        assert!(close(t.b(l, m), t.b(m, l), 1e-15));
                    }
                }
            }
        }
    }

    #[test]
    fn spacing_rescaling() {
        let b = voxel_basis(BasisOrder::Linear).unwrap();
        let t1 = voxel_templates(&b, [1.0; 3]).unwrap();
        let t2 = voxel_templates(&b, [2.0, 1.0, 1.0]).unwrap();
        let unit = &cached_unit(BasisOrder::Linear).1;
        for p in 0..64 {
            assert!(close(t2.mass[p], 2.0 * t1.mass[p], 1e-15));
            let want = 2.0 * (0.25 * unit.axis[0][p] + unit.axis[1][p] + unit.axis[2][p]);
            assert!(close(t2.stiffness[p], want, 1e-14));
        }
        assert!(voxel_templates(&b, [0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn node_counts() {
        let one = VoxelGrid::filled([1, 1, 1], [1.0; 3], true).unwrap();
        assert_eq!(voxel_node_map(&one, BasisOrder::Linear).unwrap().num_nodes(), 8);
        assert_eq!(voxel_node_map(&one, BasisOrder::Cubic).unwrap().num_nodes(), 32);
        let two = VoxelGrid::filled([2, 1, 1], [1.0; 3], true).unwrap();
        assert_eq!(voxel_node_map(&two, BasisOrder::Linear).unwrap().num_nodes(), 12);
        // 8 + 4 new vertices, 24 + (12 − 4 shared edges)·2 trisection nodes
        assert_eq!(voxel_node_map(&two, BasisOrder::Cubic).unwrap().num_nodes(), 12 + 24 + 16);
        let empty = VoxelGrid::filled([2, 2, 2], [1.0; 3], false).unwrap();
        assert!(voxel_node_map(&empty, BasisOrder::Linear).is_err());
    }

    #[test]
    fn shared_nodes_coincide() {
        let g = VoxelGrid::from_fn([3, 2, 2], [1.0; 3], |i, j, k| (i + j + k) % 3 != 0).unwrap();
        let map = voxel_node_map(&g, BasisOrder::Cubic).unwrap();
        let pos = map.node_positions([1.0; 3]);
        let local = reference_nodes_thirds(BasisOrder::Cubic);
        for (e, v) in map.voxels().iter().enumerate() {
            for (l, r) in local.iter().enumerate() {
                let id = map.element_nodes()[e * 32 + l];
                for a in 0..3 {
                    let want = v[a] as f64 + f64::from(r[a]) / 3.0;
                    assert!(close(pos[id][a], want, 1e-14));
                }
            }
        }
    }

    #[test]
    fn single_voxel_dirichlet_has_no_dofs() {
        let g = VoxelGrid::filled([1, 1, 1], [1.0; 3], true).unwrap();
        for order in [BasisOrder::Linear, BasisOrder::Cubic] {
            assert!(matches!(
                assemble_voxel(&g, order, BoundaryCondition::Dirichlet),
                Err(Error::NoInteriorDofs)
            ));
        }
    }

    #[test]
    fn two_cube_dirichlet_single_dof() {
        let g = VoxelGrid::filled([2, 2, 2], [1.0; 3], true).unwrap();
        let sys = assemble_voxel(&g, BasisOrder::Linear, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(sys.dim(), 1);
        // centre node sees the diagonal entry of all eight voxels
        let t = voxel_templates(&voxel_basis(BasisOrder::Linear).unwrap(), [1.0; 3]).unwrap();
        assert!(close(sys.mass.get(0, 0), 8.0 * t.b(0, 0), 1e-15));
        assert!(close(sys.stiffness.get(0, 0), 8.0 * t.k(0, 0), 1e-14));
        let three = VoxelGrid::filled([3, 3, 3], [1.0; 3], true).unwrap();
        let sys = assemble_voxel(&three, BasisOrder::Linear, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(sys.dim(), 8);
    }

    #[test]
    fn closed_bc_rejected() {
        let g = VoxelGrid::filled([1, 1, 1], [1.0; 3], true).unwrap();
        assert!(assemble_voxel(&g, BasisOrder::Linear, BoundaryCondition::Closed).is_err());
    }

    #[test]
    fn voxel_order_does_not_change_assembly() {
        let g = VoxelGrid::from_fn([4, 3, 3], [1.0, 0.5, 2.0], |i, j, k| (i * 7 + j * 3 + k) % 4 != 1)
            .unwrap();
        let canonical = voxel_node_map(&g, BasisOrder::Cubic).unwrap();
        let mut shuffled = g.active_voxels();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        let other = VoxelNodeMap::from_voxels(shuffled, BasisOrder::Cubic).unwrap();
        assert_eq!(canonical.element_nodes(), other.element_nodes());
        assert_eq!(canonical.voxels(), other.voxels());
    }

    #[test]
    fn sparsity_patterns_match() {
        let g = VoxelGrid::filled([2, 2, 1], [1.0; 3], true).unwrap();
        let sys = assemble_voxel(&g, BasisOrder::Cubic, BoundaryCondition::Neumann).unwrap();
        assert!(sys.stiffness.same_pattern(&sys.mass));
        assert!(sys.stiffness.is_symmetric());
        assert!(sys.mass.is_symmetric());
    }
}
