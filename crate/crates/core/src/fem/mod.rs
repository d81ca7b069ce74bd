//! Finite-element discretisation of the Laplace–Beltrami operator.
//!
//! Both element families produce a [`FemSystem`]: a stiffness matrix `K` with entries
//! `∫ ⟨∇h_l, ∇h_m⟩ dV` and a mass matrix `B` with entries `∫ h_l h_m dV`, so the spectrum is the
//! set of `λ` solving `K u = λ B u` (nonnegative, ascending).

pub mod poly;
mod sparse;
pub mod surface;
pub mod voxel;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use sparse::{SparseMatrix, SparsityPattern};
pub use surface::{
    assemble_surface, global_node_map, reference_basis, reference_integrals, triangle_metric,
    ElementBasis, ElementTemplates, MetricTensor2, SurfaceNodeMap,
};
pub use voxel::{
    assemble_voxel, voxel_basis, voxel_node_map, voxel_templates, MetricTensor3, VoxelBasis,
    VoxelNodeMap, VoxelTemplates,
};

use crate::error::{Error, Result};
use crate::geom::{BoundarySet, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisOrder {
    Linear,
    Quadratic,
    Cubic,
}

impl BasisOrder {
    pub fn degree(self) -> u8 {
        match self {
            BasisOrder::Linear => 1,
            BasisOrder::Quadratic => 2,
            BasisOrder::Cubic => 3,
        }
    }
}

impl fmt::Display for BasisOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisOrder::Linear => "linear",
            BasisOrder::Quadratic => "quadratic",
            BasisOrder::Cubic => "cubic",
        })
    }
}

impl FromStr for BasisOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "1" => Ok(BasisOrder::Linear),
            "quadratic" | "2" => Ok(BasisOrder::Quadratic),
            "cubic" | "3" => Ok(BasisOrder::Cubic),
            _ => Err(Error::InvalidArgument(format!("unknown basis order {s:?}"))),
        }
    }
}

/// `Dirichlet`: f = 0 on the boundary (boundary rows/columns deleted).
/// `Neumann`: ∂f/∂n = 0 (boundary nodes treated as interior).
/// `Closed`: no boundary allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Closed,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Closed => "closed",
        })
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            "closed" => Ok(BoundaryCondition::Closed),
            _ => Err(Error::InvalidArgument(format!(
                "unknown boundary condition {s:?}"
            ))),
        }
    }
}

/// Assembled stiffness/mass pair for one part.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    /// Global node id of every retained row.
    pub dofs: Vec<usize>,
    /// Number of global nodes before any boundary reduction.
    pub num_nodes: usize,
    pub boundary: BoundarySet,
    pub bc: BoundaryCondition,
    /// Coordinates of every global node.
    pub node_positions: Vec<Point3>,
}

impl FemSystem {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    /// Lifts a vector over retained rows to all global nodes, with zeros on deleted nodes.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_nodes];
        for (&g, &v) in self.dofs.iter().zip(reduced) {
            full[g] = v;
        }
        full
    }

    /// Coordinates of the retained rows.
    pub fn dof_positions(&self) -> Vec<Point3> {
        self.dofs.iter().map(|&g| self.node_positions[g]).collect()
    }

    pub(crate) fn finish(
        stiffness: SparseMatrix,
        mass: SparseMatrix,
        boundary: BoundarySet,
        bc: BoundaryCondition,
        node_positions: Vec<Point3>,
    ) -> Result<Self> {
        let num_nodes = stiffness.dim();
        if bc != BoundaryCondition::Dirichlet {
            return Ok(Self {
                stiffness,
                mass,
                dofs: (0..num_nodes).collect(),
                num_nodes,
                boundary,
                bc,
                node_positions,
            });
        }
        let keep: Vec<usize> = (0..num_nodes).filter(|&i| !boundary.contains(i)).collect();
        if keep.is_empty() {
            return Err(Error::NoInteriorDofs);
        }
        let (k, b) = SparseMatrix::principal_submatrix_pair(&stiffness, &mass, &keep);
        Ok(Self {
            stiffness: k,
            mass: b,
            dofs: keep,
            num_nodes,
            boundary,
            bc,
            node_positions,
        })
    }
}

/// Zero-valued stiffness and mass matrices sharing the element-coupling pattern.
pub(crate) fn empty_pair(n: usize, elements: &[usize], npe: usize) -> (SparseMatrix, SparseMatrix) {
    let pattern = Arc::new(SparsityPattern::from_elements(n, elements, npe));
    (
        SparseMatrix::zeros(pattern.clone()),
        SparseMatrix::zeros(pattern),
    )
}
