//! Geometry types, file ingestion and boundary detection.

mod boundary;
mod mesh;
mod voxel;

pub use boundary::BoundarySet;
pub use mesh::{
    load_triangle_mesh, mesh_boundary_edges, parse_off, write_off, Point3, TriangleMesh,
};
pub use voxel::{load_voxel_grid, parse_voxgrid, voxel_boundary_nodes, write_voxgrid, VoxelGrid};
pub(crate) use mesh::{cross, dot, edge_key, norm, sub};
