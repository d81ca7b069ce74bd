//! Laplace–Beltrami spectra of scanned parts and spectral process monitoring.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`]: triangle meshes and voxel grids, OFF / VOXGRID ingestion, boundary detection.
//! - [`fem`]: reference elements and assembly of the stiffness (`K`) and mass (`B`) matrices
//!   for triangle meshes and voxel grids.
//! - [`eigen`]: smallest eigenpairs of the pencil `K u = λ B u`, plus a dense oracle.
//! - [`spectra`]: the end-to-end spectrum pipeline, closed-form reference spectra and
//!   classical multidimensional scaling.
//! - [`chart`]: the distribution-free multivariate EWMA chart and run-length simulation.
//! - [`partgen`]: seeded synthetic part generators and noise models.

pub mod chart;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod geom;
pub mod partgen;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use fem::{BasisOrder, BoundaryCondition, FemSystem};
pub use geom::{BoundarySet, TriangleMesh, VoxelGrid};
pub use spectra::{compute_spectrum, Part, SpectrumConfig};
