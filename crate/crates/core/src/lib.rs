//! Molecular-dynamics pair kernels in two forms: a scalar reference path and
//! a vectorized path built from padded, aligned structure-of-arrays data and
//! short branch-free loops.
//!
//! ```
//! use vecmd::{build_cell_grid, build_neighbor_table, lj_forces, KernelPath, LaneConfig, LjParams};
//! use vecmd::{OrthorhombicBox, ParticleSystem, Site};
//!
//! let b = OrthorhombicBox::cubic(10.0).unwrap();
//! let sites = vec![Site::at(1.0, 1.0, 1.0), Site::at(2.5, 1.0, 1.0)];
//! let system = ParticleSystem::from_sites(b, &sites).unwrap();
//! let grid = build_cell_grid(&system, 4.0).unwrap();
//! let table = build_neighbor_table(&system, &grid, 4.0).unwrap();
//! let f = lj_forces(KernelPath::Vectorized, &system, &table, &LjParams::new(4.0), LaneConfig::default()).unwrap();
//! assert!(f.energy < 0.0);
//! ```

pub mod error;
pub mod kernels;
pub mod layout;
pub mod neighbors;
pub mod pbc;
pub mod system;
pub mod vmath;

pub use error::{Error, Result};
pub use kernels::nonpolar::{
    ewald_real_forces, ewald_real_forces_scalar, ewald_real_forces_vectorized, ewald_real_pair,
    lj_forces, lj_forces_scalar, lj_forces_vectorized, lj_pair, EwaldRealParams, LjParams,
};
pub use kernels::polar::{
    dipole_field_matvec, dipole_field_matvec_scalar, dipole_field_matvec_vectorized,
    halgren_forces, halgren_forces_scalar, halgren_forces_vectorized, halgren_pair,
    jacobi_polarization_solve, jacobi_polarization_solve_with, permanent_field,
    permanent_field_scalar, permanent_field_vectorized, thole_factors, HalgrenParams,
    PolarParams, PolarizationState,
};
pub use kernels::KernelPath;
pub use layout::{
    build_mask, build_mask_into, compress_into, compress_select, compress_select_multi,
    pad_count, Column, LaneConfig, LaneMask, PackedColumn, PaddedIndexArray, PaddedRealArray,
    ALIGN, MAXVLST,
};
pub use neighbors::{
    brute_force_pairs, build_cell_grid, build_neighbor_table, build_neighbor_table_scalar,
    CellGrid, NeighborTable, SiteNeighbors,
};
pub use pbc::{minimum_image_batch, minimum_image_scalar, OrthorhombicBox};
pub use system::{ForceAccumulator, ParticleSystem, Site, VectorField};
