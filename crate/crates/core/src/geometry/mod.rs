//! Meshes, coefficient fields, order partitions, and validation of the
//! standing assumptions on the problem data.

pub mod fields;
pub mod io;
pub mod mesh;

pub use fields::{
    build_partition_order, BoundaryField, CoefficientSet, Excitation, OrderField, Partition,
    Placement, ScalarField,
};
pub use mesh::{
    boundary_point_index, build_disk_mesh, disk_mesh, inscribed_ngon_area, square_mesh,
    BoundaryEdge, Mesh,
};
