//! Mesh construction and the plain-text node/element file format.
//!
//! Run with `cargo run --release --example mesh_files`.

use std::path::Path;
use varorder::geometry::{boundary_point_index, disk_mesh, io};

fn main() -> varorder::Result<()> {
    let mesh = disk_mesh(8).retag(|c| u32::from(c[0] * c[0] + c[1] * c[1] > 0.25));
    println!(
        "disk mesh: {} vertices, {} triangles, {} boundary vertices",
        mesh.vertex_count(),
        mesh.triangle_count(),
        mesh.boundary_vertices().len()
    );
    println!(
        "total area {:.6} (pi = {:.6}), mesh size {:.4}, max angle {:.2} deg",
        mesh.total_area(),
        std::f64::consts::PI,
        mesh.mesh_size(),
        mesh.max_angle().to_degrees()
    );
    let (v, d) = boundary_point_index(&mesh, [0.7, 0.7]);
    println!("nearest boundary vertex to (0.7, 0.7): {v} at distance {d:.4}");

    std::fs::create_dir_all("out-mesh").map_err(|e| varorder::Error::Io {
        path: "out-mesh".into(),
        source: e,
    })?;
    let base = Path::new("out-mesh/disk8");
    io::write_mesh(&mesh, base)?;
    let back = io::read_mesh(base)?;
    assert_eq!(mesh.vertices(), back.vertices());
    assert_eq!(mesh.triangle_tags(), back.triangle_tags());
    println!("wrote and re-read out-mesh/disk8.node / .ele");
    Ok(())
}
