//! Plain-text mesh files.
//!
//! `<name>.node` holds `id x y boundary_flag` lines, `<name>.ele` holds
//! `id v1 v2 v3 tag` lines. Ids are 0-based and sequential, fields are
//! whitespace-separated, `#` starts a comment.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::mesh::Mesh;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Strips comments and yields (1-based line number, content) for data lines.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

/// Writes `base.node` and `base.ele`.
pub fn write_mesh(mesh: &Mesh, base: &Path) -> Result<()> {
    let node_path = base.with_extension("node");
    let mut node = String::new();
    node.push_str("# id x y boundary_flag\n");
    for (i, v) in mesh.vertices().iter().enumerate() {
        let flag = u8::from(mesh.is_boundary_vertex(i));
        node.push_str(&format!("{i} {:.17e} {:.17e} {flag}\n", v[0], v[1]));
    }
    std::fs::File::create(&node_path)
        .and_then(|mut f| f.write_all(node.as_bytes()))
        .map_err(|e| io_err(&node_path, e))?;

    let ele_path = base.with_extension("ele");
    let mut ele = String::new();
    ele.push_str("# id v1 v2 v3 tag\n");
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let tag = mesh.triangle_tags()[t];
        ele.push_str(&format!("{t} {} {} {} {tag}\n", tri[0], tri[1], tri[2]));
    }
    std::fs::File::create(&ele_path)
        .and_then(|mut f| f.write_all(ele.as_bytes()))
        .map_err(|e| io_err(&ele_path, e))
}

/// Reads `base.node` and `base.ele` and rebuilds the mesh.
///
/// Boundary structure is re-derived from the triangle topology; the stored
/// boundary flags are checked against it.
pub fn read_mesh(base: &Path) -> Result<Mesh> {
    let node_path = base.with_extension("node");
    let node_text = std::fs::read_to_string(&node_path).map_err(|e| io_err(&node_path, e))?;
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut flags: Vec<bool> = Vec::new();
    for (lineno, line) in data_lines(&node_text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                &node_path,
                lineno,
                format!(
                    "expected 4 fields `id x y boundary_flag`, got {}",
                    fields.len()
                ),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(&node_path, lineno, "bad vertex id"))?;
        if id != vertices.len() {
            return Err(parse_err(
                &node_path,
                lineno,
                format!(
                    "ids must be 0-based and sequential; expected {}",
                    vertices.len()
                ),
            ));
        }
        let x: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(&node_path, lineno, "bad x coordinate"))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(&node_path, lineno, "bad y coordinate"))?;
        let flag: u8 = fields[3]
            .parse()
            .map_err(|_| parse_err(&node_path, lineno, "bad boundary flag"))?;
        vertices.push([x, y]);
        flags.push(flag != 0);
    }

    let ele_path = base.with_extension("ele");
    let ele_text = std::fs::read_to_string(&ele_path).map_err(|e| io_err(&ele_path, e))?;
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut tags: Vec<u32> = Vec::new();
    for (lineno, line) in data_lines(&ele_text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(
                &ele_path,
                lineno,
                format!("expected 5 fields `id v1 v2 v3 tag`, got {}", fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(&ele_path, lineno, "bad triangle id"))?;
        if id != triangles.len() {
            return Err(parse_err(
                &ele_path,
                lineno,
                format!(
                    "ids must be 0-based and sequential; expected {}",
                    triangles.len()
                ),
            ));
        }
        let mut tri = [0usize; 3];
        for (slot, f) in tri.iter_mut().zip(&fields[1..4]) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(&ele_path, lineno, "bad vertex index"))?;
        }
        let tag: u32 = fields[4]
            .parse()
            .map_err(|_| parse_err(&ele_path, lineno, "bad tag"))?;
        triangles.push(tri);
        tags.push(tag);
    }

    let mesh = Mesh::from_raw(vertices, triangles, tags)?;
    for (v, &flag) in flags.iter().enumerate() {
        if flag != mesh.is_boundary_vertex(v) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v}: stored boundary flag {} disagrees with the triangulation",
                u8::from(flag)
            )));
        }
    }
    Ok(mesh)
}
