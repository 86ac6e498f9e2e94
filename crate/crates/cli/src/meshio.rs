//! Mesh and curve file formats.
//!
//! Native mesh format (plain text, `#` comments):
//!
//! ```text
//! nodes <N>
//! <index> <x> <y> <z>
//! ...
//! triangles <T>
//! <index> <n0> <n1> <n2> <region-flag>
//! ```
//!
//! with region flag 1 for bilayer triangles and 0 for bare substrate.
//! Wavefront `.obj` geometry is accepted too, with bilayer triangles
//! listed in a sidecar file (one index per line). Snapshots are written
//! as `.obj`.

use std::path::Path;

use morphshell_core::math::Vec3;
use morphshell_core::mesh::{DofVector, Mesh};
use morphshell_core::metrics::TriSurface;

use crate::error::CliError;

/// Raw geometry plus region labels, before topology construction.
#[derive(Debug, Clone)]
pub struct MeshInput {
    pub nodes: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub bilayer_triangles: Vec<usize>,
}

impl MeshInput {
    pub fn build(self) -> Result<Mesh, CliError> {
        Mesh::build(self.nodes, self.triangles, &self.bilayer_triangles)
            .map_err(|e| CliError::input(format!("mesh rejected: {e}")))
    }
}

/// Load a mesh file by extension: `.obj` (with optional region sidecar) or
/// the native format.
pub fn load_mesh_input(path: &Path, regions: Option<&Path>) -> Result<MeshInput, CliError> {
    let is_obj = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("obj"))
        .unwrap_or(false);
    let mut input = if is_obj {
        let (nodes, triangles) = load_obj(path)?;
        MeshInput {
            nodes,
            triangles,
            bilayer_triangles: Vec::new(),
        }
    } else {
        load_native(path)?
    };
    if let Some(regions) = regions {
        input.bilayer_triangles = load_region_list(regions)?;
    }
    Ok(input)
}

fn context(path: &Path, line: usize, message: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{}:{line}: {message}", path.display()))
}

pub fn load_native(path: &Path) -> Result<MeshInput, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read mesh {}: {e}", path.display())))?;
    let mut nodes: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut bilayer = Vec::new();
    let mut expect_nodes = None;
    let mut expect_triangles = None;

    enum Section {
        None,
        Nodes,
        Triangles,
    }
    let mut section = Section::None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        match head {
            "nodes" => {
                let n: usize = parse_field(path, line_no, parts.next(), "node count")?;
                expect_nodes = Some(n);
                section = Section::Nodes;
            }
            "triangles" => {
                let n: usize = parse_field(path, line_no, parts.next(), "triangle count")?;
                expect_triangles = Some(n);
                section = Section::Triangles;
            }
            _ => match section {
                Section::None => {
                    return Err(context(path, line_no, "expected a 'nodes <N>' header"));
                }
                Section::Nodes => {
                    let index: usize = head
                        .parse()
                        .map_err(|_| context(path, line_no, "bad node index"))?;
                    if index != nodes.len() {
                        return Err(context(
                            path,
                            line_no,
                            format!("node index {index} out of order (expected {})", nodes.len()),
                        ));
                    }
                    let x: f64 = parse_field(path, line_no, parts.next(), "x")?;
                    let y: f64 = parse_field(path, line_no, parts.next(), "y")?;
                    let z: f64 = parse_field(path, line_no, parts.next(), "z")?;
                    nodes.push(Vec3::new(x, y, z));
                }
                Section::Triangles => {
                    let index: usize = head
                        .parse()
                        .map_err(|_| context(path, line_no, "bad triangle index"))?;
                    if index != triangles.len() {
                        return Err(context(
                            path,
                            line_no,
                            format!(
                                "triangle index {index} out of order (expected {})",
                                triangles.len()
                            ),
                        ));
                    }
                    let a: usize = parse_field(path, line_no, parts.next(), "n0")?;
                    let b: usize = parse_field(path, line_no, parts.next(), "n1")?;
                    let c: usize = parse_field(path, line_no, parts.next(), "n2")?;
                    let flag: u8 = parse_field(path, line_no, parts.next(), "region flag")?;
                    if flag > 1 {
                        return Err(context(path, line_no, "region flag must be 0 or 1"));
                    }
                    if flag == 1 {
                        bilayer.push(triangles.len());
                    }
                    triangles.push([a, b, c]);
                }
            },
        }
    }
    if let Some(n) = expect_nodes {
        if n != nodes.len() {
            return Err(CliError::input(format!(
                "{}: header says {n} nodes, found {}",
                path.display(),
                nodes.len()
            )));
        }
    }
    if let Some(n) = expect_triangles {
        if n != triangles.len() {
            return Err(CliError::input(format!(
                "{}: header says {n} triangles, found {}",
                path.display(),
                triangles.len()
            )));
        }
    }
    Ok(MeshInput {
        nodes,
        triangles,
        bilayer_triangles: bilayer,
    })
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: Option<&str>,
    name: &str,
) -> Result<T, CliError> {
    let raw = field.ok_or_else(|| context(path, line, format!("missing {name}")))?;
    raw.parse()
        .map_err(|_| context(path, line, format!("cannot parse {name} from '{raw}'")))
}

/// Vertices and triangle faces from a Wavefront file; normals, textures,
/// and grouping statements are ignored, polygons are fan-triangulated.
pub fn load_obj(path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read mesh {}: {e}", path.display())))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next().unwrap() {
            "v" => {
                let x: f64 = parse_field(path, line_no, parts.next(), "x")?;
                let y: f64 = parse_field(path, line_no, parts.next(), "y")?;
                let z: f64 = parse_field(path, line_no, parts.next(), "z")?;
                vertices.push(Vec3::new(x, y, z));
            }
            "f" => {
                let mut corners = Vec::new();
                for token in parts {
                    let first = token.split('/').next().unwrap_or(token);
                    let index: isize = first
                        .parse()
                        .map_err(|_| context(path, line_no, "bad face index"))?;
                    let resolved = if index < 0 {
                        vertices.len() as isize + index
                    } else {
                        index - 1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(context(path, line_no, format!("face index {index} out of range")));
                    }
                    corners.push(resolved as usize);
                }
                if corners.len() < 3 {
                    return Err(context(path, line_no, "face needs at least 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() || triangles.is_empty() {
        return Err(CliError::input(format!(
            "{}: no geometry found",
            path.display()
        )));
    }
    Ok((vertices, triangles))
}

/// One triangle index per line, `#` comments allowed.
pub fn load_region_list(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read regions {}: {e}", path.display())))?;
    let mut indices = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value: usize = line
            .parse()
            .map_err(|_| context(path, idx + 1, "bad triangle index"))?;
        indices.push(value);
    }
    Ok(indices)
}

/// Load a triangle surface for metrics (no manifold requirements).
pub fn load_surface(path: &Path) -> Result<TriSurface, CliError> {
    let is_obj = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("obj"))
        .unwrap_or(false);
    let (nodes, triangles) = if is_obj {
        load_obj(path)?
    } else {
        let input = load_native(path)?;
        (input.nodes, input.triangles)
    };
    TriSurface::new(nodes, triangles)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Write the native mesh format.
pub fn write_native(
    path: &Path,
    nodes: &[Vec3],
    triangles: &[[usize; 3]],
    bilayer: &[bool],
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&format!("nodes {}\n", nodes.len()));
    for (i, n) in nodes.iter().enumerate() {
        out.push_str(&format!("{i} {:.9} {:.9} {:.9}\n", n.x, n.y, n.z));
    }
    out.push_str(&format!("triangles {}\n", triangles.len()));
    for (i, t) in triangles.iter().enumerate() {
        let flag = u8::from(bilayer[i]);
        out.push_str(&format!("{i} {} {} {} {flag}\n", t[0], t[1], t[2]));
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Write a deformed state as Wavefront geometry.
pub fn write_obj(path: &Path, mesh: &Mesh, x: &DofVector) -> Result<(), CliError> {
    let mut out = String::new();
    for i in 0..mesh.node_count() {
        let p = x.node(i);
        out.push_str(&format!("v {:.9} {:.9} {:.9}\n", p.x, p.y, p.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Two-column shrink curve (T/Tg, L/L0) with `#` comments.
pub fn load_shrink_curve(
    path: &Path,
    tg_kelvin: f64,
) -> Result<morphshell_core::stimulus::ShrinkCurve, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read curve {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let t: f64 = parse_field(path, idx + 1, parts.next(), "T/Tg")?;
        let r: f64 = parse_field(path, idx + 1, parts.next(), "L/L0")?;
        samples.push((t, r));
    }
    morphshell_core::stimulus::ShrinkCurve::new(samples, tg_kelvin)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("morphshell_meshio");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn native_round_trip_preserves_everything() {
        let nodes = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 0.9, 0.0),
            Vec3::new(0.5, -0.8, 0.0),
        ];
        let triangles = vec![[0usize, 1, 2], [1, 0, 3]];
        let path = tmp("roundtrip.mesh");
        write_native(&path, &nodes, &triangles, &[true, false]).unwrap();
        let input = load_native(&path).unwrap();
        assert_eq!(input.nodes.len(), 4);
        assert_eq!(input.triangles, triangles);
        assert_eq!(input.bilayer_triangles, vec![0]);
        let mesh = input.build().unwrap();
        assert_eq!(mesh.edge_count(), 5);
    }

    #[test]
    fn native_header_mismatch_is_an_input_error() {
        let path = tmp("bad_header.mesh");
        std::fs::write(&path, "nodes 2\n0 0 0 0\ntriangles 0\n").unwrap();
        let err = load_native(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn obj_parses_slashed_faces() {
        let path = tmp("cube_corner.obj");
        std::fs::write(
            &path,
            "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1/1 2/2 3/3\nf 1//1 2//2 4//4\n",
        )
        .unwrap();
        let (v, t) = load_obj(&path).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(t, vec![[0, 1, 2], [0, 1, 3]]);
    }

    #[test]
    fn missing_files_report_their_path() {
        let err = load_mesh_input(Path::new("/nonexistent/x.mesh"), None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.mesh"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn curve_loader_parses_comments_and_validates() {
        let path = tmp("curve.txt");
        std::fs::write(&path, "# T/Tg L/L0\n0.9 1.0\n1.0 1.0\n1.1 0.7\n1.2 0.4\n").unwrap();
        let curve = load_shrink_curve(&path, 366.5).unwrap();
        assert_eq!(curve.samples().len(), 4);
        assert!((curve.shrink_to_strain(1.1) + 0.3).abs() < 1e-12);
    }
}
