use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::SemanticMesh;

use super::{read_file, write_atomic};

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::BadFormat(format!("line {line}: {msg}"))
}

/// ASCII PLY with `double x, y, z`, `uint label` per vertex and
/// `vertex_indices` triangles.
pub fn ply_to_string(mesh: &SemanticMesh) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices().len());
    s.push_str("property double x\nproperty double y\nproperty double z\nproperty uint label\n");
    let _ = writeln!(s, "element face {}", mesh.triangles().len());
    s.push_str("property list uchar uint vertex_indices\nend_header\n");
    for (v, l) in mesh.vertices().iter().zip(mesh.vertex_labels()) {
        let _ = writeln!(s, "{} {} {} {}", v.x, v.y, v.z, l);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

#[derive(Debug)]
enum PlyProperty {
    Scalar(String),
    List(String),
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

const PLY_SCALARS: [&str; 16] = [
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16", "uint16",
    "int32", "uint32", "float32", "float64",
];

/// Parses an ASCII PLY mesh. The vertex element needs numeric `x`, `y`, `z`
/// and an integer `label`; faces are read from `vertex_indices` (or
/// `vertex_index`) and fan-triangulated. Other elements and properties are
/// skipped.
pub fn parse_ply(text: &str) -> Result<SemanticMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(Error::BadFormat("missing ply magic".into())),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    loop {
        let Some((n, line)) = lines.next() else { return Err(Error::BadFormat("missing end_header".into())) };
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            [] => {}
            ["comment" | "obj_info", ..] => {}
            ["format", fmt, _] => {
                if *fmt != "ascii" {
                    return Err(bad(n, format!("unsupported format {fmt}")));
                }
                ascii = true;
            }
            ["element", name, count] => {
                let count = count.parse().map_err(|_| bad(n, "bad element count"))?;
                elements.push(PlyElement { name: name.to_string(), count, properties: Vec::new() });
            }
            ["property", "list", idx, ty, name] => {
                if !PLY_SCALARS.contains(idx) || !PLY_SCALARS.contains(ty) {
                    return Err(bad(n, "unknown list type"));
                }
                let el = elements.last_mut().ok_or_else(|| bad(n, "property before element"))?;
                el.properties.push(PlyProperty::List(name.to_string()));
            }
            ["property", ty, name] => {
                if !PLY_SCALARS.contains(ty) {
                    return Err(bad(n, format!("unknown type {ty}")));
                }
                let el = elements.last_mut().ok_or_else(|| bad(n, "property before element"))?;
                el.properties.push(PlyProperty::Scalar(name.to_string()));
            }
            _ => return Err(bad(n, format!("unexpected header line {line:?}"))),
        }
    }
    if !ascii {
        return Err(Error::BadFormat("missing format line".into()));
    }

    let mut vertices = Vec::new();
    let mut labels = Vec::new();
    let mut triangles = Vec::new();
    let mut seen_vertex = false;
    for el in &elements {
        let scalar_index = |name: &str| {
            el.properties.iter().position(|p| matches!(p, PlyProperty::Scalar(s) if s == name))
        };
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let xyzl = if is_vertex {
            seen_vertex = true;
            let idx = ["x", "y", "z", "label"].map(scalar_index);
            match idx {
                [Some(x), Some(y), Some(z), Some(l)] => Some([x, y, z, l]),
                _ => return Err(Error::BadFormat("vertex element needs x, y, z and label".into())),
            }
        } else {
            None
        };
        let face_list = el
            .properties
            .iter()
            .position(|p| matches!(p, PlyProperty::List(s) if s == "vertex_indices" || s == "vertex_index"));
        if is_face && face_list.is_none() {
            return Err(Error::BadFormat("face element needs vertex_indices".into()));
        }
        for _ in 0..el.count {
            let Some((n, line)) = lines.next() else {
                return Err(Error::BadFormat(format!("element {} truncated", el.name)));
            };
            let mut tok = line.split_whitespace();
            let mut scalars: Vec<f64> = Vec::with_capacity(el.properties.len());
            let mut face: Vec<usize> = Vec::new();
            for (pi, p) in el.properties.iter().enumerate() {
                match p {
                    PlyProperty::Scalar(_) => {
                        let t = tok.next().ok_or_else(|| bad(n, "too few values"))?;
                        scalars.push(t.parse().map_err(|_| bad(n, format!("bad number {t:?}")))?);
                    }
                    PlyProperty::List(_) => {
                        let t = tok.next().ok_or_else(|| bad(n, "missing list length"))?;
                        let len: usize = t.parse().map_err(|_| bad(n, "bad list length"))?;
                        scalars.push(f64::NAN);
                        for _ in 0..len {
                            let t = tok.next().ok_or_else(|| bad(n, "list truncated"))?;
                            if Some(pi) == face_list && is_face {
                                face.push(t.parse().map_err(|_| bad(n, format!("bad index {t:?}")))?);
                            } else {
                                t.parse::<f64>().map_err(|_| bad(n, format!("bad number {t:?}")))?;
                            }
                        }
                    }
                }
            }
            if tok.next().is_some() {
                return Err(bad(n, "too many values"));
            }
            if let Some([x, y, z, l]) = xyzl {
                vertices.push(Vec3::new(scalars[x], scalars[y], scalars[z]));
                let label = scalars[l];
                if !(label >= 0.0 && label <= u32::MAX as f64 && label.fract() == 0.0) {
                    return Err(bad(n, format!("label {label} is not a u32")));
                }
                labels.push(label as u32);
            }
            if is_face {
                if face.len() < 3 {
                    return Err(bad(n, "face with fewer than 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
        }
    }
    if !seen_vertex {
        return Err(Error::BadFormat("no vertex element".into()));
    }
    SemanticMesh::new(vertices, triangles, labels).map_err(|e| Error::BadFormat(e.to_string()))
}

pub fn write_ply(path: impl AsRef<Path>, mesh: &SemanticMesh) -> Result<()> {
    write_atomic(path, ply_to_string(mesh).as_bytes())
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<SemanticMesh> {
    parse_ply(&utf8(read_file(path)?)?)
}

fn utf8(bytes: Vec<u8>) -> Result<String> {
    String::from_utf8(bytes).map_err(|e| Error::BadFormat(e.to_string()))
}

/// Wavefront OBJ geometry plus a sidecar with one vertex label per line.
pub fn obj_to_strings(mesh: &SemanticMesh) -> (String, String) {
    let mut obj = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(obj, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(obj, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let mut labels = String::new();
    for l in mesh.vertex_labels() {
        let _ = writeln!(labels, "{l}");
    }
    (obj, labels)
}

/// Vertices and triangles of an OBJ file. Face corners may use the `v`,
/// `v/vt`, `v//vn` and `v/vt/vn` forms and negative (relative) indices;
/// polygons are fan-triangulated. Statements other than `v` and `f` are ignored.
pub fn parse_obj_geometry(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let t = tok.next().ok_or_else(|| bad(n, "vertex needs 3 coordinates"))?;
                    *slot = t.parse().map_err(|_| bad(n, format!("bad coordinate {t:?}")))?;
                }
                vertices.push(Vec3::from(c));
            }
            Some("f") => {
                let corners = tok
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let idx: i64 = first.parse().map_err(|_| bad(n, format!("bad face index {t:?}")))?;
                        let count = vertices.len() as i64;
                        let resolved = if idx > 0 { idx - 1 } else { count + idx };
                        if idx == 0 || resolved < 0 || resolved >= count {
                            return Err(bad(n, format!("face index {idx} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if corners.len() < 3 {
                    return Err(bad(n, "face with fewer than 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// One unsigned label per non-empty line.
pub fn parse_labels(text: &str) -> Result<Vec<u32>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|_| bad(i + 1, format!("bad label {l:?}"))))
        .collect()
}

pub fn parse_obj(obj: &str, labels: &str) -> Result<SemanticMesh> {
    let (vertices, triangles) = parse_obj_geometry(obj)?;
    let labels = parse_labels(labels)?;
    SemanticMesh::new(vertices, triangles, labels).map_err(|e| Error::BadFormat(e.to_string()))
}

/// Writes `path` and its label sidecar `labels_path`.
pub fn write_obj(path: impl AsRef<Path>, labels_path: impl AsRef<Path>, mesh: &SemanticMesh) -> Result<()> {
    let (obj, labels) = obj_to_strings(mesh);
    write_atomic(path, obj.as_bytes())?;
    write_atomic(labels_path, labels.as_bytes())
}

pub fn read_obj(path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<SemanticMesh> {
    parse_obj(&utf8(read_file(path)?)?, &utf8(read_file(labels_path)?)?)
}

/// Reads a `.ply` mesh, or an `.obj` mesh with its `.labels` sidecar next to it.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<SemanticMesh> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => read_ply(path),
        Some("obj") => read_obj(path, path.with_extension("labels")),
        _ => Err(Error::BadFormat(format!("{}: expected a .ply or .obj mesh", path.display()))),
    }
}
