//! ASCII OBJ and OFF input, OBJ output with a JSON sidecar for per-vertex
//! fields. Triangles only; polygonal faces are rejected.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use super::{MeshError, TriMesh, VertexField};

fn parse_f64(token: &str, line: usize) -> Result<f64, MeshError> {
    token
        .parse::<f64>()
        .map_err(|e| MeshError::Parse { line, message: format!("bad float {token:?}: {e}") })
}

fn parse_index(token: &str, line: usize) -> Result<u32, MeshError> {
    // OBJ face entries may carry /texture/normal references
    let head = token.split('/').next().unwrap_or(token);
    let idx: i64 = head
        .parse()
        .map_err(|e| MeshError::Parse { line, message: format!("bad index {token:?}: {e}") })?;
    if idx < 1 {
        return Err(MeshError::Parse { line, message: format!("indices must be positive, got {idx}") });
    }
    Ok((idx - 1) as u32)
}

/// Reads an ASCII OBJ surface (`v` and `f` records, triangular faces).
pub fn read_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() < 3 {
                    return Err(MeshError::Parse { line: line_no, message: "vertex needs 3 coordinates".into() });
                }
                positions.push(Vector3::new(
                    parse_f64(coords[0], line_no)?,
                    parse_f64(coords[1], line_no)?,
                    parse_f64(coords[2], line_no)?,
                ));
            }
            Some("f") => {
                let verts: Vec<&str> = tokens.collect();
                if verts.len() != 3 {
                    return Err(MeshError::Parse {
                        line: line_no,
                        message: format!("only triangular faces are supported, got {} vertices", verts.len()),
                    });
                }
                triangles.push([
                    parse_index(verts[0], line_no)?,
                    parse_index(verts[1], line_no)?,
                    parse_index(verts[2], line_no)?,
                ]);
            }
            _ => {} // comments, normals, texture coords
        }
    }
    TriMesh::new(positions, triangles)
}

/// Reads an ASCII OFF surface (triangular faces, 0-based indices).
pub fn read_off(path: &Path) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line_no, header) =
        lines.next().ok_or(MeshError::Parse { line: 1, message: "empty file".into() })?;
    if header != "OFF" {
        return Err(MeshError::Parse { line: line_no, message: format!("expected OFF header, got {header:?}") });
    }
    let (line_no, counts) =
        lines.next().ok_or(MeshError::Parse { line: line_no, message: "missing count line".into() })?;
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(MeshError::Parse { line: line_no, message: "count line needs vertex and face counts".into() });
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|e| MeshError::Parse { line: line_no, message: format!("bad vertex count: {e}") })?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|e| MeshError::Parse { line: line_no, message: format!("bad face count: {e}") })?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line_no, line) =
            lines.next().ok_or(MeshError::Parse { line: 0, message: "unexpected end of vertex list".into() })?;
        let coords: Vec<&str> = line.split_whitespace().collect();
        if coords.len() < 3 {
            return Err(MeshError::Parse { line: line_no, message: "vertex needs 3 coordinates".into() });
        }
        positions.push(Vector3::new(
            parse_f64(coords[0], line_no)?,
            parse_f64(coords[1], line_no)?,
            parse_f64(coords[2], line_no)?,
        ));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line_no, line) =
            lines.next().ok_or(MeshError::Parse { line: 0, message: "unexpected end of face list".into() })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.first() != Some(&"3") || tokens.len() < 4 {
            return Err(MeshError::Parse { line: line_no, message: "only triangular faces are supported".into() });
        }
        let mut tri = [0u32; 3];
        for (slot, token) in tri.iter_mut().zip(&tokens[1..4]) {
            *slot = token
                .parse()
                .map_err(|e| MeshError::Parse { line: line_no, message: format!("bad index {token:?}: {e}") })?;
        }
        triangles.push(tri);
    }
    TriMesh::new(positions, triangles)
}

/// Writes the mesh as ASCII OBJ with 17-significant-digit coordinates.
pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in mesh.positions() {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes named per-vertex fields as a JSON sidecar next to an OBJ dump.
pub fn write_sidecar(
    mesh: &TriMesh,
    fields: &[(&str, &VertexField)],
    path: &Path,
) -> Result<(), MeshError> {
    for (name, field) in fields {
        if field.len() != mesh.vertex_count() {
            let _ = name;
            return Err(MeshError::FieldLength { got: field.len(), expected: mesh.vertex_count() });
        }
    }
    let map: BTreeMap<&str, &[f64]> = fields.iter().map(|(n, f)| (*n, f.as_slice())).collect();
    let doc = serde_json::json!({
        "version": 1,
        "vertex_count": mesh.vertex_count(),
        "fields": map,
    });
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::other)?;
    out.flush()?;
    Ok(())
}
