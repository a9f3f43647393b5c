//! Wavefront OBJ (text, with normals) and binary little-endian STL.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{GeometryError, Result, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    #[serde(rename = "stl")]
    StlBinary,
}

impl std::str::FromStr for MeshFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "stl" => Ok(MeshFormat::StlBinary),
            other => Err(format!("unknown mesh format `{other}` (expected obj or stl)")),
        }
    }
}

const STL_HEADER: &[u8] = b"ringforge binary STL";

pub fn export_mesh(mesh: &TriMesh, format: MeshFormat) -> Result<Vec<u8>> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    mesh.validate()?;
    Ok(match format {
        MeshFormat::Obj => write_obj(mesh).into_bytes(),
        MeshFormat::StlBinary => write_stl(mesh),
    })
}

fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 64 + mesh.triangles.len() * 32);
    out.push_str("# ringforge mesh\n");
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for n in &mesh.normals {
        let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        let _ = writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    out
}

fn write_stl(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for &tri in &mesh.triangles {
        // Facet normal from the single-precision corners, so that a parsed
        // file re-exports to the same bytes.
        let corners = mesh.corners(tri).map(|p| Vec3::from_f32(p.to_f32()));
        let n = (corners[1] - corners[0])
            .cross(corners[2] - corners[0])
            .try_normalize()
            .unwrap_or(Vec3::ZERO);
        for v in std::iter::once(n).chain(corners) {
            for c in v.to_f32() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn parse_err(format: &'static str, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        format,
        message: message.into(),
    }
}

/// Reads a binary STL. Corners with identical bit patterns are merged into
/// one vertex, in first-seen order; normals are recomputed from faces.
pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh> {
    if bytes.len() < 84 {
        return Err(parse_err("STL", format!("{} bytes is shorter than the header", bytes.len())));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + 50 * count;
    if bytes.len() != expected {
        return Err(parse_err(
            "STL",
            format!("{count} triangles need {expected} bytes, got {}", bytes.len()),
        ));
    }
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let mut mesh = TriMesh::default();
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    for t in 0..count {
        let base = 84 + 50 * t + 12;
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let off = base + 12 * k;
            let p = [f32_at(off), f32_at(off + 4), f32_at(off + 8)];
            let key = p.map(f32::to_bits);
            *slot = *index.entry(key).or_insert_with(|| {
                mesh.vertices.push(Vec3::from_f32(p));
                (mesh.vertices.len() - 1) as u32
            });
        }
        mesh.triangles.push(tri);
    }
    mesh.recompute_normals();
    Ok(mesh)
}

/// Reads the triangle subset of OBJ emitted by [`export_mesh`]: `v`, `vn`
/// and triangular `f` records with `v//vn` or bare `v` references.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    let floats = |line: usize, rest: &[&str]| -> Result<Vec3> {
        if rest.len() < 3 {
            return Err(parse_err("OBJ", format!("line {line}: expected 3 coordinates")));
        }
        let f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err("OBJ", format!("line {line}: {e}")))
        };
        Ok(Vec3::new(f(rest[0])?, f(rest[1])?, f(rest[2])?))
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.first() {
            Some(&"v") => mesh.vertices.push(floats(line, &fields[1..])?),
            Some(&"vn") => mesh.normals.push(floats(line, &fields[1..])?),
            Some(&"f") => {
                if fields.len() != 4 {
                    return Err(parse_err("OBJ", format!("line {line}: only triangles are supported")));
                }
                let mut tri = [0u32; 3];
                for (slot, field) in tri.iter_mut().zip(&fields[1..]) {
                    let v = field.split('/').next().unwrap_or("");
                    let v: u32 = v
                        .parse()
                        .map_err(|e| parse_err("OBJ", format!("line {line}: {e}")))?;
                    if v == 0 {
                        return Err(parse_err("OBJ", format!("line {line}: indices are 1-based")));
                    }
                    *slot = v - 1;
                }
                mesh.triangles.push(tri);
            }
            _ => {}
        }
    }
    if mesh.normals.len() != mesh.vertices.len() {
        mesh.recompute_normals();
    }
    Ok(mesh)
}
