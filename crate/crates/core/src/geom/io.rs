//! ASCII OFF (0-based faces) and OBJ (1-based faces) readers. Polygonal
//! faces are fan-triangulated.

use std::path::Path;

use super::{MeshFamily, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn fan(face: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..face.len() - 1 {
        out.push([face[0], face[k], face[k + 1]]);
    }
}

/// Parses OFF text into vertex positions and triangles.
pub fn read_off(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest_of_header = header
        .strip_prefix("OFF")
        .map(str::trim)
        .ok_or_else(|| parse_err(ln, "missing OFF header"))?;
    let (ln, counts) = if rest_of_header.is_empty() {
        lines.next().ok_or_else(|| parse_err(ln, "missing element counts"))?
    } else {
        (ln, rest_of_header)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(parse_err(ln, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of vertex list"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        positions.push([c[0], c[1], c[2]]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of face list"))?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        let k = *v.first().ok_or_else(|| parse_err(ln, "empty face"))?;
        if k < 3 || v.len() < k + 1 {
            return Err(parse_err(ln, "face needs at least three indices"));
        }
        let face = &v[1..=k];
        if let Some(bad) = face.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        fan(face, &mut triangles);
    }
    Ok((positions, triangles))
}

/// Parses the `v` and `f` records of OBJ text.
pub fn read_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut positions = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok
                    .take(3)
                    .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad coordinate {t:?}"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                positions.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<i64> = tok
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse().map_err(|_| parse_err(ln, format!("bad face index {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(ln, "face needs at least three indices"));
                }
                faces.push((ln, idx));
            }
            _ => {}
        }
    }
    let nv = positions.len() as i64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (ln, idx) in faces {
        let face: Vec<usize> = idx
            .iter()
            .map(|&i| {
                let z = if i < 0 { nv + i } else { i - 1 };
                if (0..nv).contains(&z) {
                    Ok(z as usize)
                } else {
                    Err(parse_err(ln, format!("vertex index {i} out of range")))
                }
            })
            .collect::<Result<_>>()?;
        fan(&face, &mut triangles);
    }
    Ok((positions, triangles))
}

/// Loads an `.off` or `.obj` file as an external-family mesh.
pub fn read_mesh_file(path: &Path, genus: Option<u32>, inj_estimate: Option<f64>) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let (p, t) = match ext.as_deref() {
        Some("off") => read_off(&text)?,
        Some("obj") => read_obj(&text)?,
        _ => return Err(Error::InvalidParameter(format!("unsupported mesh format: {}", path.display()))),
    };
    SurfaceMesh::new(p, t, MeshFamily::External { genus }, inj_estimate)
}
