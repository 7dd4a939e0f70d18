//! OBJ and OFF text formats (triangles only).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use super::Mesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => read_obj(&text),
        MeshFormat::Off => read_off(&text),
    }
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    load_mesh(path, MeshFormat::Obj)
}

pub fn load_off(path: impl AsRef<Path>) -> Result<Mesh> {
    load_mesh(path, MeshFormat::Off)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::Off => write_off(mesh),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad number {tok:?}")))
}

/// Parses Wavefront OBJ `v` and `f` records. Face indices are 1-based
/// (negative indices count back from the last vertex); `v/vt/vn` corner
/// syntax is accepted and only the position index used.
pub fn read_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let corners: Vec<&str> = toks.collect();
                if corners.len() != 3 {
                    return Err(parse_err(
                        line,
                        format!(
                            "only triangles are supported, face has {} corners",
                            corners.len()
                        ),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, corner) in face.iter_mut().zip(&corners) {
                    let idx_tok = corner.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad face index {corner:?}")))?;
                    let n = vertices.len() as i64;
                    let zero_based = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => n + i,
                        _ => return Err(parse_err(line, "face index 0 is invalid in OBJ")),
                    };
                    if zero_based < 0 || zero_based >= n {
                        return Err(parse_err(
                            line,
                            format!("face index {idx} out of range ({n} vertices defined so far)"),
                        ));
                    }
                    *slot = zero_based as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

/// Parses an OFF file: `OFF` header, `nv nf ne` counts, vertices, then
/// `3 a b c` faces with 0-based indices.
pub fn read_off(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if !header.starts_with("OFF") {
        return Err(parse_err(line, "missing OFF header"));
    }
    // Counts may follow the keyword on the header line.
    let rest = header[3..].trim();
    let (count_line, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(line, "missing counts line"))?
    } else {
        (line, rest)
    };
    let mut ct = counts.split_whitespace();
    let parse_count = |t: Option<&str>| -> Result<usize> {
        t.and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(count_line, "bad vertex/face counts"))
    };
    let nv = parse_count(ct.next())?;
    let nf = parse_count(ct.next())?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(count_line, format!("expected {nv} vertices")))?;
        let mut t = l.split_whitespace();
        let x = parse_f64(t.next(), line)?;
        let y = parse_f64(t.next(), line)?;
        let z = parse_f64(t.next(), line)?;
        vertices.push(Point3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(count_line, format!("expected {nf} faces")))?;
        let vals: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(line, "bad face record"))?;
        match vals.as_slice() {
            [3, a, b, c, ..] => {
                for &i in &[*a, *b, *c] {
                    if i >= nv {
                        return Err(parse_err(
                            line,
                            format!("face index {i} out of range ({nv} vertices)"),
                        ));
                    }
                }
                faces.push([*a, *b, *c]);
            }
            [k, ..] if *k != 3 => {
                return Err(parse_err(
                    line,
                    format!("only triangles are supported, face has {k} corners"),
                ))
            }
            _ => return Err(parse_err(line, "bad face record")),
        }
    }
    Mesh::new(vertices, faces)
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(32 * (mesh.vertex_count() + mesh.face_count()));
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_off(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(32 * (mesh.vertex_count() + mesh.face_count()));
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET_OFF: &str = "OFF\n# tetrahedron\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

    #[test]
    fn off_tetrahedron() {
        let m = read_off(TET_OFF).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.face_count(), 4);
    }

    #[test]
    fn off_counts_on_header_line() {
        let m = read_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_is_one_based() {
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn errors_name_the_line() {
        match read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 9\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        match read_obj("v 0 0 0\nv 1 zero 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match read_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").is_err());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let m =
            crate::mesh::add_gaussian_noise(&crate::mesh::shapes::icosphere(2), 0.1, 3).unwrap();
        assert_eq!(read_obj(&write_obj(&m)).unwrap(), m);
        assert_eq!(read_off(&write_off(&m)).unwrap(), m);
    }
}
