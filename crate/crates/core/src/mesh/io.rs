//! OFF and OBJ readers and the OFF writer.
//!
//! OFF is the canonical interchange format: ASCII, `OFF` header, a
//! `V F E` count line, `V` coordinate lines, then `F` lines of the form
//! `3 i j k`. OBJ is accepted for ingestion only; `v` and `f` records are
//! read (1-based indices, `i/j/k` attribute suffixes ignored) and anything
//! else is skipped.

use super::{MeshError, TriangleMesh};
use nalgebra::Point3;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("off") => Some(MeshFormat::Off),
            Some("obj") => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

/// Load a mesh, inferring the format from the file extension unless one is
/// given explicitly.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("cannot infer mesh format from path {}", path.display()),
        })?;
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    match format {
        MeshFormat::Off => parse_off(&text, name),
        MeshFormat::Obj => parse_obj(&text, name),
    }
}

pub fn load_off(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    load_mesh(path, Some(MeshFormat::Off))
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    load_mesh(path, Some(MeshFormat::Obj))
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_off(text: &str, name: String) -> Result<TriangleMesh, MeshError> {
    // (line number, content) with comments and blanks stripped
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    if header != "OFF" {
        return Err(parse_err(hline, format!("expected OFF header, found {header:?}")));
    }
    let (cline, counts) = lines
        .next()
        .ok_or_else(|| parse_err(hline, "missing count line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(cline, "bad count line")))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "count line needs at least V and F"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    if nv == 0 {
        return Err(MeshError::Empty);
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex list"))?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, "bad vertex coordinate")))
            .collect::<Result<_, _>>()?;
        if coords.len() < 3 {
            return Err(parse_err(ln, "vertex line needs 3 coordinates"));
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }

    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face list"))?;
        let toks: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, "bad face index")))
            .collect::<Result<_, _>>()?;
        if toks.is_empty() {
            return Err(parse_err(ln, "empty face line"));
        }
        if toks[0] != 3 {
            return Err(parse_err(
                ln,
                format!("non-triangular face with {} vertices", toks[0]),
            ));
        }
        if toks.len() != 4 {
            return Err(parse_err(ln, "face line needs exactly 3 indices"));
        }
        for &ix in &toks[1..4] {
            if ix >= nv {
                return Err(parse_err(
                    ln,
                    format!("face {fi} references vertex {ix} of {nv}"),
                ));
            }
        }
        faces.push([toks[1], toks[2], toks[3]]);
    }

    TriangleMesh::new(name, vertices, faces)
}

pub(crate) fn parse_obj(text: &str, name: String) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse().map_err(|_| parse_err(ln, "bad vertex coordinate")))
                    .collect::<Result<_, _>>()?;
                if coords.len() < 3 {
                    return Err(parse_err(ln, "vertex line needs 3 coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let v: i64 = first
                            .parse()
                            .map_err(|_| parse_err(ln, "bad face index"))?;
                        if v < 1 {
                            return Err(parse_err(ln, "face indices must be positive (1-based)"));
                        }
                        Ok(v as usize - 1)
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(
                        ln,
                        format!("non-triangular face with {} vertices", idx.len()),
                    ));
                }
                for &ix in &idx {
                    if ix >= vertices.len() {
                        return Err(parse_err(
                            ln,
                            format!("face references vertex {} of {}", ix + 1, vertices.len()),
                        ));
                    }
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {} // normals, texcoords, groups, materials: ignored
        }
    }
    if vertices.is_empty() {
        return Err(MeshError::Empty);
    }
    TriangleMesh::new(name, vertices, faces)
}

/// Write a mesh as ASCII OFF. Coordinates use shortest round-trip float
/// formatting, so save/load is exact.
pub fn save_off(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OFF: &str = "OFF\n8 12 0\n\
        0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n\
        3 0 2 1\n3 0 3 2\n3 4 5 6\n3 4 6 7\n3 0 1 5\n3 0 5 4\n\
        3 1 2 6\n3 1 6 5\n3 2 3 7\n3 2 7 6\n3 3 0 4\n3 3 4 7\n";

    #[test]
    fn parses_cube_off() {
        let m = parse_off(CUBE_OFF, "cube".into()).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.face_count(), 12);
        assert!(m.is_closed());
        assert!((m.surface_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn off_bad_index_names_face() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n";
        match parse_off(text, "m".into()) {
            Err(MeshError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains('9'), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn obj_quad_face_is_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        match parse_obj(text, "m".into()) {
            Err(MeshError::Parse { message, .. }) => {
                assert!(message.contains("non-triangular"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn obj_reads_slashed_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n";
        let m = parse_obj(text, "m".into()).unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn off_roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.off");
        let m = parse_off(CUBE_OFF, "cube".into()).unwrap();
        save_off(&m, &path).unwrap();
        let back = load_off(&path).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count());
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.content_hash(), m.content_hash());
    }

    #[test]
    fn empty_mesh_is_an_error() {
        assert!(matches!(
            parse_obj("# nothing\n", "m".into()),
            Err(MeshError::Empty)
        ));
    }
}
