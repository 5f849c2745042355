//! Indexed triangle meshes with OBJ file I/O.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Indexed triangle mesh with optional flat per-face colors.
///
/// Geometry lives in object units. Per-face colors are RGB in `[0, 1]`;
/// untextured rendering uses them directly as flat shading.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub face_colors: Option<Vec<[f64; 3]>>,
}

impl TriMesh {
    /// Builds a mesh and checks its invariants.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        faces: Vec<[u32; 3]>,
        face_colors: Option<Vec<[f64; 3]>>,
    ) -> Result<Self> {
        let mesh = Self { vertices, faces, face_colors };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks index bounds, degeneracy, and color count.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len() as u32;
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references vertex out of range (have {nv} vertices)"
                )));
            }
            if f[0] == f[1] && f[1] == f[2] {
                return Err(Error::InvalidMesh(format!("face {i} is degenerate (three identical indices)")));
            }
        }
        if let Some(colors) = &self.face_colors {
            if colors.len() != self.faces.len() {
                return Err(Error::InvalidMesh(format!(
                    "have {} face colors for {} faces",
                    colors.len(),
                    self.faces.len()
                )));
            }
        }
        for v in &self.vertices {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bbox(&self) -> Result<(Vector3<f64>, Vector3<f64>)> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidMesh("bbox of empty mesh".into()));
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        Ok((lo, hi))
    }

    /// Euclidean length of the bounding-box diagonal.
    pub fn bbox_diagonal(&self) -> Result<f64> {
        let (lo, hi) = self.bbox()?;
        Ok((hi - lo).norm())
    }

    pub fn face_vertices(&self, face: usize) -> [Vector3<f64>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    pub fn face_centroid(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }

    /// Unit face normal; zero vector for zero-area faces.
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len <= f64::EPSILON {
            Vector3::zeros()
        } else {
            n / len
        }
    }

    /// Extracts the sub-mesh of the given faces, keeping only referenced
    /// vertices (in first-use order) and the matching face colors.
    pub fn submesh(&self, face_ids: &[usize]) -> Result<TriMesh> {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut faces = Vec::with_capacity(face_ids.len());
        let mut colors = self.face_colors.as_ref().map(|_| Vec::with_capacity(face_ids.len()));
        for &fi in face_ids {
            if fi >= self.faces.len() {
                return Err(Error::InvalidArgument(format!("submesh face id {fi} out of range")));
            }
            let mut nf = [0u32; 3];
            for (slot, &vi) in nf.iter_mut().zip(self.faces[fi].iter()) {
                let vi = vi as usize;
                if remap[vi] == u32::MAX {
                    remap[vi] = vertices.len() as u32;
                    vertices.push(self.vertices[vi]);
                }
                *slot = remap[vi];
            }
            faces.push(nf);
            if let (Some(out), Some(src)) = (colors.as_mut(), self.face_colors.as_ref()) {
                out.push(src[fi]);
            }
        }
        TriMesh::new(vertices, faces, colors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TriMesh> {
        load_mesh(path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_mesh(self, path)
    }
}

/// Loads a triangle-only ASCII OBJ file.
///
/// Recognizes `v` and `f` lines; `f` entries may use the `i`, `i/j`,
/// `i//k`, or `i/j/k` forms (only the position index is kept). `#fc r g b`
/// comment lines carry optional per-face flat colors in face order; all
/// other comments and directives (`vn`, `vt`, `o`, `g`, `s`, `usemtl`,
/// `mtllib`) are ignored.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut vertices = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut colors: Vec<[f64; 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#fc ") {
            let c = parse_floats::<3>(rest)
                .ok_or_else(|| Error::parse(path, Some(lineno), "malformed #fc color line"))?;
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::parse(path, Some(lineno), "face color outside [0,1]"));
            }
            colors.push(c);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 3 {
                    return Err(Error::parse(path, Some(lineno), "vertex line must have 3 coordinates"));
                }
                let mut v = Vector3::zeros();
                for (k, tok) in rest.iter().enumerate() {
                    v[k] = tok
                        .parse::<f64>()
                        .map_err(|_| Error::parse(path, Some(lineno), format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != 3 {
                    return Err(Error::parse(
                        path,
                        Some(lineno),
                        format!("only triangle faces are supported (got {} vertices)", rest.len()),
                    ));
                }
                let mut f = [0u32; 3];
                for (slot, tok) in f.iter_mut().zip(rest.iter()) {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| Error::parse(path, Some(lineno), format!("bad face index {tok:?}")))?;
                    if idx < 1 || idx as usize > vertices.len() {
                        return Err(Error::parse(
                            path,
                            Some(lineno),
                            format!("face index {idx} out of range (have {} vertices)", vertices.len()),
                        ));
                    }
                    *slot = (idx - 1) as u32;
                }
                faces.push(f);
            }
            // Ignored directives commonly present in exported OBJ files.
            Some("vn") | Some("vt") | Some("o") | Some("g") | Some("s") | Some("usemtl") | Some("mtllib") => {}
            Some(other) => {
                return Err(Error::parse(path, Some(lineno), format!("unsupported directive {other:?}")));
            }
            None => {}
        }
    }

    let face_colors = if colors.is_empty() {
        None
    } else if colors.len() == faces.len() {
        Some(colors)
    } else {
        return Err(Error::parse(
            path,
            None,
            format!("{} #fc color lines for {} faces", colors.len(), faces.len()),
        ));
    };

    TriMesh::new(vertices, faces, face_colors)
}

/// Saves a mesh as ASCII OBJ with 9 fractional digits per coordinate.
///
/// Per-face colors, when present, are emitted as `#fc r g b` comment lines
/// directly after each face; plain OBJ consumers skip them as comments.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    mesh.validate()?;
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {:.9} {:.9} {:.9}\n", v.x, v.y, v.z));
    }
    for (i, f) in mesh.faces.iter().enumerate() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        if let Some(colors) = &mesh.face_colors {
            let c = colors[i];
            out.push_str(&format!("#fc {:.9} {:.9} {:.9}\n", c[0], c[1], c[2]));
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn parse_floats<const N: usize>(s: &str) -> Option<[f64; N]> {
    let mut out = [0.0; N];
    let mut it = s.split_whitespace();
    for slot in &mut out {
        *slot = it.next()?.parse().ok()?;
    }
    if it.next().is_some() {
        return None;
    }
    Some(out)
}

/// Axis-aligned box mesh (12 triangles) between two corners.
///
/// Faces are wound facing outward; used as the building block of the
/// synthetic scenes and in tests.
pub fn box_mesh(lo: Vector3<f64>, hi: Vector3<f64>, face_colors: Option<Vec<[f64; 3]>>) -> Result<TriMesh> {
    let v = vec![
        Vector3::new(lo.x, lo.y, lo.z), // 0
        Vector3::new(hi.x, lo.y, lo.z), // 1
        Vector3::new(hi.x, hi.y, lo.z), // 2
        Vector3::new(lo.x, hi.y, lo.z), // 3
        Vector3::new(lo.x, lo.y, hi.z), // 4
        Vector3::new(hi.x, lo.y, hi.z), // 5
        Vector3::new(hi.x, hi.y, hi.z), // 6
        Vector3::new(lo.x, hi.y, hi.z), // 7
    ];
    let faces = vec![
        // -z
        [0, 2, 1],
        [0, 3, 2],
        // +z
        [4, 5, 6],
        [4, 6, 7],
        // -y
        [0, 1, 5],
        [0, 5, 4],
        // +y
        [3, 7, 6],
        [3, 6, 2],
        // -x
        [0, 4, 7],
        [0, 7, 3],
        // +x
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriMesh::new(v, faces, face_colors)
}

/// Unit cube centered at the origin.
pub fn unit_cube() -> TriMesh {
    box_mesh(Vector3::new(-0.5, -0.5, -0.5), Vector3::new(0.5, 0.5, 0.5), None).expect("static cube")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_obj_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tri.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
        assert_eq!(m.faces[0], [0, 1, 2]);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap();
        assert!(matches!(load_mesh(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_triangle_face_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("quad.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert!(load_mesh(&p).is_err());
    }

    #[test]
    fn roundtrip_preserves_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cube.obj");
        let mut cube = unit_cube();
        cube.face_colors = Some((0..12).map(|i| [i as f64 / 12.0, 0.5, 0.25]).collect());
        save_mesh(&cube, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        assert_eq!(back.faces, cube.faces);
        for (a, b) in back.vertices.iter().zip(cube.vertices.iter()) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-6);
        }
        let (ca, cb) = (back.face_colors.unwrap(), cube.face_colors.unwrap());
        for (a, b) in ca.iter().zip(cb.iter()) {
            for k in 0..3 {
                assert_relative_eq!(a[k], b[k], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn cube_obj_has_8_v_and_12_f_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cube.obj");
        save_mesh(&unit_cube(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 12);
    }

    #[test]
    fn empty_face_mesh_saves_only_v_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("points.obj");
        let m = TriMesh::new(vec![Vector3::new(1.0, 2.0, 3.0)], vec![], None).unwrap();
        save_mesh(&m, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.lines().all(|l| l.starts_with("v ")));
    }

    #[test]
    fn degenerate_face_rejected() {
        let verts = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(TriMesh::new(verts, vec![[1, 1, 1]], None).is_err());
    }

    #[test]
    fn bbox_diagonal_cases() {
        assert_relative_eq!(unit_cube().bbox_diagonal().unwrap(), 3f64.sqrt(), epsilon = 1e-12);
        let single = TriMesh::new(vec![Vector3::new(1.0, 1.0, 1.0)], vec![], None).unwrap();
        assert_eq!(single.bbox_diagonal().unwrap(), 0.0);
        // Pythagoras: (0,0,0)-(3,4,0) has diagonal 5.
        let two = TriMesh::new(vec![Vector3::zeros(), Vector3::new(3.0, 4.0, 0.0)], vec![], None).unwrap();
        assert_relative_eq!(two.bbox_diagonal().unwrap(), 5.0, epsilon = 1e-12);
        let empty = TriMesh { vertices: vec![], faces: vec![], face_colors: None };
        assert!(empty.bbox_diagonal().is_err());
    }

    #[test]
    fn bbox_diagonal_translation_invariant_and_scales() {
        let cube = unit_cube();
        let d0 = cube.bbox_diagonal().unwrap();
        let shifted = TriMesh::new(
            cube.vertices.iter().map(|v| v + Vector3::new(5.0, -2.0, 9.0)).collect(),
            cube.faces.clone(),
            None,
        )
        .unwrap();
        assert_relative_eq!(shifted.bbox_diagonal().unwrap(), d0, epsilon = 1e-12);
        let scaled = TriMesh::new(cube.vertices.iter().map(|v| v * 3.0).collect(), cube.faces.clone(), None).unwrap();
        assert_relative_eq!(scaled.bbox_diagonal().unwrap(), 3.0 * d0, epsilon = 1e-12);
    }

    #[test]
    fn submesh_extracts_referenced_vertices() {
        let cube = unit_cube();
        let sub = cube.submesh(&[0, 1]).unwrap();
        assert_eq!(sub.face_count(), 2);
        assert_eq!(sub.vertex_count(), 4); // the -z quad corners
        sub.validate().unwrap();
    }
}
