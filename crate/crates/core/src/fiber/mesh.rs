use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Triangles in world space; every vertex carries its interpolated
/// bivariate value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh<T> {
    pub positions: Vec<[T; 3]>,
    pub values: Vec<[T; 2]>,
    pub triangles: Vec<[u32; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Json,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "json" => Ok(MeshFormat::Json),
            _ => Err(Error::InvalidInput(format!("unknown mesh format {s:?}"))),
        }
    }
}

impl<T: Real> TriangleMesh<T> {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.positions.len() {
            return Err(Error::InvalidInput(format!(
                "mesh has {} positions but {} values",
                self.positions.len(),
                self.values.len()
            )));
        }
        let n = self.positions.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} indexes past {n} vertices")));
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|i| self.positions[i as usize]);
        triangle_area(a, b, c)
    }

    /// Positions and 1-based faces.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for p in &self.positions {
            let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mesh: Self = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("mesh JSON: {e}")))?;
        mesh.validate()?;
        Ok(mesh)
    }
}

pub(crate) fn triangle_area<T: Real>(a: [T; 3], b: [T; 3], c: [T; 3]) -> T {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() * T::lit(0.5)
}

pub fn export_mesh<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MeshFormat::Obj => mesh.to_obj(),
        MeshFormat::Json => mesh.to_json(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_mesh_json<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TriangleMesh::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle() -> TriangleMesh<f64> {
        TriangleMesh {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.1, 0.7, 1.0 / 3.0]],
            values: vec![[0.1, 0.2], [0.3, 0.4], [0.5, 1e-300]],
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn empty_mesh_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = TriangleMesh::<f64>::default();
        export_mesh(&m, dir.path().join("e.obj"), MeshFormat::Obj).unwrap();
        export_mesh(&m, dir.path().join("e.json"), MeshFormat::Json).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("e.obj")).unwrap(), "");
        assert_eq!(read_mesh_json::<f64>(dir.path().join("e.json")).unwrap(), m);
    }

    #[test]
    fn obj_is_one_based() {
        let obj = one_triangle().to_obj();
        let lines: Vec<_> = obj.lines().collect();
        assert_eq!(lines.iter().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(lines[3], "f 1 2 3");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = one_triangle();
        let p = dir.path().join("m.json");
        export_mesh(&m, &p, MeshFormat::Json).unwrap();
        let back = read_mesh_json::<f64>(&p).unwrap();
        let bits = |m: &TriangleMesh<f64>| m.positions.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(back, m);
    }

    #[test]
    fn io_errors_carry_path() {
        let err = export_mesh(&one_triangle(), "/nonexistent-dir/x.obj", MeshFormat::Obj).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.obj"));
        assert!(TriangleMesh::<f64>::from_json(r#"{"positions":[],"values":[],"triangles":[[0,1,2]]}"#).is_err());
    }
}
