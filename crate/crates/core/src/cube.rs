//! Gaussian cube file reading and writing.
//!
//! Layout: two comment lines; `natoms ox oy oz [nval]`; three axis records
//! `n vx vy vz`; `|natoms|` atom records `Z charge x y z`; when `natoms < 0`
//! a record listing orbital ids; then the volumetric block with the last
//! axis varying fastest. Values are remapped to the crate's x-fastest order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::atoms::{atomic_number, default_weight, element_symbol, Atom, AtomList};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarGrid};
use crate::num::Real;

/// Parsed contents of a cube file.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFile<T> {
    pub comments: [String; 2],
    pub grid: ScalarGrid<T>,
    pub atoms: AtomList<T>,
    /// Coordinates in Bohr (positive axis counts) rather than Angstrom.
    pub bohr_units: bool,
}

/// Reads a cube file and returns its grid and atoms. Atom ids are 1-based
/// positions in the file; weights default to squared covalent radii in the
/// file's length unit.
pub fn load_cube<T: Real>(path: impl AsRef<Path>) -> Result<(ScalarGrid<T>, AtomList<T>)> {
    let cube = read_cube(path)?;
    Ok((cube.grid, cube.atoms))
}

pub fn read_cube<T: Real>(path: impl AsRef<Path>) -> Result<CubeFile<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cube(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => Ok((n + 1, l)),
            None => Err(Error::Parse {
                path: self.path.to_path_buf(),
                line: 0,
                msg: format!("unexpected end of file while reading {what}"),
            }),
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn numbers(path: &Path, line: usize, text: &str, min: usize, what: &str) -> Result<Vec<f64>> {
    let vals = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("bad number {t:?} in {what}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() < min {
        return Err(parse_err(
            path,
            line,
            format!("{what}: expected at least {min} fields, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

fn as_count(path: &Path, line: usize, v: f64, what: &str) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(parse_err(path, line, format!("{what} must be an integer, got {v}")));
    }
    Ok(v as i64)
}

/// Parses cube text. `path` is used only for error messages.
pub fn parse_cube<T: Real>(text: &str, path: &Path) -> Result<CubeFile<T>> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
    };
    let (_, c1) = lines.next_line("comment line 1")?;
    let (_, c2) = lines.next_line("comment line 2")?;

    let (ln, header) = lines.next_line("atom count and origin")?;
    let h = numbers(path, ln, header, 4, "atom count and origin")?;
    let natoms = as_count(path, ln, h[0], "atom count")?;
    if let Some(&nval) = h.get(4) {
        if as_count(path, ln, nval, "values per voxel")? != 1 {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                msg: format!("{nval} values per voxel (only 1 supported)"),
            });
        }
    }
    let origin = [h[1], h[2], h[3]];

    let mut dims = [0usize; 3];
    let mut spacing = [0.0f64; 3];
    let mut bohr_units = true;
    for axis in 0..3 {
        let (ln, rec) = lines.next_line("axis record")?;
        let v = numbers(path, ln, rec, 4, "axis record")?;
        let n = as_count(path, ln, v[0], "axis vertex count")?;
        if n == 0 {
            return Err(parse_err(path, ln, "axis vertex count is zero"));
        }
        if axis == 0 {
            bohr_units = n > 0;
        }
        dims[axis] = n.unsigned_abs() as usize;
        for other in 0..3 {
            if other != axis && v[1 + other] != 0.0 {
                return Err(Error::UnsupportedFormat {
                    path: path.to_path_buf(),
                    msg: format!("non-orthogonal axis {axis} at line {ln}"),
                });
            }
        }
        spacing[axis] = v[1 + axis];
        if !(spacing[axis] > 0.0) {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                msg: format!("non-positive step along axis {axis} at line {ln}"),
            });
        }
    }

    let mut atoms = Vec::with_capacity(natoms.unsigned_abs() as usize);
    for idx in 0..natoms.unsigned_abs() as usize {
        let (ln, rec) = lines.next_line("atom record")?;
        let v = numbers(path, ln, rec, 5, "atom record")?;
        let z = as_count(path, ln, v[0], "atomic number")?;
        let element = u32::try_from(z)
            .ok()
            .and_then(element_symbol)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("Z{z}"));
        let weight = default_weight(&element, bohr_units);
        atoms.push(Atom {
            id: idx as i32 + 1,
            element,
            center: [T::lit(v[2]), T::lit(v[3]), T::lit(v[4])],
            weight: T::lit(weight),
        });
    }

    // Remaining tokens: optional orbital id record, then the volumetric block.
    let mut tokens = lines
        .inner
        .by_ref()
        .flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)));
    if natoms < 0 {
        let (ln, t) = tokens
            .next()
            .ok_or_else(|| parse_err(path, 0, "missing orbital id record"))?;
        let m = t
            .parse::<usize>()
            .map_err(|_| parse_err(path, ln, format!("bad orbital count {t:?}")))?;
        for _ in 0..m {
            tokens
                .next()
                .ok_or_else(|| parse_err(path, ln, "orbital id record truncated"))?;
        }
    }

    let [nx, ny, nz] = dims;
    let expected = nx * ny * nz;
    let mut values = vec![T::zero(); expected];
    let mut found = 0usize;
    for (ln, t) in tokens {
        if found == expected {
            return Err(parse_err(path, ln, "trailing data after volumetric block"));
        }
        let v = t
            .parse::<f64>()
            .map_err(|_| parse_err(path, ln, format!("bad value {t:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(path, ln, format!("non-finite value {t:?}")));
        }
        // file order: z fastest, then y, then x
        let k = found % nz;
        let j = (found / nz) % ny;
        let i = found / (nz * ny);
        values[i + nx * (j + ny * k)] = T::lit(v);
        found += 1;
    }
    if found < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }

    let spec = GridSpec::new(dims, origin.map(T::lit), spacing.map(T::lit))?;
    Ok(CubeFile {
        comments: [c1.to_owned(), c2.to_owned()],
        grid: ScalarGrid::new(spec, values)?,
        atoms: AtomList::new(atoms)?,
        bohr_units,
    })
}

/// Formats a cube file. Values use shortest round-trip notation so reading
/// the output back reproduces every finite value bit-exactly.
pub fn format_cube<T: Real>(cube: &CubeFile<T>) -> String {
    let spec = cube.grid.spec();
    let mut out = String::new();
    let sanitize = |s: &str| s.replace(['\n', '\r'], " ");
    let _ = writeln!(out, "{}", sanitize(&cube.comments[0]));
    let _ = writeln!(out, "{}", sanitize(&cube.comments[1]));
    let _ = writeln!(
        out,
        "{:5} {:e} {:e} {:e}",
        cube.atoms.len(),
        spec.origin[0].as_f64(),
        spec.origin[1].as_f64(),
        spec.origin[2].as_f64()
    );
    for axis in 0..3 {
        let n = spec.dims[axis] as i64;
        let n = if cube.bohr_units { n } else { -n };
        let mut step = [0.0f64; 3];
        step[axis] = spec.spacing[axis].as_f64();
        let _ = writeln!(out, "{:5} {:e} {:e} {:e}", n, step[0], step[1], step[2]);
    }
    for a in cube.atoms.atoms() {
        let z = atomic_number(&a.element).unwrap_or(0);
        let _ = writeln!(
            out,
            "{:5} {:e} {:e} {:e} {:e}",
            z,
            z as f64,
            a.center[0].as_f64(),
            a.center[1].as_f64(),
            a.center[2].as_f64()
        );
    }
    let [nx, ny, nz] = spec.dims;
    let vals = cube.grid.values();
    for i in 0..nx {
        for j in 0..ny {
            for (col, k) in (0..nz).enumerate() {
                let v = vals[i + nx * (j + ny * k)].as_f64();
                let sep = if col % 6 == 5 || k + 1 == nz { "\n" } else { " " };
                let _ = write!(out, "{v:e}{sep}");
            }
        }
    }
    out
}

pub fn write_cube<T: Real>(path: impl AsRef<Path>, cube: &CubeFile<T>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_cube(cube)).map_err(|e| Error::io(PathBuf::from(path), e))
}
