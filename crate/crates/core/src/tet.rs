//! Freudenthal (Kuhn) decomposition of hexahedral cells into six tetrahedra.
//!
//! Every tetrahedron runs along the cell's main diagonal from corner 0 to
//! corner 7, so the face diagonals chosen by neighbouring cells agree.
//! Corner `c` of cell `(i, j, k)` is vertex `(i + c&1, j + (c>>1)&1, k + (c>>2)&1)`.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::num::Real;

pub const FREUDENTHAL_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Flat vertex indices of the 8 corners of a cell.
#[inline]
pub fn cell_corners<T: Real>(spec: &GridSpec<T>, cell: [usize; 3]) -> [usize; 8] {
    let [i, j, k] = cell;
    let sx = 1;
    let sy = spec.dims[0];
    let sz = spec.dims[0] * spec.dims[1];
    let base = spec.index(i, j, k);
    [
        base,
        base + sx,
        base + sy,
        base + sx + sy,
        base + sz,
        base + sx + sz,
        base + sy + sz,
        base + sx + sy + sz,
    ]
}

/// The six tetrahedra of a cell as flat vertex index quadruples.
pub fn tet_decompose<T: Real>(spec: &GridSpec<T>, cell: [usize; 3]) -> Result<[[usize; 4]; 6]> {
    let c = spec.cell_dims();
    if (0..3).any(|a| cell[a] >= c[a]) {
        return Err(Error::InvalidInput(format!("cell {cell:?} outside cell range {c:?}")));
    }
    let corners = cell_corners(spec, cell);
    Ok(FREUDENTHAL_TETS.map(|t| t.map(|v| corners[v])))
}

/// Volume of every tetrahedron of the grid (all are equal).
pub fn tet_volume<T: Real>(spec: &GridSpec<T>) -> T {
    spec.cell_volume() / T::lit(6.0)
}

/// Unsigned volume of a tetrahedron from its vertex positions.
pub fn tet_volume_of<T: Real>(p: [[T; 3]; 4]) -> T {
    let d = |a: usize| [p[a][0] - p[0][0], p[a][1] - p[0][1], p[a][2] - p[0][2]];
    let (u, v, w) = (d(1), d(2), d(3));
    let det =
        u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) + u[2] * (v[0] * w[1] - v[1] * w[0]);
    det.abs() / T::lit(6.0)
}
