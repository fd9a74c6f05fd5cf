//! Grid topology, neighborhood schemes, and boundary reflection.
//!
//! Agents sit on a fixed `rows x cols` grid, one per cell. Cells are
//! `(row, col)` pairs with row 0 at the top; offsets are `(dx, dy)` with
//! `dx` counting columns to the right and `dy` counting rows downward.

use alloc::vec::Vec;

/// A cell position as `(row, col)`.
pub type Cell = (usize, usize);

/// 16-bit agent identifier, unique within a swarm.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AgentId(pub u16);

impl core::fmt::Display for AgentId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A relative cell offset: `dx` columns rightward, `dy` rows downward.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Offset {
    pub dx: i32,
    pub dy: i32,
}

impl Offset {
    pub const fn new(dx: i32, dy: i32) -> Self {
        Offset { dx, dy }
    }

    /// Manhattan length `|dx| + |dy|`.
    pub fn manhattan(self) -> u32 {
        self.dx.unsigned_abs() + self.dy.unsigned_abs()
    }

    /// The offset with axes swapped, matching a transpose of the grid.
    pub fn transposed(self) -> Self {
        Offset { dx: self.dy, dy: self.dx }
    }

    /// Componentwise sum, for composing relative positions.
    pub fn plus(self, other: Offset) -> Self {
        Offset { dx: self.dx + other.dx, dy: self.dy + other.dy }
    }

    pub fn is_zero(self) -> bool {
        self.dx == 0 && self.dy == 0
    }
}

const fn o(dx: i32, dy: i32) -> Offset {
    Offset::new(dx, dy)
}

/// The four orthogonal neighbor offsets in row-major order.
const N4_OFFSETS: [Offset; 4] = [o(0, -1), o(-1, 0), o(1, 0), o(0, 1)];

/// Orthogonal plus diagonal neighbors, row-major.
const N8_OFFSETS: [Offset; 8] = [
    o(-1, -1),
    o(0, -1),
    o(1, -1),
    o(-1, 0),
    o(1, 0),
    o(-1, 1),
    o(0, 1),
    o(1, 1),
];

/// All twelve offsets with Manhattan length at most 2, row-major.
const VN2_OFFSETS: [Offset; 12] = [
    o(0, -2),
    o(-1, -1),
    o(0, -1),
    o(1, -1),
    o(-2, 0),
    o(-1, 0),
    o(1, 0),
    o(2, 0),
    o(-1, 1),
    o(0, 1),
    o(1, 1),
    o(0, 2),
];

/// Which neighbors a cell talks to or reads from.
///
/// `N4` is used for color exchange, `N8` for consensus, and `Vn2` (the
/// order-2 von Neumann diamond, 12 cells) for pattern formation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Neighborhood {
    N4,
    N8,
    Vn2,
}

impl Neighborhood {
    /// The scheme's offsets in row-major (`dy` then `dx`) order.
    pub fn offsets(self) -> &'static [Offset] {
        match self {
            Neighborhood::N4 => &N4_OFFSETS,
            Neighborhood::N8 => &N8_OFFSETS,
            Neighborhood::Vn2 => &VN2_OFFSETS,
        }
    }
}

/// Errors from grid construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GridError {
    /// Rows and cols must both be at least 3 so reflected offsets resolve.
    TooSmall { rows: usize, cols: usize },
    /// One agent per cell and 16-bit ids cap the grid at 65536 cells.
    TooLarge { rows: usize, cols: usize },
}

impl core::fmt::Display for GridError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GridError::TooSmall { rows, cols } => {
                write!(f, "grid {}x{} too small; need at least 3x3", rows, cols)
            }
            GridError::TooLarge { rows, cols } => {
                write!(f, "grid {}x{} exceeds 65536 cells", rows, cols)
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GridError {}

/// A rectangular agent grid.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct GridTopology {
    rows: usize,
    cols: usize,
}

impl GridTopology {
    pub fn new(rows: usize, cols: usize) -> Result<Self, GridError> {
        if rows < 3 || cols < 3 {
            return Err(GridError::TooSmall { rows, cols });
        }
        if rows * cols > u16::MAX as usize + 1 {
            return Err(GridError::TooLarge { rows, cols });
        }
        Ok(GridTopology { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of cells (and agents).
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat index of a cell.
    pub fn idx(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.0 * self.cols + cell.1
    }

    /// Cell at a row-major flat index.
    pub fn cell(&self, idx: usize) -> Cell {
        debug_assert!(idx < self.len());
        (idx / self.cols, idx % self.cols)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.0 < self.rows && cell.1 < self.cols
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    /// Whether `cell + offset` stays inside the grid.
    pub fn offset_in_grid(&self, cell: Cell, offset: Offset) -> bool {
        let r = cell.0 as i64 + offset.dy as i64;
        let c = cell.1 as i64 + offset.dx as i64;
        r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols
    }
}

/// Resolves `cell + offset`, reflecting at the boundary.
///
/// When the target leaves the grid along an axis, that axis's offset
/// component is negated, so a cell on the top row reads its lower neighbor
/// in place of the missing upper one. The result is always in-grid.
pub fn reflect_offset(grid: &GridTopology, cell: Cell, offset: Offset) -> Cell {
    (
        reflect_axis(cell.0, offset.dy, grid.rows),
        reflect_axis(cell.1, offset.dx, grid.cols),
    )
}

fn reflect_axis(pos: usize, d: i32, len: usize) -> usize {
    let raw = pos as i64 + d as i64;
    let hit = if raw >= 0 && raw < len as i64 {
        raw
    } else {
        // A radius-2 step from the middle of a 3-long axis exits on both
        // sides; clamping to the near edge covers that one case.
        pos as i64 - d as i64
    };
    hit.clamp(0, len as i64 - 1) as usize
}

/// A resolved neighbor: the offset asked for, the in-grid cell serving it,
/// and whether boundary reflection substituted a different cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Neighbor {
    pub offset: Offset,
    pub cell: Cell,
    pub reflected: bool,
}

/// The neighbors of `cell` under `scheme`, in row-major offset order.
///
/// Out-of-grid offsets are reflected, so every entry names a real cell.
pub fn neighbors(grid: &GridTopology, cell: Cell, scheme: Neighborhood) -> Vec<Neighbor> {
    scheme
        .offsets()
        .iter()
        .map(|&offset| Neighbor {
            offset,
            cell: reflect_offset(grid, cell, offset),
            reflected: !grid.offset_in_grid(cell, offset),
        })
        .collect()
}
