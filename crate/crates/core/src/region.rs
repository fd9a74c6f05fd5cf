//! Activator/inhibitor region shapes for the pattern generator.
//!
//! A region names two disjoint sets of relative offsets around a cell. On
//! robots inside the activator push the cell toward `on`; on robots inside
//! the inhibitor push it toward `off`. Different shapes grow different
//! textures: a wide flat activator grows horizontal stripes, a tall one
//! vertical stripes, a compact one spots.

use crate::grid::Offset;
use alloc::vec::Vec;

/// Errors from region construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RegionError {
    /// The activator extents must fit inside the inhibitor extents.
    NotContained,
    /// Inhibitor extents beyond 2 would reach past the 12-cell neighbor
    /// table agents actually exchange.
    TooWide,
}

impl core::fmt::Display for RegionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RegionError::NotContained => write!(f, "activator extents exceed inhibitor extents"),
            RegionError::TooWide => write!(f, "inhibitor extents exceed the radius-2 neighborhood"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RegionError {}

/// Disjoint activator and inhibitor offset sets, both inside the radius-2
/// Manhattan diamond (the 12 exchanged neighbors plus the cell itself).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegionSpec {
    activator: Vec<Offset>,
    inhibitor: Vec<Offset>,
}

impl RegionSpec {
    /// Activator offsets in row-major order; always contains `(0, 0)`.
    pub fn activator(&self) -> &[Offset] {
        &self.activator
    }

    /// Inhibitor offsets in row-major order; disjoint from the activator.
    pub fn inhibitor(&self) -> &[Offset] {
        &self.inhibitor
    }

    /// The region with `dx`/`dy` swapped in every offset.
    pub fn transposed(&self) -> RegionSpec {
        let mut t = RegionSpec {
            activator: self.activator.iter().map(|o| o.transposed()).collect(),
            inhibitor: self.inhibitor.iter().map(|o| o.transposed()).collect(),
        };
        sort_row_major(&mut t.activator);
        sort_row_major(&mut t.inhibitor);
        t
    }
}

fn sort_row_major(offsets: &mut [Offset]) {
    offsets.sort_unstable_by_key(|o| (o.dy, o.dx));
}

/// Builds a region from rectangular extents, clipped to the radius-2
/// diamond.
///
/// The activator is the `|dx| <= a_x, |dy| <= a_y` box clipped to the
/// Manhattan ball of radius `max(a_x, a_y)`, so `rect_region(1, 1, 2, 2)`
/// activates the cell and its four orthogonal neighbors, not the diagonals.
/// The inhibitor is the `i_x` by `i_y` box clipped to the radius-2 diamond,
/// minus the activator.
pub fn rect_region(a_x: u32, a_y: u32, i_x: u32, i_y: u32) -> Result<RegionSpec, RegionError> {
    if a_x > i_x || a_y > i_y {
        return Err(RegionError::NotContained);
    }
    if i_x > 2 || i_y > 2 {
        return Err(RegionError::TooWide);
    }
    let mut activator = Vec::new();
    let mut inhibitor = Vec::new();
    for dy in -2i32..=2 {
        for dx in -2i32..=2 {
            let o = Offset::new(dx, dy);
            if o.manhattan() > 2 {
                continue;
            }
            let in_activator = o.dx.unsigned_abs() <= a_x
                && o.dy.unsigned_abs() <= a_y
                && o.manhattan() <= a_x.max(a_y);
            if in_activator {
                activator.push(o);
            } else if o.dx.unsigned_abs() <= i_x && o.dy.unsigned_abs() <= i_y {
                inhibitor.push(o);
            }
        }
    }
    Ok(RegionSpec { activator, inhibitor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn offsets(pairs: &[(i32, i32)]) -> Vec<Offset> {
        let mut v: Vec<Offset> = pairs.iter().map(|&(dx, dy)| Offset::new(dx, dy)).collect();
        sort_row_major(&mut v);
        v
    }

    #[test]
    fn compact_region_activates_self_and_orthogonals() {
        let r = rect_region(1, 1, 2, 2).unwrap();
        assert_eq!(
            r.activator(),
            offsets(&[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]).as_slice()
        );
        assert_eq!(
            r.inhibitor(),
            offsets(&[
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
                (0, 2),
                (0, -2),
                (2, 0),
                (-2, 0)
            ])
            .as_slice()
        );
    }

    #[test]
    fn flat_region_activates_a_row() {
        let r = rect_region(2, 0, 2, 2).unwrap();
        assert_eq!(
            r.activator(),
            offsets(&[(0, 0), (1, 0), (-1, 0), (2, 0), (-2, 0)]).as_slice()
        );
        assert_eq!(
            r.inhibitor(),
            offsets(&[
                (0, 1),
                (0, -1),
                (0, 2),
                (0, -2),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1)
            ])
            .as_slice()
        );
    }

    #[test]
    fn rejects_activator_outside_inhibitor() {
        assert_eq!(rect_region(2, 2, 1, 1), Err(RegionError::NotContained));
        assert_eq!(rect_region(1, 0, 0, 2), Err(RegionError::NotContained));
    }

    #[test]
    fn rejects_inhibitor_beyond_neighbor_range() {
        assert_eq!(rect_region(1, 1, 3, 2), Err(RegionError::TooWide));
        assert_eq!(rect_region(0, 0, 0, 3), Err(RegionError::TooWide));
    }

    #[test]
    fn transpose_swaps_row_and_column_regions() {
        let flat = rect_region(2, 0, 2, 2).unwrap();
        let tall = rect_region(0, 2, 2, 2).unwrap();
        assert_eq!(flat.transposed(), tall);
        let square = rect_region(1, 1, 2, 2).unwrap();
        assert_eq!(square.transposed(), square);
    }

    #[test]
    fn regions_are_disjoint_and_diamond_bounded() {
        for (ax, ay, ix, iy) in [
            (0, 0, 0, 0),
            (0, 0, 2, 2),
            (1, 1, 2, 2),
            (2, 0, 2, 2),
            (0, 2, 2, 2),
            (1, 0, 2, 1),
            (2, 2, 2, 2),
        ] {
            let r = rect_region(ax, ay, ix, iy).unwrap();
            assert!(r.activator().contains(&Offset::new(0, 0)));
            for o in r.activator() {
                assert!(o.manhattan() <= 2);
                assert!(!r.inhibitor().contains(o));
            }
            for o in r.inhibitor() {
                assert!(o.manhattan() <= 2);
            }
            let mut all = vec![];
            all.extend_from_slice(r.activator());
            all.extend_from_slice(r.inhibitor());
            let n = all.len();
            all.sort_unstable_by_key(|o| (o.dy, o.dx));
            all.dedup();
            assert_eq!(all.len(), n, "activator/inhibitor overlap");
        }
    }

    #[test]
    fn widest_region_fills_the_diamond() {
        let r = rect_region(2, 2, 2, 2).unwrap();
        assert_eq!(r.activator().len(), 13);
        assert!(r.inhibitor().is_empty());
    }
}
