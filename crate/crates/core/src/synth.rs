//! Synthetic test images: stripes and checkerboards.
//!
//! These generate the canonical inputs used throughout the test suite and
//! by the `synth` CLI command. Band and square sizes default to 16 pixels so
//! a 128x128 image downsamples to one band per cell row on an 8x8 grid.

use crate::field::Image;

/// Default band/square thickness in pixels.
pub const DEFAULT_BAND_PX: usize = 16;

/// Horizontal stripes: pixel rows alternate white/black in `band`-pixel
/// bands, starting white.
pub fn horizontal_stripes(width: usize, height: usize, band: usize) -> Image {
    assert!(band > 0, "band thickness must be positive");
    Image::from_fn(width, height, |row, _| {
        if (row / band).is_multiple_of(2) {
            255
        } else {
            0
        }
    })
}

/// Vertical stripes: pixel columns alternate white/black in `band`-pixel
/// bands, starting white.
pub fn vertical_stripes(width: usize, height: usize, band: usize) -> Image {
    assert!(band > 0, "band thickness must be positive");
    Image::from_fn(width, height, |_, col| {
        if (col / band).is_multiple_of(2) {
            255
        } else {
            0
        }
    })
}

/// Checkerboard of `square`-pixel squares, white in the top-left corner.
pub fn checkerboard(width: usize, height: usize, square: usize) -> Image {
    assert!(square > 0, "square size must be positive");
    Image::from_fn(width, height, |row, col| {
        if (row / square + col / square).is_multiple_of(2) {
            255
        } else {
            0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{binarize, block_downsample, DEFAULT_BINARIZE_THRESHOLD};
    use crate::grid::GridTopology;

    #[test]
    fn stripes_alternate_by_band() {
        let img = horizontal_stripes(128, 128, 16);
        assert_eq!(img.pixel(0, 40), 255);
        assert_eq!(img.pixel(15, 40), 255);
        assert_eq!(img.pixel(16, 40), 0);
        assert_eq!(img.pixel(127, 40), 0);
    }

    #[test]
    fn vertical_is_the_transpose_of_horizontal() {
        let h = horizontal_stripes(96, 128, 16);
        let v = vertical_stripes(128, 96, 16);
        for row in 0..128 {
            for col in 0..96 {
                assert_eq!(h.pixel(row, col), v.pixel(col, row));
            }
        }
    }

    #[test]
    fn downsampled_stripes_alternate_by_cell_row() {
        let grid = GridTopology::new(8, 8).unwrap();
        let field = block_downsample(&horizontal_stripes(128, 128, 16), grid).unwrap();
        let bin = binarize(&field, DEFAULT_BINARIZE_THRESHOLD);
        for (r, c) in grid.cells() {
            assert_eq!(field.get((r, c)), if r % 2 == 0 { 255.0 } else { 0.0 });
            assert_eq!(bin.get((r, c)), r % 2 == 0);
        }
    }

    #[test]
    fn downsampled_checkerboard_alternates_by_cell_parity() {
        let grid = GridTopology::new(8, 8).unwrap();
        let field = block_downsample(&checkerboard(128, 128, 16), grid).unwrap();
        for (r, c) in grid.cells() {
            assert_eq!(field.get((r, c)), if (r + c) % 2 == 0 { 255.0 } else { 0.0 });
        }
    }
}
