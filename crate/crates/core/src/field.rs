//! Grayscale images and the per-cell fields derived from them.
//!
//! An [`Image`] holds raw 8-bit pixels. Averaging each block of pixels over
//! an agent grid yields a [`ColorField`] (one real intensity per cell), and
//! thresholding that yields a [`BinaryField`] (one on/off state per cell),
//! which seeds the pattern generator.

use crate::grid::{Cell, GridTopology};
use alloc::vec::Vec;

/// Default binarization threshold: intensities below 127 count as off.
pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 127.0;

/// Errors from image and field construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FieldError {
    /// Image dimensions must be positive.
    EmptyImage,
    /// Pixel buffer length must equal `width * height`.
    PixelCount { expected: usize, found: usize },
    /// Image dimensions must divide evenly into grid blocks.
    NotDivisible {
        width: usize,
        height: usize,
        rows: usize,
        cols: usize,
    },
    /// Value buffer length must equal the cell count.
    ValueCount { expected: usize, found: usize },
}

impl core::fmt::Display for FieldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FieldError::EmptyImage => write!(f, "image dimensions must be positive"),
            FieldError::PixelCount { expected, found } => {
                write!(f, "expected {} pixels, found {}", expected, found)
            }
            FieldError::NotDivisible { width, height, rows, cols } => write!(
                f,
                "image {}x{} does not divide into a {}x{} grid of equal blocks",
                width, height, rows, cols
            ),
            FieldError::ValueCount { expected, found } => {
                write!(f, "expected {} cell values, found {}", expected, found)
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FieldError {}

/// A row-major 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FieldError> {
        if width == 0 || height == 0 {
            return Err(FieldError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(FieldError::PixelCount {
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Image { width, height, pixels })
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Image::new(width, height, pixels).expect("from_fn produces a full pixel buffer")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    /// Row-major pixel data.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// One real-valued intensity per grid cell.
#[derive(Clone, PartialEq, Debug)]
pub struct ColorField {
    grid: GridTopology,
    values: Vec<f64>,
}

impl ColorField {
    pub fn from_values(grid: GridTopology, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::ValueCount {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ColorField { grid, values })
    }

    /// Builds a field by evaluating `f(cell)` for every cell.
    pub fn from_fn(grid: GridTopology, mut f: impl FnMut(Cell) -> f64) -> Self {
        let values = grid.cells().map(&mut f).collect();
        ColorField { grid, values }
    }

    pub fn grid(&self) -> &GridTopology {
        &self.grid
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[self.grid.idx(cell)]
    }

    /// Row-major cell values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The field with rows and columns swapped.
    pub fn transposed(&self) -> ColorField {
        let grid = GridTopology::new(self.grid.cols(), self.grid.rows())
            .expect("transposing keeps both dimensions at least 3");
        ColorField::from_fn(grid, |(r, c)| self.get((c, r)))
    }
}

/// One on/off state per grid cell.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryField {
    grid: GridTopology,
    states: Vec<bool>,
}

impl BinaryField {
    pub fn from_states(grid: GridTopology, states: Vec<bool>) -> Result<Self, FieldError> {
        if states.len() != grid.len() {
            return Err(FieldError::ValueCount {
                expected: grid.len(),
                found: states.len(),
            });
        }
        Ok(BinaryField { grid, states })
    }

    /// Builds a field by evaluating `f(cell)` for every cell.
    pub fn from_fn(grid: GridTopology, mut f: impl FnMut(Cell) -> bool) -> Self {
        let states = grid.cells().map(&mut f).collect();
        BinaryField { grid, states }
    }

    pub fn grid(&self) -> &GridTopology {
        &self.grid
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.states[self.grid.idx(cell)]
    }

    /// Row-major cell states.
    pub fn states(&self) -> &[bool] {
        &self.states
    }

    /// Number of cells that are on.
    pub fn on_count(&self) -> usize {
        self.states.iter().filter(|&&s| s).count()
    }

    /// The field with rows and columns swapped.
    pub fn transposed(&self) -> BinaryField {
        let grid = GridTopology::new(self.grid.cols(), self.grid.rows())
            .expect("transposing keeps both dimensions at least 3");
        BinaryField::from_fn(grid, |(r, c)| self.get((c, r)))
    }
}

/// Averages equal pixel blocks of `image` onto the agent grid.
///
/// The image must divide evenly: a 128x128 image on an 8x8 grid averages
/// 16x16 blocks. Block means are exact (integer sums divided once).
pub fn block_downsample(image: &Image, grid: GridTopology) -> Result<ColorField, FieldError> {
    if !image.width.is_multiple_of(grid.cols()) || !image.height.is_multiple_of(grid.rows()) {
        return Err(FieldError::NotDivisible {
            width: image.width,
            height: image.height,
            rows: grid.rows(),
            cols: grid.cols(),
        });
    }
    let bw = image.width / grid.cols();
    let bh = image.height / grid.rows();
    let count = (bw * bh) as f64;
    Ok(ColorField::from_fn(grid, |(r, c)| {
        let mut sum: u64 = 0;
        for py in r * bh..(r + 1) * bh {
            for px in c * bw..(c + 1) * bw {
                sum += image.pixel(py, px) as u64;
            }
        }
        sum as f64 / count
    }))
}

/// Thresholds a color field: a cell is on iff its value is at least
/// `threshold`, so values below 127 map to off under the default.
pub fn binarize(field: &ColorField, threshold: f64) -> BinaryField {
    BinaryField::from_fn(*field.grid(), |cell| field.get(cell) >= threshold)
}
