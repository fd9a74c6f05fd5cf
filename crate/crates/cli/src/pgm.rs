//! PGM (portable graymap) reading and writing.
//!
//! Reads both the ASCII (`P2`) and binary (`P5`) variants with
//! single-byte samples, tolerating `#` comments between header tokens.
//! Always writes `P5`. Parsing is strict about structure but lenient
//! about bytes trailing the pixel data.

use camo_core::{BinaryField, ColorField, Image};

/// Parse failures, each distinct enough to act on.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PgmError {
    /// The first token is not P2 or P5.
    BadMagic,
    /// Structurally broken header or sample data.
    Malformed(&'static str),
    /// Only single-byte samples are supported.
    MaxvalTooLarge(u32),
    /// Fewer samples than the header promises.
    Truncated { expected: usize, found: usize },
}

impl std::fmt::Display for PgmError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PgmError::BadMagic => write!(f, "not a PGM file (magic must be P2 or P5)"),
            PgmError::Malformed(what) => write!(f, "malformed PGM: {}", what),
            PgmError::MaxvalTooLarge(v) => write!(f, "PGM maxval {} exceeds 255", v),
            PgmError::Truncated { expected, found } => write!(
                f,
                "PGM pixel data truncated: expected {} samples, found {}",
                expected, found
            ),
        }
    }
}

impl std::error::Error for PgmError {}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Scanner { bytes, pos: 0 }
    }

    /// Skips whitespace and `#`-to-end-of-line comments.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<Option<u32>, PgmError> {
        let token = match self.token() {
            Some(t) => t,
            None => return Ok(None),
        };
        let mut value: u32 = 0;
        for &b in token {
            if !b.is_ascii_digit() {
                return Err(PgmError::Malformed("expected an unsigned integer"));
            }
            value = value
                .saturating_mul(10)
                .saturating_add((b - b'0') as u32);
        }
        Ok(Some(value))
    }

    fn required_number(&mut self, what: &'static str) -> Result<u32, PgmError> {
        self.number()?.ok_or(PgmError::Malformed(what))
    }
}

/// Parses a P2 or P5 PGM with maxval ≤ 255 into an image. Sample values
/// are taken as stored, without rescaling to the maxval.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let mut scan = Scanner::new(bytes);
    let magic = scan.token().ok_or(PgmError::BadMagic)?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(PgmError::BadMagic),
    };
    let width = scan.required_number("missing width")? as usize;
    let height = scan.required_number("missing height")? as usize;
    if width == 0 || height == 0 {
        return Err(PgmError::Malformed("image dimensions must be positive"));
    }
    let maxval = scan.required_number("missing maxval")?;
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval));
    }
    if maxval == 0 {
        return Err(PgmError::Malformed("maxval must be positive"));
    }
    let expected = width * height;
    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the data.
        match bytes.get(scan.pos) {
            Some(b) if b.is_ascii_whitespace() => scan.pos += 1,
            _ => return Err(PgmError::Malformed("missing separator before pixel data")),
        }
        let data = &bytes[scan.pos.min(bytes.len())..];
        if data.len() < expected {
            return Err(PgmError::Truncated { expected, found: data.len() });
        }
        data[..expected].to_vec()
    } else {
        let mut samples = Vec::with_capacity(expected);
        while samples.len() < expected {
            match scan.number()? {
                Some(v) if v <= 255 => samples.push(v as u8),
                Some(_) => return Err(PgmError::Malformed("sample exceeds 255")),
                None => {
                    return Err(PgmError::Truncated { expected, found: samples.len() })
                }
            }
        }
        samples
    };
    Image::new(width, height, pixels)
        .map_err(|_| PgmError::Malformed("inconsistent pixel buffer"))
}

/// Serializes an image as binary (P5) PGM with maxval 255.
pub fn write_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

/// A binary field as a 0/255 image at one pixel per cell.
pub fn image_from_binary(field: &BinaryField) -> Image {
    let grid = field.grid();
    Image::from_fn(grid.cols(), grid.rows(), |row, col| {
        if field.get((row, col)) {
            255
        } else {
            0
        }
    })
}

/// A color field as an image at one pixel per cell, rounding half away
/// from zero and clamping to 0–255.
pub fn image_from_colors(field: &ColorField) -> Image {
    let grid = field.grid();
    Image::from_fn(grid.cols(), grid.rows(), |row, col| {
        field.get((row, col)).round().clamp(0.0, 255.0) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use camo_core::GridTopology;

    #[test]
    fn minimal_ascii_file_parses() {
        let image = parse_pgm(b"P2 2 2 255\n0 255 255 0").unwrap();
        assert_eq!((image.width(), image.height()), (2, 2));
        assert_eq!(image.pixels(), &[0, 255, 255, 0]);
    }

    #[test]
    fn comments_between_header_tokens_are_skipped() {
        let text = b"P2 # a comment\n# another\n2 2 # inline\n255\n1 2 3 4";
        assert_eq!(parse_pgm(text).unwrap().pixels(), &[1, 2, 3, 4]);
    }

    #[test]
    fn binary_files_round_trip() {
        let image = Image::from_fn(128, 128, |r, c| ((r * 7 + c * 13) % 256) as u8);
        let same = parse_pgm(&write_pgm(&image)).unwrap();
        assert_eq!(same, image);
    }

    #[test]
    fn ascii_and_binary_agree() {
        let mut text = String::from("P2\n3 2\n255\n");
        for v in [0, 10, 20, 30, 40, 50] {
            text.push_str(&format!("{} ", v));
        }
        let from_ascii = parse_pgm(text.as_bytes()).unwrap();
        let from_binary = parse_pgm(&write_pgm(&from_ascii)).unwrap();
        assert_eq!(from_ascii, from_binary);
    }

    #[test]
    fn binary_payload_starting_with_whitespace_byte_survives() {
        // First pixel value 32 (the space character) must not be eaten.
        let mut bytes = b"P5\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[32, 200]);
        assert_eq!(parse_pgm(&bytes).unwrap().pixels(), &[32, 200]);
    }

    #[test]
    fn oversized_payload_is_tolerated() {
        let mut bytes = b"P5\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        assert_eq!(parse_pgm(&bytes).unwrap().pixels(), &[1, 2]);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        assert_eq!(parse_pgm(b"P3 1 1 255 0"), Err(PgmError::BadMagic));
        assert_eq!(parse_pgm(b"Q5 1 1 255 0"), Err(PgmError::BadMagic));
        assert_eq!(parse_pgm(b""), Err(PgmError::BadMagic));
    }

    #[test]
    fn truncated_binary_data_reports_counts() {
        let mut bytes = b"P5\n128 128\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 100]);
        assert_eq!(
            parse_pgm(&bytes),
            Err(PgmError::Truncated { expected: 16384, found: 100 })
        );
    }

    #[test]
    fn truncated_ascii_data_reports_counts() {
        assert_eq!(
            parse_pgm(b"P2 2 2 255 0 1 2"),
            Err(PgmError::Truncated { expected: 4, found: 3 })
        );
    }

    #[test]
    fn large_maxval_is_rejected() {
        assert_eq!(parse_pgm(b"P2 1 1 65535 0"), Err(PgmError::MaxvalTooLarge(65535)));
    }

    #[test]
    fn structural_defects_are_malformed() {
        assert!(matches!(parse_pgm(b"P2 0 2 255"), Err(PgmError::Malformed(_))));
        assert!(matches!(parse_pgm(b"P2 2 2 0 0 0 0 0"), Err(PgmError::Malformed(_))));
        assert!(matches!(parse_pgm(b"P2 2 x 255 0 0 0 0"), Err(PgmError::Malformed(_))));
        assert!(matches!(parse_pgm(b"P2 2 2 255 0 0 0 999"), Err(PgmError::Malformed(_))));
        assert!(matches!(parse_pgm(b"P2 2 2"), Err(PgmError::Malformed(_))));
    }

    #[test]
    fn binary_fields_export_as_pure_black_and_white() {
        let grid = GridTopology::new(8, 8).unwrap();
        let field = BinaryField::from_fn(grid, |(r, _)| r % 2 == 0);
        let image = image_from_binary(&field);
        assert_eq!((image.width(), image.height()), (8, 8));
        for row in 0..8 {
            for col in 0..8 {
                assert_eq!(image.pixel(row, col), if row % 2 == 0 { 255 } else { 0 });
            }
        }
        let all_on = BinaryField::from_fn(grid, |_| true);
        assert!(image_from_binary(&all_on).pixels().iter().all(|&b| b == 255));
    }

    #[test]
    fn color_export_rounds_half_away_from_zero() {
        let grid = GridTopology::new(8, 8).unwrap();
        let field = ColorField::from_fn(grid, |(r, c)| match (r, c) {
            (0, 0) => 127.5,
            (0, 1) => 126.4,
            (0, 2) => 254.5,
            (0, 3) => 0.4,
            _ => 10.0,
        });
        let image = image_from_colors(&field);
        assert_eq!(image.pixel(0, 0), 128);
        assert_eq!(image.pixel(0, 1), 126);
        assert_eq!(image.pixel(0, 2), 255);
        assert_eq!(image.pixel(0, 3), 0);
    }
}
