//! Local texture descriptors and pattern classification.
//!
//! Each agent compares its own color with its four orthogonal neighbors and
//! forms discrete second derivatives along each axis. Strong variation along
//! exactly one axis reads as a stripe; anything else reads as mottled. The
//! result is a one-hot probability vector over the three pattern classes,
//! which consensus later averages across the swarm.

use crate::field::ColorField;
use crate::grid::{neighbors, Cell, Neighborhood};
use alloc::vec::Vec;

/// Default classification threshold: a quarter of the 8-bit intensity range.
pub const DEFAULT_CLASS_THRESHOLD: f64 = 64.0;

/// The three texture families a swarm can agree on.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PatternClass {
    Horizontal,
    Vertical,
    Mottled,
}

impl PatternClass {
    /// The class seen after swapping rows and columns.
    pub fn transposed(self) -> Self {
        match self {
            PatternClass::Horizontal => PatternClass::Vertical,
            PatternClass::Vertical => PatternClass::Horizontal,
            PatternClass::Mottled => PatternClass::Mottled,
        }
    }

    pub const ALL: [PatternClass; 3] = [
        PatternClass::Horizontal,
        PatternClass::Vertical,
        PatternClass::Mottled,
    ];
}

impl core::fmt::Display for PatternClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            PatternClass::Horizontal => "Horizontal",
            PatternClass::Vertical => "Vertical",
            PatternClass::Mottled => "Mottled",
        };
        write!(f, "{}", name)
    }
}

/// An agent's own color and its four orthogonal neighbor colors
/// (reflection-resolved at grid boundaries).
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct NeighborColors {
    pub middle: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

/// Discrete second derivatives of color along each axis.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct DescriptorResult {
    pub p_x: f64,
    pub p_y: f64,
}

/// A probability vector over the three pattern classes.
///
/// Local classification emits one-hot vectors; consensus averaging moves
/// them into the interior of the simplex.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PatternProbs {
    pub p_h: f64,
    pub p_v: f64,
    pub p_m: f64,
}

impl PatternProbs {
    pub const fn new(p_h: f64, p_v: f64, p_m: f64) -> Self {
        PatternProbs { p_h, p_v, p_m }
    }

    /// The vector that gives `class` probability 1.
    pub fn one_hot(class: PatternClass) -> Self {
        match class {
            PatternClass::Horizontal => PatternProbs::new(1.0, 0.0, 0.0),
            PatternClass::Vertical => PatternProbs::new(0.0, 1.0, 0.0),
            PatternClass::Mottled => PatternProbs::new(0.0, 0.0, 1.0),
        }
    }

    /// Components in `[p_h, p_v, p_m]` order.
    pub fn components(self) -> [f64; 3] {
        [self.p_h, self.p_v, self.p_m]
    }

    /// Probability of a single class.
    pub fn get(self, class: PatternClass) -> f64 {
        match class {
            PatternClass::Horizontal => self.p_h,
            PatternClass::Vertical => self.p_v,
            PatternClass::Mottled => self.p_m,
        }
    }

    /// The vector seen after swapping rows and columns.
    pub fn transposed(self) -> Self {
        PatternProbs::new(self.p_v, self.p_h, self.p_m)
    }

    /// Whether components are near `[0, 1]` and sum to 1 within `tol`.
    pub fn is_distribution(self, tol: f64) -> bool {
        let in_range = self
            .components()
            .iter()
            .all(|&p| p >= -tol && p <= 1.0 + tol);
        in_range && (self.p_h + self.p_v + self.p_m - 1.0).abs() <= tol
    }
}

/// Second derivatives from one agent's gathered colors:
/// `P_x = L + R - 2M` and `P_y = T + B - 2M`.
pub fn second_derivatives(colors: &NeighborColors) -> DescriptorResult {
    DescriptorResult {
        p_x: colors.left + colors.right - 2.0 * colors.middle,
        p_y: colors.top + colors.bottom - 2.0 * colors.middle,
    }
}

/// Classifies a descriptor into a one-hot pattern vector.
///
/// Variation dominated by the y axis by more than `threshold` reads as
/// horizontal stripes; by the x axis, vertical stripes; otherwise mottled.
pub fn classify_local(d: &DescriptorResult, threshold: f64) -> PatternProbs {
    if d.p_y.abs() - d.p_x.abs() > threshold {
        PatternProbs::one_hot(PatternClass::Horizontal)
    } else if d.p_x.abs() - d.p_y.abs() > threshold {
        PatternProbs::one_hot(PatternClass::Vertical)
    } else {
        PatternProbs::one_hot(PatternClass::Mottled)
    }
}

/// Reads a cell's own and four orthogonal neighbor colors from a field,
/// reflecting at boundaries.
pub fn gather_colors(field: &ColorField, cell: Cell) -> NeighborColors {
    let n = neighbors(field.grid(), cell, Neighborhood::N4);
    // N4 offsets arrive in row-major order: up, left, right, down.
    NeighborColors {
        middle: field.get(cell),
        top: field.get(n[0].cell),
        left: field.get(n[1].cell),
        right: field.get(n[2].cell),
        bottom: field.get(n[3].cell),
    }
}

/// Classifies every cell of a field, row-major.
pub fn local_patterns(field: &ColorField, threshold: f64) -> Vec<PatternProbs> {
    field
        .grid()
        .cells()
        .map(|cell| classify_local(&second_derivatives(&gather_colors(field, cell)), threshold))
        .collect()
}
