//! Activator-inhibitor pattern generation.
//!
//! Every cell sums a "strength" over its neighborhood — `w1` for each on
//! cell inside the activator region, `w2` (negative) for each on cell inside
//! the inhibitor region — and turns on next step iff the sum is strictly
//! positive. Iterating this synchronous rule from a binarized image settles
//! into stripes or spots matching the region shape within a few steps.

use crate::descriptor::PatternClass;
use crate::field::BinaryField;
use crate::grid::{reflect_offset, Cell, GridTopology};
use crate::region::{rect_region, RegionSpec};
use alloc::vec::Vec;

/// Field values and iteration budget for the generator.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct GeneratorParams {
    /// Contribution of an on cell in the activator region; positive.
    pub w1: f64,
    /// Contribution of an on cell in the inhibitor region; negative.
    pub w2: f64,
    /// Iteration budget for [`run_generator`].
    pub max_iterations: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { w1: 1.0, w2: -0.75, max_iterations: 10 }
    }
}

/// The canonical region for each pattern class.
pub fn region_for(class: PatternClass) -> RegionSpec {
    let (a_x, a_y) = match class {
        PatternClass::Horizontal => (2, 0),
        PatternClass::Vertical => (0, 2),
        PatternClass::Mottled => (1, 1),
    };
    rect_region(a_x, a_y, 2, 2).expect("canonical extents are contained and in range")
}

/// Strength with neighbor states supplied by a lookup, so the simulator can
/// evaluate the same sum from heard messages. Terms accumulate in region
/// order: activator first, then inhibitor.
pub(crate) fn strength_with(
    cell: Cell,
    grid: &GridTopology,
    region: &RegionSpec,
    params: &GeneratorParams,
    mut on: impl FnMut(Cell) -> bool,
) -> f64 {
    let mut s = 0.0;
    for &o in region.activator() {
        if on(reflect_offset(grid, cell, o)) {
            s += params.w1;
        }
    }
    for &o in region.inhibitor() {
        if on(reflect_offset(grid, cell, o)) {
            s += params.w2;
        }
    }
    s
}

/// The activation strength of one cell against a full state field.
pub fn strength(
    cell: Cell,
    states: &BinaryField,
    region: &RegionSpec,
    params: &GeneratorParams,
) -> f64 {
    strength_with(cell, states.grid(), region, params, |c| states.get(c))
}

/// One synchronous update: each cell turns on iff its strength is strictly
/// positive (a strength of exactly 0 turns off).
pub fn generator_step(
    states: &BinaryField,
    region: &RegionSpec,
    params: &GeneratorParams,
) -> BinaryField {
    BinaryField::from_fn(*states.grid(), |cell| {
        strength(cell, states, region, params) > 0.0
    })
}

/// How a generator run stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Convergence {
    /// The state repeated the previous state.
    FixedPoint,
    /// The state repeated the state from two steps earlier.
    Cycle,
    /// The iteration budget ran out first.
    BudgetExhausted,
}

impl core::fmt::Display for Convergence {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            Convergence::FixedPoint => "fixed-point",
            Convergence::Cycle => "cycle",
            Convergence::BudgetExhausted => "budget-exhausted",
        };
        write!(f, "{}", name)
    }
}

/// A completed generator run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratorRun {
    /// The state after each executed step, in order.
    pub steps: Vec<BinaryField>,
    /// Steps actually executed (at least 1).
    pub iterations_used: u32,
    pub convergence: Convergence,
}

impl GeneratorRun {
    /// The final state.
    pub fn final_field(&self) -> &BinaryField {
        self.steps.last().expect("a run executes at least one step")
    }
}

/// Iterates [`generator_step`] from `init`, stopping early on a fixed point
/// or a 2-cycle, up to `params.max_iterations` steps.
pub fn run_generator(
    init: &BinaryField,
    region: &RegionSpec,
    params: &GeneratorParams,
) -> GeneratorRun {
    assert!(params.max_iterations >= 1, "iteration budget must be positive");
    let mut steps: Vec<BinaryField> = Vec::new();
    let mut convergence = Convergence::BudgetExhausted;
    for k in 0..params.max_iterations {
        let current = steps.last().unwrap_or(init);
        let next = generator_step(current, region, params);
        let fixed = next == *current;
        let cycling = if k >= 1 {
            let two_back = if k == 1 { init } else { &steps[k as usize - 2] };
            next == *two_back
        } else {
            false
        };
        steps.push(next);
        if fixed {
            convergence = Convergence::FixedPoint;
            break;
        }
        if cycling {
            convergence = Convergence::Cycle;
            break;
        }
    }
    GeneratorRun {
        iterations_used: steps.len() as u32,
        steps,
        convergence,
    }
}
