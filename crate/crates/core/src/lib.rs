//! Core library for camouflage on a grid of communicating agents.
//!
//! The pipeline turns a grayscale image into a cooperative on/off pattern:
//!
//! 1. [`field::block_downsample`] averages the image onto the agent grid.
//! 2. [`descriptor`] classifies each cell's local texture (horizontal,
//!    vertical, or mottled) from second derivatives of neighbor colors.
//! 3. [`consensus`] runs Metropolis-weighted averaging so all agents agree
//!    on one texture class.
//! 4. [`generator`] grows a matching binary pattern with an
//!    activator-inhibitor rule.
//!
//! Each stage exists twice: as a pure, centrally-computable function, and as
//! part of the message-passing simulation in [`sim`], which executes the same
//! arithmetic through per-agent state, TDMA slots, and lossy broadcasts. With
//! noise disabled the two paths produce bit-identical results.
//!
//! The crate is `no_std` (with `alloc`) by default; the `std` feature adds
//! nothing API-visible and `rayon` (implies `std`) parallelizes per-agent
//! simulation steps without changing any output.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod consensus;
pub mod descriptor;
pub mod field;
pub mod generator;
pub mod grid;
pub mod metrics;
pub mod region;
pub mod rng;
pub mod sim;
pub mod synth;

pub use consensus::{
    argmax_pattern, consensus_step, metropolis_weights, run_consensus, weighted_update, CommGraph,
    ConsensusTrace, WeightAssignment,
};
pub use descriptor::{
    classify_local, local_patterns, second_derivatives, DescriptorResult, NeighborColors,
    PatternClass, PatternProbs,
};
pub use field::{binarize, block_downsample, BinaryField, ColorField, FieldError, Image};
pub use generator::{
    generator_step, region_for, run_generator, strength, Convergence, GeneratorParams,
    GeneratorRun,
};
pub use grid::{neighbors, reflect_offset, AgentId, Cell, GridError, GridTopology, Neighborhood, Offset};
pub use metrics::{
    error_sweep, orientation_score, orientation_score_masked, pixel_difference, MetricError,
    SweepMode, SweepRow, SweepTask,
};
pub use region::{rect_region, RegionError, RegionSpec};
pub use sim::{
    assign_slot, deliver, run_pipeline, sense, tdma_collisions, AgentState, ConsensusMode, Event,
    EventKind, KillSpec, Message, NoiseConfig, Payload, Phase, PhasePlan, RunResult, SimConfig,
    SimError, Swarm,
};
