//! Run-quality metrics and the noise-sweep harness.
//!
//! `pixel_difference` is the headline robustness number: how many cells of
//! a noisy run's final pattern differ from the clean run's. `error_sweep`
//! drives it across a grid of loss rates and noise modes, averaging over
//! independently seeded trials. `orientation_score` asks how much of a
//! field actually looks striped in a given direction.

use crate::descriptor::{local_patterns, PatternClass, DEFAULT_CLASS_THRESHOLD};
use crate::field::{BinaryField, ColorField, Image};
use crate::grid::GridTopology;
use crate::rng::{stream, StreamDomain};
use crate::sim::{run_pipeline, NoiseConfig, SimConfig, SimError};
use alloc::{vec, vec::Vec};
use rand::RngCore;

/// The default sweep grid: 0 to 0.5 in steps of 0.05.
pub const DEFAULT_SWEEP_RHOS: [f64; 11] =
    [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];

/// Default trials per sweep point.
pub const DEFAULT_SWEEP_TRIALS: u32 = 10;

/// Errors from metric evaluation or sweep runs.
#[derive(Clone, PartialEq, Debug)]
pub enum MetricError {
    GridMismatch { a: (usize, usize), b: (usize, usize) },
    NoTrials,
    Sim(SimError),
}

impl core::fmt::Display for MetricError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricError::GridMismatch { a, b } => write!(
                f,
                "fields live on different grids: {}x{} vs {}x{}",
                a.0, a.1, b.0, b.1
            ),
            MetricError::NoTrials => write!(f, "a sweep needs at least one trial"),
            MetricError::Sim(e) => write!(f, "{}", e),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricError {}

impl From<SimError> for MetricError {
    fn from(e: SimError) -> Self {
        MetricError::Sim(e)
    }
}

/// Number of cells where the two fields disagree.
pub fn pixel_difference(a: &BinaryField, b: &BinaryField) -> Result<u32, MetricError> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.rows() != gb.rows() || ga.cols() != gb.cols() {
        return Err(MetricError::GridMismatch {
            a: (ga.rows(), ga.cols()),
            b: (gb.rows(), gb.cols()),
        });
    }
    Ok(a.states()
        .iter()
        .zip(b.states())
        .filter(|(x, y)| x != y)
        .count() as u32)
}

fn classify_states(field: &BinaryField) -> Vec<PatternClass> {
    let colors = ColorField::from_fn(*field.grid(), |cell| {
        if field.get(cell) {
            255.0
        } else {
            0.0
        }
    });
    local_patterns(&colors, DEFAULT_CLASS_THRESHOLD)
        .into_iter()
        .map(crate::consensus::argmax_pattern)
        .collect()
}

/// Fractions of cells that classify as horizontal and vertical stripes
/// when the field is read back as a 0/255 image.
pub fn orientation_score(field: &BinaryField) -> (f64, f64) {
    let mask = vec![true; field.grid().len()];
    orientation_score_masked(field, &mask)
}

/// [`orientation_score`] restricted to the cells where `include` is true
/// (fractions of the included cells).
pub fn orientation_score_masked(field: &BinaryField, include: &[bool]) -> (f64, f64) {
    assert_eq!(include.len(), field.grid().len(), "one mask entry per cell");
    let classes = classify_states(field);
    let total = include.iter().filter(|&&m| m).count();
    if total == 0 {
        return (0.0, 0.0);
    }
    let count = |class: PatternClass| {
        classes
            .iter()
            .zip(include)
            .filter(|&(c, &m)| m && *c == class)
            .count() as f64
            / total as f64
    };
    (count(PatternClass::Horizontal), count(PatternClass::Vertical))
}

/// Which loss rate a sweep point varies.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SweepMode {
    MeasOnly,
    CommOnly,
    Both,
}

impl SweepMode {
    pub const ALL: [SweepMode; 3] = [SweepMode::MeasOnly, SweepMode::CommOnly, SweepMode::Both];

    /// The (rho_meas, rho_comm) pair this mode applies at rate `rho`.
    pub fn rates(self, rho: f64) -> (f64, f64) {
        match self {
            SweepMode::MeasOnly => (rho, 0.0),
            SweepMode::CommOnly => (0.0, rho),
            SweepMode::Both => (rho, rho),
        }
    }

    pub fn parse(s: &str) -> Option<SweepMode> {
        match s {
            "meas-only" => Some(SweepMode::MeasOnly),
            "comm-only" => Some(SweepMode::CommOnly),
            "both" => Some(SweepMode::Both),
            _ => None,
        }
    }
}

impl core::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            SweepMode::MeasOnly => "meas-only",
            SweepMode::CommOnly => "comm-only",
            SweepMode::Both => "both",
        };
        write!(f, "{}", name)
    }
}

/// One sweep point's aggregated result.
#[derive(Clone, PartialEq, Debug)]
pub struct SweepRow {
    pub rho: f64,
    pub mode: SweepMode,
    pub mean_diff: f64,
    pub trials: u32,
    /// The per-trial differences behind the mean, in trial order.
    pub diffs: Vec<u32>,
}

/// One trial of one sweep point; `k` indexes the point, `t` the trial.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SweepTask {
    pub k: u32,
    pub t: u32,
    pub mode: SweepMode,
    pub rho: f64,
}

/// All (point, trial) tasks for a sweep, point-major in the given mode and
/// rho order, trials inner.
pub fn sweep_tasks(rhos: &[f64], modes: &[SweepMode], trials: u32) -> Vec<SweepTask> {
    let mut tasks = Vec::with_capacity(rhos.len() * modes.len() * trials as usize);
    let mut k = 0;
    for &mode in modes {
        for &rho in rhos {
            for t in 0..trials {
                tasks.push(SweepTask { k, t, mode, rho });
            }
            k += 1;
        }
    }
    tasks
}

/// The clean run every noisy trial is compared against.
pub fn zero_noise_baseline(
    image: &Image,
    grid: GridTopology,
    base: &SimConfig,
) -> Result<BinaryField, MetricError> {
    let config = SimConfig {
        noise: NoiseConfig { rho_meas: 0.0, rho_comm: 0.0, seed: base.noise.seed },
        log_events: false,
        ..base.clone()
    };
    Ok(run_pipeline(image, grid, &config)?.final_field)
}

/// Runs one trial and returns its difference from the clean baseline. The
/// trial's seed derives from (base seed, k, t), so any task can be re-run
/// in isolation. Per-delivery events are not recorded.
pub fn run_sweep_task(
    image: &Image,
    grid: GridTopology,
    base: &SimConfig,
    baseline: &BinaryField,
    task: &SweepTask,
) -> Result<u32, MetricError> {
    let (rho_meas, rho_comm) = task.mode.rates(task.rho);
    let mut derived = stream(base.noise.seed, StreamDomain::Trial, task.k, task.t, 0);
    let config = SimConfig {
        noise: NoiseConfig { rho_meas, rho_comm, seed: derived.next_u64() },
        log_events: false,
        ..base.clone()
    };
    let result = run_pipeline(image, grid, &config)?;
    pixel_difference(&result.final_field, baseline)
}

/// Sweeps the loss rates across modes, `trials` independently seeded runs
/// per point, and averages each point's pixel difference from the clean
/// run. Rows come back in task order (modes outer, rhos inner).
pub fn error_sweep(
    image: &Image,
    grid: GridTopology,
    rhos: &[f64],
    modes: &[SweepMode],
    trials: u32,
    base: &SimConfig,
) -> Result<Vec<SweepRow>, MetricError> {
    if trials == 0 {
        return Err(MetricError::NoTrials);
    }
    let baseline = zero_noise_baseline(image, grid, base)?;
    let tasks = sweep_tasks(rhos, modes, trials);
    let diffs = map_tasks(&tasks, |task| run_sweep_task(image, grid, base, &baseline, task));
    let mut rows = Vec::with_capacity(rhos.len() * modes.len());
    for (chunk, outcomes) in tasks.chunks(trials as usize).zip(diffs.chunks(trials as usize)) {
        let mut point_diffs = Vec::with_capacity(trials as usize);
        for outcome in outcomes {
            point_diffs.push(outcome.clone()?);
        }
        let mean = point_diffs.iter().map(|&d| d as f64).sum::<f64>() / trials as f64;
        rows.push(SweepRow {
            rho: chunk[0].rho,
            mode: chunk[0].mode,
            mean_diff: mean,
            trials,
            diffs: point_diffs,
        });
    }
    Ok(rows)
}

/// Maps over tasks, in parallel when the `rayon` feature is on; output
/// order is task order either way.
#[cfg(feature = "rayon")]
fn map_tasks<T: Send>(
    tasks: &[SweepTask],
    f: impl Fn(&SweepTask) -> T + Sync + Send,
) -> Vec<T> {
    use rayon::prelude::*;
    tasks.par_iter().map(f).collect()
}

#[cfg(not(feature = "rayon"))]
fn map_tasks<T>(tasks: &[SweepTask], f: impl Fn(&SweepTask) -> T) -> Vec<T> {
    tasks.iter().map(f).collect()
}
