//! Subcommand drivers.
//!
//! Each driver resolves its effective configuration (flags over config
//! file over defaults), runs the work to completion in memory, and only
//! then writes the output tree — a failed run leaves no partial files.

use crate::args::{Cli, Command, CommonArgs, GenerateArgs, RunArgs, SweepArgs, SynthArgs};
use crate::config::FileConfig;
use crate::pgm::{image_from_binary, image_from_colors, parse_pgm, write_pgm};
use crate::report::{consensus_csv, events_log, run_summary, sweep_csv};
use camo_core::grid::AgentId;
use camo_core::metrics::{MetricError, DEFAULT_SWEEP_RHOS, DEFAULT_SWEEP_TRIALS};
use camo_core::region::rect_region;
use camo_core::sim::{ConsensusMode, KillSpec, NoiseConfig, SimConfig};
use camo_core::{
    binarize, block_downsample, error_sweep, region_for, run_generator, run_pipeline,
    GeneratorParams, GridTopology, Image, PatternClass, RegionSpec, SweepMode,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// A driver failure, carrying the process exit code to report.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CliError {
    /// Bad flags or config values; exits 1.
    Usage(String),
    /// Unreadable input or unwritable output; exits 2.
    Io(String),
    /// A broken internal invariant; exits 3.
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => write!(f, "{}", m),
            CliError::Internal(m) => write!(f, "internal error: {}", m),
        }
    }
}

impl std::error::Error for CliError {}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

/// Flags merged with the config file; flags win field by field.
struct Resolved {
    common: CommonArgs,
    file: FileConfig,
}

impl Resolved {
    fn new(common: CommonArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Io(format!("reading {}: {}", path.display(), e))
                })?;
                FileConfig::parse(&text).map_err(|e| CliError::Usage(e.to_string()))?
            }
            None => FileConfig::default(),
        };
        Ok(Resolved { common, file })
    }

    /// Flag value, else config-file value, else the default.
    fn value<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match (flag, self.file.get(key)) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(s)) => s.parse().map_err(|_| {
                CliError::Usage(format!("config {}: cannot parse {:?}", key, s))
            }),
            (None, None) => Ok(default),
        }
    }

    /// Like [`Resolved::value`] but without a default.
    fn optional<T: FromStr + Clone>(
        &self,
        flag: &Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        match (flag, self.file.get(key)) {
            (Some(v), _) => Ok(Some(v.clone())),
            (None, Some(s)) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config {}: cannot parse {:?}", key, s))),
            (None, None) => Ok(None),
        }
    }

    fn string(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).map(str::to_string))
    }

    fn image_path(&self) -> Result<PathBuf, CliError> {
        self.optional(&self.common.image, "image")?
            .ok_or_else(|| CliError::Usage("an input image is required (--image)".into()))
    }

    fn out_dir(&self) -> Result<PathBuf, CliError> {
        Ok(self
            .optional(&self.common.out, "out")?
            .unwrap_or_else(|| PathBuf::from(".")))
    }

    fn grid(&self) -> Result<GridTopology, CliError> {
        let rows = self.value(&self.common.rows, "rows", 8)?;
        let cols = self.value(&self.common.cols, "cols", 8)?;
        GridTopology::new(rows, cols).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn generator_params(&self) -> Result<GeneratorParams, CliError> {
        let defaults = GeneratorParams::default();
        let params = GeneratorParams {
            w1: self.value(&self.common.w1, "w1", defaults.w1)?,
            w2: self.value(&self.common.w2, "w2", defaults.w2)?,
            max_iterations: self.value(
                &self.common.iterations,
                "iterations",
                defaults.max_iterations,
            )?,
        };
        if params.w1 <= 0.0 || params.w1.is_nan() {
            return Err(CliError::Usage("w1 must be positive".into()));
        }
        if params.w2 >= 0.0 || params.w2.is_nan() {
            return Err(CliError::Usage("w2 must be negative".into()));
        }
        if params.max_iterations == 0 {
            return Err(CliError::Usage("iterations must be at least 1".into()));
        }
        Ok(params)
    }

    fn kills(&self) -> Result<Vec<KillSpec>, CliError> {
        let specs: Vec<String> = if self.common.kills.is_empty() {
            self.file.get_all("kill").iter().map(|s| s.to_string()).collect()
        } else {
            self.common.kills.clone()
        };
        specs.iter().map(|s| parse_kill(s)).collect()
    }

    fn tdma(&self) -> Result<bool, CliError> {
        if self.common.tdma {
            return Ok(true);
        }
        match self.file.get("tdma") {
            Some(s) => parse_bool(s)
                .ok_or_else(|| CliError::Usage(format!("config tdma: cannot parse {:?}", s))),
            None => Ok(false),
        }
    }

    fn consensus_mode(&self) -> Result<ConsensusMode, CliError> {
        match self.string(&self.common.consensus, "consensus") {
            None => Ok(ConsensusMode::default()),
            Some(s) => match s.as_str() {
                "loss-adapted" => Ok(ConsensusMode::LossAdapted),
                "static-graph" => Ok(ConsensusMode::StaticGraph),
                other => Err(CliError::Usage(format!(
                    "unknown consensus mode {:?} (use loss-adapted or static-graph)",
                    other
                ))),
            },
        }
    }

    fn sim_config(&self) -> Result<SimConfig, CliError> {
        let defaults = SimConfig::default();
        let noise = NoiseConfig {
            rho_meas: self.value(&self.common.rho_meas, "rho-meas", 0.0)?,
            rho_comm: self.value(&self.common.rho_comm, "rho-comm", 0.0)?,
            seed: self.value(&self.common.seed, "seed", 0)?,
        };
        Ok(SimConfig {
            noise,
            class_threshold: self.value(
                &self.common.class_threshold,
                "class-threshold",
                defaults.class_threshold,
            )?,
            binarize_threshold: self.value(
                &self.common.binarize_threshold,
                "binarize-threshold",
                defaults.binarize_threshold,
            )?,
            generator: self.generator_params()?,
            consensus_mode: self.consensus_mode()?,
            tdma_enabled: self.tdma()?,
            kills: self.kills()?,
            ..defaults
        })
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_kill(s: &str) -> Result<KillSpec, CliError> {
    let usage = || CliError::Usage(format!("kill {:?}: expected id@frame", s));
    let (id, frame) = s.split_once('@').ok_or_else(usage)?;
    Ok(KillSpec {
        id: AgentId(id.trim().parse().map_err(|_| usage())?),
        frame: frame.trim().parse().map_err(|_| usage())?,
    })
}

fn parse_class(s: &str) -> Result<PatternClass, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "horizontal" => Ok(PatternClass::Horizontal),
        "vertical" => Ok(PatternClass::Vertical),
        "mottled" => Ok(PatternClass::Mottled),
        _ => Err(CliError::Usage(format!(
            "unknown class {:?} (use horizontal, vertical, or mottled)",
            s
        ))),
    }
}

fn parse_extent_pair(s: &str, what: &str) -> Result<(u32, u32), CliError> {
    let usage = || CliError::Usage(format!("{} {:?}: expected two integers as x,y", what, s));
    let (x, y) = s.split_once(',').ok_or_else(usage)?;
    Ok((
        x.trim().parse().map_err(|_| usage())?,
        y.trim().parse().map_err(|_| usage())?,
    ))
}

fn load_image(path: &Path) -> Result<Image, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Io(format!("reading {}: {}", path.display(), e)))?;
    parse_pgm(&bytes).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))
}

/// Writes all files at once, creating the directory first.
fn write_tree(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {}", dir.display(), e)))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("writing {}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn pattern_step_files(steps: &[camo_core::BinaryField]) -> Vec<(String, Vec<u8>)> {
    steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            (
                format!("pattern_iter{:02}.pgm", i + 1),
                write_pgm(&image_from_binary(step)),
            )
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let r = Resolved::new(args.common)?;
    let config = r.sim_config()?;
    let grid = r.grid()?;
    let out_dir = r.out_dir()?;
    let image = load_image(&r.image_path()?)?;
    let result =
        run_pipeline(&image, grid, &config).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("blurred.pgm".into(), write_pgm(&image_from_colors(&result.blurred))),
        ("initial.pgm".into(), write_pgm(&image_from_binary(&result.initial))),
    ];
    files.extend(pattern_step_files(&result.pattern_steps));
    files.push(("final.pgm".into(), write_pgm(&image_from_binary(&result.final_field))));
    files.push(("consensus.csv".into(), consensus_csv(&result.trace, &grid).into_bytes()));
    files.push(("events.log".into(), events_log(&result.events).into_bytes()));
    write_tree(&out_dir, &files)?;
    print!("{}", run_summary(&result));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let r = Resolved::new(args.common)?;
    let config = r.sim_config()?;
    let grid = r.grid()?;
    let out_dir = r.out_dir()?;
    let trials = r.value(&args.trials, "trials", DEFAULT_SWEEP_TRIALS)?;
    let rhos: Vec<f64> = match r.string(&args.rhos, "rhos") {
        None => DEFAULT_SWEEP_RHOS.to_vec(),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("rho {:?} is not a number", s)))
            })
            .collect::<Result<_, _>>()?,
    };
    let modes: Vec<SweepMode> = match r.string(&args.modes, "modes") {
        None => SweepMode::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|s| {
                SweepMode::parse(s.trim()).ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown mode {:?} (use meas-only, comm-only, both)",
                        s
                    ))
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let image = load_image(&r.image_path()?)?;
    let rows = error_sweep(&image, grid, &rhos, &modes, trials, &config).map_err(|e| match e {
        MetricError::NoTrials | MetricError::Sim(_) => CliError::Usage(e.to_string()),
        MetricError::GridMismatch { .. } => CliError::Internal(e.to_string()),
    })?;
    write_tree(&out_dir, &[("sweep.csv".into(), sweep_csv(&rows).into_bytes())])?;
    println!("points={} trials={}", rows.len(), trials);
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let r = Resolved::new(args.common)?;
    let grid = r.grid()?;
    let out_dir = r.out_dir()?;
    let params = r.generator_params()?;
    let threshold = r.value(
        &r.common.binarize_threshold.clone(),
        "binarize-threshold",
        camo_core::field::DEFAULT_BINARIZE_THRESHOLD,
    )?;
    let class = parse_class(
        &r.string(&args.class, "class")
            .ok_or_else(|| CliError::Usage("a pattern class is required (--class)".into()))?,
    )?;
    let region = resolved_region(&r, &args.activator, &args.inhibitor, class)?;
    let image = load_image(&r.image_path()?)?;
    let blurred =
        block_downsample(&image, grid).map_err(|e| CliError::Usage(e.to_string()))?;
    let init = binarize(&blurred, threshold);
    let run = run_generator(&init, &region, &params);

    let mut files: Vec<(String, Vec<u8>)> =
        vec![("initial.pgm".into(), write_pgm(&image_from_binary(&init)))];
    files.extend(pattern_step_files(&run.steps));
    files.push(("final.pgm".into(), write_pgm(&image_from_binary(run.final_field()))));
    write_tree(&out_dir, &files)?;
    println!("convergence={} iterations={}", run.convergence, run.iterations_used);
    Ok(())
}

/// The generation region: the class's canonical shape unless extents are
/// overridden.
fn resolved_region(
    r: &Resolved,
    activator_flag: &Option<String>,
    inhibitor_flag: &Option<String>,
    class: PatternClass,
) -> Result<RegionSpec, CliError> {
    let activator = r.string(activator_flag, "activator");
    let inhibitor = r.string(inhibitor_flag, "inhibitor");
    if activator.is_none() && inhibitor.is_none() {
        return Ok(region_for(class));
    }
    let (a_x, a_y) = match &activator {
        Some(s) => parse_extent_pair(s, "activator")?,
        None => match class {
            PatternClass::Horizontal => (2, 0),
            PatternClass::Vertical => (0, 2),
            PatternClass::Mottled => (1, 1),
        },
    };
    let (i_x, i_y) = match &inhibitor {
        Some(s) => parse_extent_pair(s, "inhibitor")?,
        None => (2, 2),
    };
    rect_region(a_x, a_y, i_x, i_y).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let r = Resolved::new(args.common)?;
    let out_dir = r.out_dir()?;
    let pattern = r
        .string(&args.pattern, "pattern")
        .ok_or_else(|| CliError::Usage("a pattern is required (--pattern)".into()))?;
    let width = r.value(&args.width, "width", 128)?;
    let height = r.value(&args.height, "height", 128)?;
    let band = r.value(&args.band, "band", camo_core::synth::DEFAULT_BAND_PX)?;
    if width == 0 || height == 0 || band == 0 {
        return Err(CliError::Usage("width, height, and band must be positive".into()));
    }
    let image = match pattern.as_str() {
        "hstripes" => camo_core::synth::horizontal_stripes(width, height, band),
        "vstripes" => camo_core::synth::vertical_stripes(width, height, band),
        "checker" => camo_core::synth::checkerboard(width, height, band),
        other => {
            return Err(CliError::Usage(format!(
                "unknown pattern {:?} (use hstripes, vstripes, or checker)",
                other
            )))
        }
    };
    let name = format!("{}.pgm", pattern);
    write_tree(&out_dir, &[(name.clone(), write_pgm(&image))])?;
    println!("wrote {}", out_dir.join(name).display());
    Ok(())
}
