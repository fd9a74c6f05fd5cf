//! The per-agent state machine and lossy broadcast harness.
//!
//! A run advances frame by frame through four phases:
//!
//! 0. **Discovery** — agents announce themselves and their known neighbors;
//!    receivers build a table of up to 12 (id, offset) entries.
//! 1. **Color share** — each agent senses its cell color (possibly
//!    corrupted) and exchanges it with orthogonal neighbors, then classifies
//!    its local texture.
//! 2. **Consensus** — one Metropolis-weighted averaging round per frame
//!    over whatever probability shares arrived.
//! 3. **Pattern** — one generator step per frame over exchanged on/off
//!    states, up to the iteration budget.
//!
//! Every message delivery and sensor corruption draws from its own
//! deterministic stream ([`crate::rng`]), so a run is a pure function of
//! its config and seed, and per-agent work within a frame can execute in
//! parallel (the `rayon` feature) without changing a single bit of output.
//! With noise disabled the whole harness is transparent: it reproduces the
//! centralized downsample → classify → consensus → generator composition
//! exactly.

use crate::consensus::{argmax_is_tie, argmax_pattern, weighted_update, ConsensusTrace};
use crate::descriptor::{
    classify_local, second_derivatives, NeighborColors, PatternClass, PatternProbs,
    DEFAULT_CLASS_THRESHOLD,
};
use crate::field::{
    block_downsample, BinaryField, ColorField, FieldError, Image, DEFAULT_BINARIZE_THRESHOLD,
};
use crate::generator::{region_for, strength_with, Convergence, GeneratorParams};
use crate::grid::{AgentId, Cell, GridTopology, Neighborhood, Offset};
use crate::rng::{stream, StreamDomain};
use alloc::{vec, vec::Vec};
use rand::{Rng, RngCore};

/// Measurement and communication loss rates, plus the run seed.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct NoiseConfig {
    /// Probability a sensed color is replaced by a uniform random one.
    pub rho_meas: f64,
    /// Probability an individual (message, receiver) delivery is lost.
    pub rho_comm: f64,
    /// Root seed for all random streams.
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { rho_meas: 0.0, rho_comm: 0.0, seed: 0 }
    }
}

/// Frame budgets for the four phases and the TDMA slot layout.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PhasePlan {
    pub discovery_frames: u32,
    pub color_frames: u32,
    pub consensus_frames: u32,
    pub pattern_frames: u32,
    pub slots_per_frame: u32,
    /// Slot duration in milliseconds; informational only.
    pub slot_ms: u32,
}

impl Default for PhasePlan {
    fn default() -> Self {
        PhasePlan {
            discovery_frames: 20,
            color_frames: 10,
            consensus_frames: 35,
            pattern_frames: 20,
            slots_per_frame: 37,
            slot_ms: 350,
        }
    }
}

impl PhasePlan {
    pub fn total_frames(&self) -> u32 {
        self.discovery_frames + self.color_frames + self.consensus_frames + self.pattern_frames
    }

    /// First frame of the color-share phase.
    pub fn color_start(&self) -> u32 {
        self.discovery_frames
    }

    /// First frame of the consensus phase.
    pub fn consensus_start(&self) -> u32 {
        self.discovery_frames + self.color_frames
    }

    /// First frame of the pattern phase.
    pub fn pattern_start(&self) -> u32 {
        self.discovery_frames + self.color_frames + self.consensus_frames
    }

    /// The phase a given frame number falls in.
    pub fn phase_of(&self, frame: u32) -> Phase {
        if frame < self.color_start() {
            Phase::Discovery
        } else if frame < self.consensus_start() {
            Phase::ColorShare
        } else if frame < self.pattern_start() {
            Phase::Consensus
        } else if frame < self.total_frames() {
            Phase::Pattern
        } else {
            Phase::Done
        }
    }

    /// Wall-clock length of one frame in milliseconds; informational.
    pub fn frame_ms(&self) -> u32 {
        self.slots_per_frame * self.slot_ms
    }
}

/// Protocol phase, also used as the message phase flag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Phase {
    Discovery,
    ColorShare,
    Consensus,
    Pattern,
    Done,
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            Phase::Discovery => "discovery",
            Phase::ColorShare => "color-share",
            Phase::Consensus => "consensus",
            Phase::Pattern => "pattern",
            Phase::Done => "done",
        };
        write!(f, "{}", name)
    }
}

/// How consensus weights react to lost messages.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ConsensusMode {
    /// Weights recomputed each frame from the actually-heard set; the
    /// effective degree is the number of shares that arrived. Keeps every
    /// update a convex combination under arbitrary loss.
    #[default]
    LossAdapted,
    /// Weights fixed on the discovered neighbor graph; a missing neighbor's
    /// last-known value is reused (its weight folds into the self weight
    /// until first contact).
    StaticGraph,
}

impl core::fmt::Display for ConsensusMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            ConsensusMode::LossAdapted => "loss-adapted",
            ConsensusMode::StaticGraph => "static-graph",
        };
        write!(f, "{}", name)
    }
}

/// Kill agent `id` at the start of frame `frame`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct KillSpec {
    pub id: AgentId,
    pub frame: u32,
}

/// Full simulation configuration (grid comes from the input field).
#[derive(Clone, PartialEq, Debug)]
pub struct SimConfig {
    pub noise: NoiseConfig,
    pub plan: PhasePlan,
    /// Threshold for stripe-vs-mottled classification.
    pub class_threshold: f64,
    /// Threshold for seeding the generator from sensed colors.
    pub binarize_threshold: f64,
    pub generator: GeneratorParams,
    pub consensus_mode: ConsensusMode,
    /// Enables TDMA slot collisions (same slot within talking range mutes
    /// both transmitters for the frame).
    pub tdma_enabled: bool,
    pub kills: Vec<KillSpec>,
    /// Custom agent ids in row-major cell order; defaults to 0..n.
    pub agent_ids: Option<Vec<u16>>,
    /// Record per-delivery events (drops, mutes, sensor corruptions).
    /// Lifecycle events (kills, ties, convergence) are always recorded.
    pub log_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            noise: NoiseConfig::default(),
            plan: PhasePlan::default(),
            class_threshold: DEFAULT_CLASS_THRESHOLD,
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            generator: GeneratorParams::default(),
            consensus_mode: ConsensusMode::default(),
            tdma_enabled: false,
            kills: Vec::new(),
            agent_ids: None,
            log_events: true,
        }
    }
}

/// Errors from configuration validation or image ingestion.
#[derive(Clone, PartialEq, Debug)]
pub enum SimError {
    Field(FieldError),
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    InvalidPlan(&'static str),
    InvalidGenerator(&'static str),
    IdCountMismatch { expected: usize, found: usize },
    DuplicateId(u16),
    UnknownKillId(u16),
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::Field(e) => write!(f, "{}", e),
            SimError::ProbabilityOutOfRange { name, value } => {
                write!(f, "{} must lie in [0, 1], got {}", name, value)
            }
            SimError::InvalidPlan(what) => write!(f, "invalid phase plan: {}", what),
            SimError::InvalidGenerator(what) => write!(f, "invalid generator params: {}", what),
            SimError::IdCountMismatch { expected, found } => {
                write!(f, "expected {} agent ids, found {}", expected, found)
            }
            SimError::DuplicateId(id) => write!(f, "duplicate agent id {}", id),
            SimError::UnknownKillId(id) => write!(f, "kill refers to unknown agent id {}", id),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

impl From<FieldError> for SimError {
    fn from(e: FieldError) -> Self {
        SimError::Field(e)
    }
}

/// Message payloads, one per phase.
#[derive(Clone, PartialEq, Debug)]
pub enum Payload {
    /// The sender's known neighbors as (id, offset-relative-to-sender).
    NeighborAnnounce { known: Vec<(AgentId, Offset)> },
    ColorShare { color: f64 },
    PatternProbShare { probs: PatternProbs, degree: u32 },
    PatternColorShare { on: bool },
}

/// One broadcast: sender id, phase flag, payload.
#[derive(Clone, PartialEq, Debug)]
pub struct Message {
    pub sender: AgentId,
    pub phase: Phase,
    pub payload: Payload,
}

/// Events worth keeping in the run record.
#[derive(Clone, PartialEq, Debug)]
pub enum EventKind {
    Killed,
    SenseCorrupted { true_color: f64, sensed: f64 },
    Muted { slot: u32 },
    Dropped { from: AgentId, to: AgentId, phase: Phase },
    ClassTie { chosen: PatternClass },
    PatternStopped { convergence: Convergence, iterations: u32 },
}

/// A timestamped event; `agent` is the affected agent where one applies
/// (the receiver, for drops).
#[derive(Clone, PartialEq, Debug)]
pub struct Event {
    pub frame: u32,
    pub agent: Option<AgentId>,
    pub kind: EventKind,
}

/// One agent's complete state.
#[derive(Clone, PartialEq, Debug)]
pub struct AgentState {
    id: AgentId,
    cell: Cell,
    phase: Phase,
    alive: bool,
    table: Vec<(AgentId, Offset)>,
    color: Option<f64>,
    probs: PatternProbs,
    class: Option<PatternClass>,
    class_tie: bool,
    pattern: Option<bool>,
    // Heard colors by N4 direction slot (up, left, right, down).
    heard_colors: [Option<f64>; 4],
    // Table neighbors within the consensus (N8) range, ascending by index.
    consensus_peers: Vec<usize>,
    // Degree piggybacked on the next probability share.
    advertised_degree: u32,
    // Static-graph mode: last heard (probs, degree) per peer index.
    last_probs: Vec<(usize, PatternProbs, u32)>,
    // Pattern phase: last heard on/off state per cell index.
    last_states: Vec<(usize, bool)>,
}

impl AgentState {
    fn new(id: AgentId, cell: Cell) -> Self {
        AgentState {
            id,
            cell,
            phase: Phase::Discovery,
            alive: true,
            table: Vec::new(),
            color: None,
            // Uninformative default, matching the classifier's fallthrough
            // class; only ever visible for agents that die before sensing.
            probs: PatternProbs::one_hot(PatternClass::Mottled),
            class: None,
            class_tie: false,
            pattern: None,
            heard_colors: [None; 4],
            consensus_peers: Vec::new(),
            advertised_degree: 0,
            last_probs: Vec::new(),
            last_states: Vec::new(),
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn cell(&self) -> Cell {
        self.cell
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    /// Discovered neighbors as (id, offset) in discovery order.
    pub fn table(&self) -> &[(AgentId, Offset)] {
        &self.table
    }

    pub fn color(&self) -> Option<f64> {
        self.color
    }

    pub fn probs(&self) -> PatternProbs {
        self.probs
    }

    pub fn class(&self) -> Option<PatternClass> {
        self.class
    }

    /// Whether this agent's class choice was an exact argmax tie.
    pub fn class_tie(&self) -> bool {
        self.class_tie
    }

    pub fn pattern(&self) -> Option<bool> {
        self.pattern
    }

    fn knows(&self, id: AgentId) -> bool {
        self.table.iter().any(|&(t, _)| t == id)
    }

    fn last_state_of(&self, cell_idx: usize) -> Option<bool> {
        self.last_states
            .iter()
            .find(|&&(i, _)| i == cell_idx)
            .map(|&(_, s)| s)
    }
}

/// Senses one color: with probability `rho_meas` a uniform draw from
/// [0, 255) replaces the true color.
pub fn sense(true_color: f64, noise: &NoiseConfig, rng: &mut impl RngCore) -> f64 {
    sense_draw(true_color, noise, rng).0
}

fn sense_draw(true_color: f64, noise: &NoiseConfig, rng: &mut impl RngCore) -> (f64, bool) {
    if noise.rho_meas > 0.0 && rng.random::<f64>() < noise.rho_meas {
        (rng.random::<f64>() * 255.0, true)
    } else {
        (true_color, false)
    }
}

/// Decides one (message, receiver) delivery; lost with probability
/// `rho_comm`. The decision depends only on the loss rate, never on the
/// payload.
pub fn deliver(_msg: &Message, noise: &NoiseConfig, rng: &mut impl RngCore) -> bool {
    !(noise.rho_comm > 0.0 && rng.random::<f64>() < noise.rho_comm)
}

/// The TDMA slot of an agent: its id modulo the slot count.
pub fn assign_slot(id: AgentId, slots_per_frame: u32) -> u32 {
    debug_assert!(slots_per_frame >= 1);
    id.0 as u32 % slots_per_frame
}

/// Which of `agents` are muted this frame: any two sharing a slot within
/// Manhattan distance 2 of each other lose their transmissions.
pub fn tdma_collisions(agents: &[(AgentId, Cell)], slots_per_frame: u32) -> Vec<bool> {
    let mut muted = vec![false; agents.len()];
    for i in 0..agents.len() {
        for j in (i + 1)..agents.len() {
            let (a, ca) = agents[i];
            let (b, cb) = agents[j];
            if assign_slot(a, slots_per_frame) != assign_slot(b, slots_per_frame) {
                continue;
            }
            let dist = ca.0.abs_diff(cb.0) + ca.1.abs_diff(cb.1);
            if dist <= 2 {
                muted[i] = true;
                muted[j] = true;
            }
        }
    }
    muted
}

/// The complete record of one pipeline run.
#[derive(Clone, PartialEq, Debug)]
pub struct RunResult {
    /// The downsampled input, before any sensing noise.
    pub blurred: ColorField,
    /// The generator's initial states (each agent's own binarized sense;
    /// dead cells off).
    pub initial: BinaryField,
    /// Per-round consensus values, rounds[0] being the local classification.
    pub trace: ConsensusTrace,
    /// Each agent's chosen class; `None` for agents dead before choosing.
    pub classes: Vec<Option<PatternClass>>,
    /// Whether each agent's choice was an exact tie.
    pub ties: Vec<bool>,
    /// The class most agents agreed on (ties toward mottled, then
    /// horizontal); `None` only if no agent survived to choose.
    pub selected: Option<PatternClass>,
    /// The field after each executed generator step.
    pub pattern_steps: Vec<BinaryField>,
    /// The last pattern state (dead cells off).
    pub final_field: BinaryField,
    pub iterations_used: u32,
    pub convergence: Convergence,
    /// How consensus weights handled losses in this run.
    pub consensus_mode: ConsensusMode,
    pub events: Vec<Event>,
}

/// The swarm simulator; step it frame by frame or drive it whole through
/// [`run_pipeline`].
#[derive(Clone, Debug)]
pub struct Swarm {
    grid: GridTopology,
    blurred: ColorField,
    config: SimConfig,
    agents: Vec<AgentState>,
    frame: u32,
    events: Vec<Event>,
    trace: Vec<Vec<PatternProbs>>,
    initial_pattern: Option<BinaryField>,
    pattern_steps: Vec<BinaryField>,
    pattern_stopped: Option<Convergence>,
}

impl Swarm {
    /// Builds a swarm over the downsampled field, one agent per cell.
    pub fn new(blurred: ColorField, config: SimConfig) -> Result<Self, SimError> {
        let grid = *blurred.grid();
        validate(&config, &grid)?;
        let ids: Vec<u16> = match &config.agent_ids {
            Some(ids) => ids.clone(),
            None => (0..grid.len() as u32).map(|i| i as u16).collect(),
        };
        let agents = grid
            .cells()
            .zip(&ids)
            .map(|(cell, &id)| AgentState::new(AgentId(id), cell))
            .collect();
        Ok(Swarm {
            grid,
            blurred,
            config,
            agents,
            frame: 0,
            events: Vec::new(),
            trace: Vec::new(),
            initial_pattern: None,
            pattern_steps: Vec::new(),
            pattern_stopped: None,
        })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn frame(&self) -> u32 {
        self.frame
    }

    pub fn current_phase(&self) -> Phase {
        self.config.plan.phase_of(self.frame)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Runs the discovery phase from a fresh swarm, populating tables.
    pub fn run_phase0(&mut self) {
        assert_eq!(self.frame, 0, "discovery runs from the start");
        for _ in 0..self.config.plan.discovery_frames {
            self.step_frame();
        }
    }

    /// Advances one frame; returns false once the plan is exhausted.
    pub fn step_frame(&mut self) -> bool {
        let plan = self.config.plan;
        if self.frame >= plan.total_frames() {
            return false;
        }
        let frame = self.frame;
        self.apply_kills(frame);
        if frame == plan.color_start() {
            self.sense_all(frame);
        }
        if frame == plan.consensus_start() {
            self.prepare_consensus();
        }
        if frame == plan.pattern_start() {
            self.seed_pattern();
        }
        let muted = self.compute_muted(frame);
        match plan.phase_of(frame) {
            Phase::Discovery => self.discovery_frame(frame, &muted),
            Phase::ColorShare => self.color_frame(frame, &muted),
            Phase::Consensus => self.consensus_frame(frame, &muted),
            Phase::Pattern => self.pattern_frame(frame, &muted),
            Phase::Done => unreachable!("checked against the plan length"),
        }
        if frame + 1 == plan.consensus_start() {
            self.classify_all();
        }
        if frame + 1 == plan.pattern_start() {
            self.choose_classes(frame);
        }
        self.frame += 1;
        let phase = plan.phase_of(self.frame);
        for a in &mut self.agents {
            a.phase = phase;
        }
        true
    }

    /// Finishes a fully-stepped run into its result record.
    pub fn into_result(mut self) -> RunResult {
        assert_eq!(
            self.frame,
            self.config.plan.total_frames(),
            "run all frames before collecting the result"
        );
        let initial = self
            .initial_pattern
            .take()
            .expect("the pattern phase ran, so the initial field exists");
        let final_field = self
            .pattern_steps
            .last()
            .cloned()
            .unwrap_or_else(|| initial.clone());
        let selected = majority_class(&self.agents);
        RunResult {
            blurred: self.blurred,
            initial,
            trace: ConsensusTrace { rounds: self.trace },
            classes: self.agents.iter().map(|a| a.class).collect(),
            ties: self.agents.iter().map(|a| a.class_tie).collect(),
            selected,
            iterations_used: self.pattern_steps.len() as u32,
            convergence: self.pattern_stopped.unwrap_or(Convergence::BudgetExhausted),
            pattern_steps: self.pattern_steps,
            final_field,
            consensus_mode: self.config.consensus_mode,
            events: self.events,
        }
    }

    fn apply_kills(&mut self, frame: u32) {
        for k in self.config.kills.clone() {
            if k.frame != frame {
                continue;
            }
            if let Some(i) = self.agents.iter().position(|a| a.id == k.id) {
                if self.agents[i].alive {
                    self.agents[i].alive = false;
                    self.events.push(Event {
                        frame,
                        agent: Some(k.id),
                        kind: EventKind::Killed,
                    });
                }
            }
        }
    }

    fn sense_all(&mut self, frame: u32) {
        let noise = self.config.noise;
        for i in 0..self.agents.len() {
            if !self.agents[i].alive {
                continue;
            }
            let truth = self.blurred.get(self.agents[i].cell);
            let mut rng = stream(noise.seed, StreamDomain::Sense, self.agents[i].id.0 as u32, 0, 0);
            let (color, corrupted) = sense_draw(truth, &noise, &mut rng);
            self.agents[i].color = Some(color);
            if corrupted && self.config.log_events {
                self.events.push(Event {
                    frame,
                    agent: Some(self.agents[i].id),
                    kind: EventKind::SenseCorrupted { true_color: truth, sensed: color },
                });
            }
        }
    }

    /// Muted agents this frame (all false unless TDMA is enabled).
    fn compute_muted(&mut self, frame: u32) -> Vec<bool> {
        let mut muted = vec![false; self.agents.len()];
        if !self.config.tdma_enabled {
            return muted;
        }
        let alive: Vec<(usize, (AgentId, Cell))> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.alive)
            .map(|(i, a)| (i, (a.id, a.cell)))
            .collect();
        let pairs: Vec<(AgentId, Cell)> = alive.iter().map(|&(_, p)| p).collect();
        let slot_muted = tdma_collisions(&pairs, self.config.plan.slots_per_frame);
        for (&(i, (id, _)), &m) in alive.iter().zip(&slot_muted) {
            if m {
                muted[i] = true;
                if self.config.log_events {
                    self.events.push(Event {
                        frame,
                        agent: Some(id),
                        kind: EventKind::Muted {
                            slot: assign_slot(id, self.config.plan.slots_per_frame),
                        },
                    });
                }
            }
        }
        muted
    }

    /// This frame's broadcast from every agent (None for dead agents).
    fn broadcasts(&self, phase: Phase) -> Vec<Option<Message>> {
        self.agents
            .iter()
            .map(|a| {
                if !a.alive {
                    return None;
                }
                let payload = match phase {
                    Phase::Discovery => Payload::NeighborAnnounce { known: a.table.clone() },
                    Phase::ColorShare => Payload::ColorShare {
                        color: a.color.expect("live agents sensed at phase entry"),
                    },
                    Phase::Consensus => Payload::PatternProbShare {
                        probs: a.probs,
                        degree: a.advertised_degree,
                    },
                    Phase::Pattern => Payload::PatternColorShare {
                        on: a.pattern.expect("live agents seeded at phase entry"),
                    },
                    Phase::Done => unreachable!("no broadcasts after the last frame"),
                };
                Some(Message { sender: a.id, phase, payload })
            })
            .collect()
    }

    /// Senders within `range` whose broadcast reached `receiver` this
    /// frame, in row-major sender-cell order, plus drop events.
    fn deliveries(
        &self,
        receiver: usize,
        range: Neighborhood,
        muted: &[bool],
        msgs: &[Option<Message>],
        frame: u32,
    ) -> (Vec<usize>, Vec<Event>) {
        let a = &self.agents[receiver];
        let mut delivered = Vec::new();
        let mut events = Vec::new();
        for &o in range.offsets() {
            if !self.grid.offset_in_grid(a.cell, o) {
                continue;
            }
            let cell = (
                (a.cell.0 as i64 + o.dy as i64) as usize,
                (a.cell.1 as i64 + o.dx as i64) as usize,
            );
            let s = self.grid.idx(cell);
            let msg = match &msgs[s] {
                Some(m) => m,
                None => continue,
            };
            if muted[s] {
                continue;
            }
            let mut rng = stream(
                self.config.noise.seed,
                StreamDomain::Deliver,
                frame,
                msg.sender.0 as u32,
                a.id.0 as u32,
            );
            if deliver(msg, &self.config.noise, &mut rng) {
                delivered.push(s);
            } else if self.config.log_events {
                events.push(Event {
                    frame,
                    agent: Some(a.id),
                    kind: EventKind::Dropped { from: msg.sender, to: a.id, phase: msg.phase },
                });
            }
        }
        (delivered, events)
    }

    fn discovery_frame(&mut self, frame: u32, muted: &[bool]) {
        let msgs = self.broadcasts(Phase::Discovery);
        let results = map_agents(self.agents.len(), |i| {
            let a = &self.agents[i];
            if !a.alive {
                return (Vec::new(), Vec::new());
            }
            let (senders, events) = self.deliveries(i, Neighborhood::N4, muted, &msgs, frame);
            let mut additions: Vec<(AgentId, Offset)> = Vec::new();
            let mut learn = |entry: (AgentId, Offset)| {
                if !a.knows(entry.0) && !additions.iter().any(|&(id, _)| id == entry.0) {
                    additions.push(entry);
                }
            };
            for s in senders {
                let sender = &self.agents[s];
                let s_off = offset_between(a.cell, sender.cell);
                learn((sender.id, s_off));
                if let Some(Message { payload: Payload::NeighborAnnounce { known }, .. }) = &msgs[s]
                {
                    for &(nid, noff) in known {
                        let composed = s_off.plus(noff);
                        // Zero means the receiver itself; beyond radius 2 is
                        // outside the tracked neighborhood.
                        if !composed.is_zero() && composed.manhattan() <= 2 {
                            learn((nid, composed));
                        }
                    }
                }
            }
            (additions, events)
        });
        for (i, (additions, events)) in results.into_iter().enumerate() {
            for entry in additions {
                if !self.agents[i].knows(entry.0) {
                    self.agents[i].table.push(entry);
                }
            }
            self.events.extend(events);
        }
    }

    fn color_frame(&mut self, frame: u32, muted: &[bool]) {
        let msgs = self.broadcasts(Phase::ColorShare);
        let results = map_agents(self.agents.len(), |i| {
            let a = &self.agents[i];
            if !a.alive {
                return (Vec::new(), Vec::new());
            }
            let (senders, events) = self.deliveries(i, Neighborhood::N4, muted, &msgs, frame);
            let heard: Vec<(usize, f64)> = senders
                .into_iter()
                .map(|s| {
                    let slot = n4_slot(offset_between(a.cell, self.agents[s].cell));
                    let color = match &msgs[s] {
                        Some(Message { payload: Payload::ColorShare { color }, .. }) => *color,
                        _ => unreachable!("color phase broadcasts are color shares"),
                    };
                    (slot, color)
                })
                .collect();
            (heard, events)
        });
        for (i, (heard, events)) in results.into_iter().enumerate() {
            for (slot, color) in heard {
                self.agents[i].heard_colors[slot] = Some(color);
            }
            self.events.extend(events);
        }
    }

    /// Classifies every live agent from the colors that arrived, falling
    /// back to the reflected direction and then to its own color.
    fn classify_all(&mut self) {
        let threshold = self.config.class_threshold;
        let updates: Vec<Option<PatternProbs>> = map_agents(self.agents.len(), |i| {
            let a = &self.agents[i];
            if !a.alive {
                return None;
            }
            let own = a.color.expect("live agents sensed at phase entry");
            let value = |dir: usize| self.direction_color(a, dir).unwrap_or(own);
            let colors = NeighborColors {
                middle: own,
                top: value(UP),
                left: value(LEFT),
                right: value(RIGHT),
                bottom: value(DOWN),
            };
            Some(classify_local(&second_derivatives(&colors), threshold))
        });
        for (a, update) in self.agents.iter_mut().zip(updates) {
            if let Some(p) = update {
                a.probs = p;
            }
        }
    }

    /// The color this agent should use for one of its four directions: the
    /// reflection-resolved direction's heard color first, the opposite
    /// direction's as a substitute.
    fn direction_color(&self, a: &AgentState, dir: usize) -> Option<f64> {
        let resolved_slot = |d: usize| {
            if self.grid.offset_in_grid(a.cell, Neighborhood::N4.offsets()[d]) {
                d
            } else {
                OPPOSITE[d]
            }
        };
        a.heard_colors[resolved_slot(dir)].or(a.heard_colors[resolved_slot(OPPOSITE[dir])])
    }

    /// Fixes each agent's consensus peer set (discovered neighbors within
    /// N8 range) and initial advertised degree, and opens the trace.
    fn prepare_consensus(&mut self) {
        for i in 0..self.agents.len() {
            let a = &self.agents[i];
            let mut peers: Vec<usize> = a
                .table
                .iter()
                .filter(|(_, o)| o.dx.abs() <= 1 && o.dy.abs() <= 1)
                .map(|&(_, o)| {
                    let cell = (
                        (a.cell.0 as i64 + o.dy as i64) as usize,
                        (a.cell.1 as i64 + o.dx as i64) as usize,
                    );
                    self.grid.idx(cell)
                })
                .collect();
            peers.sort_unstable();
            let degree = peers.len() as u32;
            self.agents[i].consensus_peers = peers;
            self.agents[i].advertised_degree = degree;
        }
        self.trace.push(self.agents.iter().map(|a| a.probs).collect());
    }

    fn consensus_frame(&mut self, frame: u32, muted: &[bool]) {
        let msgs = self.broadcasts(Phase::Consensus);
        let mode = self.config.consensus_mode;
        let results = map_agents(self.agents.len(), |i| {
            let a = &self.agents[i];
            if !a.alive {
                return (None, Vec::new(), Vec::new());
            }
            let (senders, events) = self.deliveries(i, Neighborhood::N8, muted, &msgs, frame);
            let share = |s: usize| -> (PatternProbs, u32) {
                match &msgs[s] {
                    Some(Message { payload: Payload::PatternProbShare { probs, degree }, .. }) => {
                        (*probs, *degree)
                    }
                    _ => unreachable!("consensus phase broadcasts are probability shares"),
                }
            };
            match mode {
                ConsensusMode::LossAdapted => {
                    let heard: Vec<(PatternProbs, usize)> = senders
                        .iter()
                        .map(|&s| {
                            let (p, d) = share(s);
                            (p, d as usize)
                        })
                        .collect();
                    let next = weighted_update(a.probs, heard.len(), &heard);
                    (Some((next, heard.len() as u32)), Vec::new(), events)
                }
                ConsensusMode::StaticGraph => {
                    // Fixed peer set; fresh values when delivered, last-known
                    // otherwise, and fold never-heard peers into self.
                    let mut heard: Vec<(PatternProbs, usize)> = Vec::new();
                    let mut remembered: Vec<(usize, PatternProbs, u32)> = Vec::new();
                    for &peer in &a.consensus_peers {
                        if senders.contains(&peer) {
                            let (p, d) = share(peer);
                            heard.push((p, d as usize));
                            remembered.push((peer, p, d));
                        } else if let Some(&(_, p, d)) =
                            a.last_probs.iter().find(|&&(j, _, _)| j == peer)
                        {
                            heard.push((p, d as usize));
                        }
                    }
                    let next = weighted_update(a.probs, a.consensus_peers.len(), &heard);
                    (Some((next, a.advertised_degree)), remembered, events)
                }
            }
        });
        for (i, (update, remembered, events)) in results.into_iter().enumerate() {
            if let Some((probs, degree)) = update {
                self.agents[i].probs = probs;
                self.agents[i].advertised_degree = degree;
            }
            for (peer, p, d) in remembered {
                let a = &mut self.agents[i];
                if let Some(entry) = a.last_probs.iter_mut().find(|e| e.0 == peer) {
                    *entry = (peer, p, d);
                } else {
                    a.last_probs.push((peer, p, d));
                }
            }
            self.events.extend(events);
        }
        self.trace.push(self.agents.iter().map(|a| a.probs).collect());
    }

    /// Locks in each live agent's pattern class from its consensus value.
    fn choose_classes(&mut self, frame: u32) {
        for i in 0..self.agents.len() {
            if !self.agents[i].alive {
                continue;
            }
            let probs = self.agents[i].probs;
            let class = argmax_pattern(probs);
            let tie = argmax_is_tie(probs);
            self.agents[i].class = Some(class);
            self.agents[i].class_tie = tie;
            if tie {
                self.events.push(Event {
                    frame,
                    agent: Some(self.agents[i].id),
                    kind: EventKind::ClassTie { chosen: class },
                });
            }
        }
    }

    /// Seeds each live agent's pattern state from its own sensed color.
    fn seed_pattern(&mut self) {
        let threshold = self.config.binarize_threshold;
        for a in &mut self.agents {
            if a.alive {
                let color = a.color.expect("live agents sensed in the color phase");
                a.pattern = Some(color >= threshold);
            }
        }
        self.initial_pattern = Some(self.pattern_field());
    }

    /// The current on/off field; dead or unseeded agents read as off.
    fn pattern_field(&self) -> BinaryField {
        BinaryField::from_fn(self.grid, |cell| {
            self.agents[self.grid.idx(cell)].pattern.unwrap_or(false)
        })
    }

    fn pattern_frame(&mut self, frame: u32, muted: &[bool]) {
        if self.pattern_stopped.is_some() {
            return;
        }
        let cap = self
            .config
            .plan
            .pattern_frames
            .min(self.config.generator.max_iterations);
        let msgs = self.broadcasts(Phase::Pattern);
        let params = self.config.generator;
        let results = map_agents(self.agents.len(), |i| {
            let a = &self.agents[i];
            if !a.alive {
                return (None, Vec::new(), Vec::new());
            }
            let (senders, events) = self.deliveries(i, Neighborhood::Vn2, muted, &msgs, frame);
            let heard: Vec<(usize, bool)> = senders
                .into_iter()
                .map(|s| {
                    let on = match &msgs[s] {
                        Some(Message { payload: Payload::PatternColorShare { on }, .. }) => *on,
                        _ => unreachable!("pattern phase broadcasts are state shares"),
                    };
                    (s, on)
                })
                .collect();
            let class = a.class.expect("live agents chose a class at consensus end");
            let region = region_for(class);
            let own = a.pattern.expect("live agents seeded at phase entry");
            let state_of = |cell: Cell| -> bool {
                if cell == a.cell {
                    return own;
                }
                let idx = self.grid.idx(cell);
                if let Some(&(_, on)) = heard.iter().find(|&&(s, _)| s == idx) {
                    on
                } else {
                    // Last-known value, or off for a never-heard neighbor.
                    a.last_state_of(idx).unwrap_or(false)
                }
            };
            let s = strength_with(a.cell, &self.grid, &region, &params, state_of);
            (Some(s > 0.0), heard, events)
        });
        for (i, (update, heard, events)) in results.into_iter().enumerate() {
            if let Some(on) = update {
                self.agents[i].pattern = Some(on);
            }
            for (cell_idx, on) in heard {
                let a = &mut self.agents[i];
                if let Some(entry) = a.last_states.iter_mut().find(|e| e.0 == cell_idx) {
                    entry.1 = on;
                } else {
                    a.last_states.push((cell_idx, on));
                }
            }
            self.events.extend(events);
        }
        let field = self.pattern_field();
        self.pattern_steps.push(field);
        let k = self.pattern_steps.len();
        let initial = self
            .initial_pattern
            .as_ref()
            .expect("seeded at phase entry");
        let current = &self.pattern_steps[k - 1];
        let previous = if k == 1 { initial } else { &self.pattern_steps[k - 2] };
        let stopped = if current == previous {
            Some(Convergence::FixedPoint)
        } else if k >= 2 {
            let two_back = if k == 2 { initial } else { &self.pattern_steps[k - 3] };
            (current == two_back).then_some(Convergence::Cycle)
        } else {
            None
        };
        let stopped = stopped.or_else(|| (k as u32 >= cap).then_some(Convergence::BudgetExhausted));
        if let Some(convergence) = stopped {
            self.pattern_stopped = Some(convergence);
            self.events.push(Event {
                frame,
                agent: None,
                kind: EventKind::PatternStopped { convergence, iterations: k as u32 },
            });
        }
    }
}

const UP: usize = 0;
const LEFT: usize = 1;
const RIGHT: usize = 2;
const DOWN: usize = 3;
/// Opposite N4 direction slot, in the offset table's order.
const OPPOSITE: [usize; 4] = [DOWN, RIGHT, LEFT, UP];

fn n4_slot(offset: Offset) -> usize {
    Neighborhood::N4
        .offsets()
        .iter()
        .position(|&o| o == offset)
        .expect("orthogonal senders sit at N4 offsets")
}

/// Offset of `to` relative to `from`.
fn offset_between(from: Cell, to: Cell) -> Offset {
    Offset::new(to.1 as i32 - from.1 as i32, to.0 as i32 - from.0 as i32)
}

/// The class most live agents chose; ties toward mottled, then horizontal.
fn majority_class(agents: &[AgentState]) -> Option<PatternClass> {
    let mut counts = [0usize; 3];
    for a in agents {
        if let Some(class) = a.class {
            let slot = match class {
                PatternClass::Mottled => 0,
                PatternClass::Horizontal => 1,
                PatternClass::Vertical => 2,
            };
            counts[slot] += 1;
        }
    }
    let order = [PatternClass::Mottled, PatternClass::Horizontal, PatternClass::Vertical];
    let best = (0..3).max_by_key(|&i| counts[i])?;
    (counts[best] > 0).then(|| order[best])
}

fn validate(config: &SimConfig, grid: &GridTopology) -> Result<(), SimError> {
    for (name, value) in [
        ("rho_meas", config.noise.rho_meas),
        ("rho_comm", config.noise.rho_comm),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(SimError::ProbabilityOutOfRange { name, value });
        }
    }
    let plan = &config.plan;
    for (what, frames) in [
        ("discovery frames", plan.discovery_frames),
        ("color frames", plan.color_frames),
        ("consensus frames", plan.consensus_frames),
        ("pattern frames", plan.pattern_frames),
        ("slots per frame", plan.slots_per_frame),
    ] {
        if frames == 0 {
            let _ = what;
            return Err(SimError::InvalidPlan("all frame and slot counts must be positive"));
        }
    }
    if config.generator.w1 <= 0.0 || config.generator.w1.is_nan() {
        return Err(SimError::InvalidGenerator("activator value must be positive"));
    }
    if config.generator.w2 >= 0.0 || config.generator.w2.is_nan() {
        return Err(SimError::InvalidGenerator("inhibitor value must be negative"));
    }
    if config.generator.max_iterations == 0 {
        return Err(SimError::InvalidGenerator("iteration budget must be positive"));
    }
    let ids: Vec<u16> = match &config.agent_ids {
        Some(ids) => {
            if ids.len() != grid.len() {
                return Err(SimError::IdCountMismatch { expected: grid.len(), found: ids.len() });
            }
            ids.clone()
        }
        None => (0..grid.len() as u32).map(|i| i as u16).collect(),
    };
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(SimError::DuplicateId(w[0]));
        }
    }
    for kill in &config.kills {
        if !ids.contains(&kill.id.0) {
            return Err(SimError::UnknownKillId(kill.id.0));
        }
    }
    Ok(())
}

/// Maps a function over agent indices, in parallel when the `rayon`
/// feature is on; output order is index order either way.
#[cfg(feature = "rayon")]
fn map_agents<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "rayon"))]
fn map_agents<T>(len: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..len).map(f).collect()
}

/// Runs the full pipeline: downsample the image, then drive the swarm
/// through all four phases.
pub fn run_pipeline(
    image: &Image,
    grid: GridTopology,
    config: &SimConfig,
) -> Result<RunResult, SimError> {
    let blurred = block_downsample(image, grid)?;
    let mut swarm = Swarm::new(blurred, config.clone())?;
    while swarm.step_frame() {}
    Ok(swarm.into_result())
}
