//! Text artifacts: CSV traces, the event log, and the run summary.
//!
//! All output is rendered with Rust's shortest-round-trip float
//! formatting, so identical runs produce byte-identical files.

use camo_core::sim::{Event, EventKind, RunResult};
use camo_core::{ConsensusTrace, GridTopology, SweepRow};
use std::fmt::Write;

/// The consensus trace as CSV: one row per (round, cell), with
/// `round 0` holding the local classifications.
pub fn consensus_csv(trace: &ConsensusTrace, grid: &GridTopology) -> String {
    let mut out = String::from("round,cell_row,cell_col,p_h,p_v,p_m\n");
    for (round, values) in trace.rounds.iter().enumerate() {
        for (idx, p) in values.iter().enumerate() {
            let (row, col) = grid.cell(idx);
            writeln!(out, "{},{},{},{},{},{}", round, row, col, p.p_h, p.p_v, p.p_m)
                .expect("string writes cannot fail");
        }
    }
    out
}

/// Sweep results as CSV, one row per (mode, rho) point. The spread is the
/// population standard deviation of the per-trial differences.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("mode,rho,trials,mean_diff,stddev_diff\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.mode,
            row.rho,
            row.trials,
            row.mean_diff,
            stddev(&row.diffs, row.mean_diff)
        )
        .expect("string writes cannot fail");
    }
    out
}

fn stddev(diffs: &[u32], mean: f64) -> f64 {
    if diffs.is_empty() {
        return 0.0;
    }
    let var = diffs
        .iter()
        .map(|&d| {
            let e = d as f64 - mean;
            e * e
        })
        .sum::<f64>()
        / diffs.len() as f64;
    var.sqrt()
}

/// The event log: one `frame,agent,event,detail` line per event, in
/// chronological order. Swarm-wide events carry `-` in the agent column.
pub fn events_log(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        let agent = match e.agent {
            Some(id) => id.0.to_string(),
            None => "-".into(),
        };
        let (name, detail) = match &e.kind {
            EventKind::Killed => ("killed", String::new()),
            EventKind::SenseCorrupted { true_color, sensed } => {
                ("sense-corrupted", format!("true={} sensed={}", true_color, sensed))
            }
            EventKind::Muted { slot } => ("muted", format!("slot={}", slot)),
            EventKind::Dropped { from, to, phase } => {
                ("dropped", format!("from={} to={} phase={}", from.0, to.0, phase))
            }
            EventKind::ClassTie { chosen } => ("class-tie", format!("chosen={}", chosen)),
            EventKind::PatternStopped { convergence, iterations } => (
                "pattern-stopped",
                format!("convergence={} iterations={}", convergence, iterations),
            ),
        };
        writeln!(out, "{},{},{},{}", e.frame, agent, name, detail)
            .expect("string writes cannot fail");
    }
    out
}

/// The two summary lines a full run prints.
pub fn run_summary(result: &RunResult) -> String {
    let class = match result.selected {
        Some(c) => c.to_string(),
        None => "none".into(),
    };
    format!(
        "class={}\nconvergence={} iterations={}\n",
        class, result.convergence, result.iterations_used
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use camo_core::sim::{NoiseConfig, SimConfig};
    use camo_core::{run_pipeline, synth, GridTopology, PatternProbs, SweepMode};

    fn g8() -> GridTopology {
        GridTopology::new(8, 8).unwrap()
    }

    #[test]
    fn consensus_rows_carry_round_and_cell_coordinates() {
        let trace = ConsensusTrace {
            rounds: vec![
                vec![PatternProbs::new(1.0, 0.0, 0.0); 64],
                vec![PatternProbs::new(0.25, 0.5, 0.25); 64],
            ],
        };
        let csv = consensus_csv(&trace, &g8());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 64);
        assert_eq!(lines[0], "round,cell_row,cell_col,p_h,p_v,p_m");
        assert_eq!(lines[1], "0,0,0,1,0,0");
        assert_eq!(lines[64], "0,7,7,1,0,0");
        assert_eq!(lines[65], "1,0,0,0.25,0.5,0.25");
    }

    #[test]
    fn sweep_rows_render_mean_and_spread() {
        let rows = vec![SweepRow {
            rho: 0.1,
            mode: SweepMode::Both,
            mean_diff: 2.5,
            trials: 4,
            diffs: vec![1, 2, 3, 4],
        }];
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "mode,rho,trials,mean_diff,stddev_diff");
        // Population stddev of 1..4 about 2.5 is sqrt(1.25).
        assert_eq!(lines[1], format!("both,0.1,4,2.5,{}", (1.25f64).sqrt()));
    }

    #[test]
    fn event_lines_name_the_agent_or_the_swarm() {
        let config = SimConfig {
            noise: NoiseConfig { rho_comm: 0.5, seed: 8, ..Default::default() },
            ..Default::default()
        };
        let result = run_pipeline(&synth::checkerboard(128, 128, 16), g8(), &config).unwrap();
        let log = events_log(&result.events);
        assert!(log.lines().any(|l| l.contains(",dropped,from=")));
        assert!(log.lines().any(|l| l.contains(",-,pattern-stopped,convergence=")));
        for line in log.lines() {
            assert_eq!(line.matches(',').count(), 3, "line {:?}", line);
        }
    }

    #[test]
    fn summary_prints_class_and_convergence() {
        let result =
            run_pipeline(&synth::horizontal_stripes(128, 128, 16), g8(), &SimConfig::default())
                .unwrap();
        let summary = run_summary(&result);
        assert_eq!(summary, "class=Horizontal\nconvergence=fixed-point iterations=1\n");
    }
}
