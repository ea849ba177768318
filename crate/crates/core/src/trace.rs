//! JSON-lines episode traces (`PBTRACE v1`) and oracle verdict reports
//! (`PBVERDICT v1`).
//!
//! A trace starts with one header object carrying `"schema": "PBTRACE v1"`,
//! followed by one object per step:
//!
//! ```text
//! {"step":0,"action":{"o":2,"x":0,"y":0},"r_v":0.0012,"r_waste":0.0,"utilization":0.0012,"voxels":[2048,0]}
//! ```
//!
//! `voxels` holds the placed and newly trapped voxel counts, so the reward
//! fractions can be recomputed exactly from `bin_voxels` in the header.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::StabilityVerdict;
use crate::runner::{EpisodeRun, PlacementVerdict};

pub const TRACE_SCHEMA: &str = "PBTRACE v1";
pub const VERDICT_SCHEMA: &str = "PBVERDICT v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub episode: usize,
    pub seed: u64,
    pub policy: String,
    pub checker: String,
    pub kind: String,
    pub items: usize,
    pub bin_voxels: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceAction {
    pub o: usize,
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub action: TraceAction,
    pub r_v: f64,
    pub r_waste: f64,
    pub utilization: f64,
    pub voxels: (u64, u64),
}

pub fn trace_steps(run: &EpisodeRun) -> Vec<TraceStep> {
    run.steps
        .iter()
        .enumerate()
        .map(|(step, s)| TraceStep {
            step,
            action: TraceAction {
                o: s.action.orientation.index(),
                x: s.action.x,
                y: s.action.y,
            },
            r_v: s.reward.r_v::<f64>(),
            r_waste: s.reward.r_waste::<f64>(),
            utilization: s.placed_voxels as f64 / run.bin_voxels as f64,
            voxels: (s.reward.placed_voxels, s.reward.waste_voxels),
        })
        .collect()
}

fn json_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_trace<W: Write>(out: &mut W, header: &TraceHeader, run: &EpisodeRun) -> Result<()> {
    json_line(out, header)?;
    for step in trace_steps(run) {
        json_line(out, &step)?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<(TraceHeader, Vec<TraceStep>)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty trace".into(),
    })?;
    let header: TraceHeader = serde_json::from_str(&first?).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.schema != TRACE_SCHEMA {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected schema {TRACE_SCHEMA}, found {}", header.schema),
        });
    }
    let mut steps = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        steps.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok((header, steps))
}

#[derive(Serialize)]
struct VerdictHeader<'a> {
    schema: &'a str,
    #[serde(flatten)]
    context: serde_json::Value,
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    step: usize,
    stable: bool,
    first_infeasible: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<&'a str>,
}

/// Verdict report from per-step settle verdicts. `context` is merged into the
/// header line.
pub fn write_verdicts<W: Write>(out: &mut W, context: serde_json::Value, verdicts: &[StabilityVerdict]) -> Result<()> {
    json_line(
        out,
        &VerdictHeader {
            schema: VERDICT_SCHEMA,
            context,
        },
    )?;
    for (step, v) in verdicts.iter().enumerate() {
        json_line(
            out,
            &VerdictLine {
                step,
                stable: v.stable,
                first_infeasible: v.first_infeasible,
                diagnostic: v.diagnostic.as_deref(),
            },
        )?;
    }
    Ok(())
}

/// Verdict report for the random placement comparison.
pub fn write_placement_verdicts<W: Write>(
    out: &mut W,
    context: serde_json::Value,
    verdicts: &[PlacementVerdict],
) -> Result<()> {
    json_line(
        out,
        &VerdictHeader {
            schema: VERDICT_SCHEMA,
            context,
        },
    )?;
    for v in verdicts {
        json_line(out, v)?;
    }
    Ok(())
}
