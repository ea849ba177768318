//! `PBENV v1`: line-delimited JSON between the engine and an agent.
//!
//! Two directions share the same message bodies.
//!
//! Serving (the agent drives): the engine writes
//! `{"type":"hello","schema":"PBENV v1"}` and then answers requests.
//!
//! | request | reply |
//! |---|---|
//! | `{"type":"hello","schema":"PBENV v1"}` | `{"type":"hello","schema":"PBENV v1"}` |
//! | `{"type":"reset","spec":{..},"seed":s}` | `{"type":"observation","observation":{..},"done":b}` |
//! | `{"type":"maps"}` | `{"type":"maps","orientation_mask":m,"stable_maps":[..]}` |
//! | `{"type":"step","o":o,"x":x,"y":y}` | `{"type":"step","observation":{..}?,"r_v":..,"r_waste":..,"reward":..,"done":b,"utilization":..}` |
//! | `{"type":"close"}` | `{"type":"bye"}` |
//!
//! Failures reply `{"type":"error","kind":k,"message":..}`. A rejected step
//! ends the episode (`"done":true`); further steps need a new reset.
//!
//! External policy (the engine drives): after the hello line the engine sends
//! `{"type":"act","step":t,"observation":{..},"orientation_mask":m,"stable_maps":[..]}`
//! and expects `{"o":o,"x":x,"y":y}` back. Episodes end with
//! `{"type":"episode_end","utilization":u}` and the session with
//! `{"type":"close"}`.
//!
//! A stable map is `{"w","d","h","nx","ny","runs":[..]}`: run lengths over the
//! row-major anchor grid, alternating false/true and starting with false.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{generate, SequenceKind, SequenceSpec};
use crate::env::{Action, EnvConfig, EnvState, Observation};
use crate::error::{Error, Result};
use crate::geometry::{Grid, GridSpec, Orientation};
use crate::policies::Policy;
use crate::stability::{CheckerMode, StableActionMap};

pub const PROTOCOL_SCHEMA: &str = "PBENV v1";

/// Run lengths of a boolean grid in row-major order, starting with a false
/// run (possibly zero).
pub fn rle_encode(grid: &Grid<bool>) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0;
    for &v in grid.as_slice() {
        if v == current {
            len += 1;
        } else {
            runs.push(len);
            current = v;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

pub fn rle_decode(nx: usize, ny: usize, runs: &[usize]) -> Result<Grid<bool>> {
    let mut cells = Vec::with_capacity(nx * ny);
    for (i, &r) in runs.iter().enumerate() {
        cells.extend(std::iter::repeat_n(i % 2 == 1, r));
    }
    if cells.len() != nx * ny {
        return Err(Error::Protocol(format!(
            "run lengths cover {} cells, grid has {}",
            cells.len(),
            nx * ny
        )));
    }
    Ok(Grid::from_vec(nx, ny, cells))
}

pub fn observation_json(obs: &Observation) -> Value {
    json!({
        "heightmap": obs.heightmap.rows().collect::<Vec<_>>(),
        "item": [obs.item.w, obs.item.d, obs.item.h],
    })
}

pub fn maps_json(maps: &[Arc<StableActionMap>]) -> Value {
    Value::Array(
        maps.iter()
            .map(|m| {
                let g = m.grid();
                json!({
                    "w": m.dims().w,
                    "d": m.dims().d,
                    "h": m.dims().h,
                    "nx": g.nx(),
                    "ny": g.ny(),
                    "runs": rle_encode(g),
                })
            })
            .collect(),
    )
}

/// Episode parameters of a reset request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetSpec {
    #[serde(default = "default_kind")]
    pub kind: SequenceKind,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_min")]
    pub min: f64,
    #[serde(default = "default_max")]
    pub max: f64,
    #[serde(default = "default_bin")]
    pub bin: [f64; 3],
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub checker: Option<CheckerMode>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn default_kind() -> SequenceKind {
    SequenceKind::Rs
}
fn default_count() -> usize {
    100
}
fn default_min() -> f64 {
    0.03
}
fn default_max() -> f64 {
    0.3
}
fn default_bin() -> [f64; 3] {
    [0.6, 0.6, 0.6]
}
fn default_resolution() -> f64 {
    crate::geometry::DEFAULT_RESOLUTION
}

impl Default for ResetSpec {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            count: default_count(),
            min: default_min(),
            max: default_max(),
            bin: default_bin(),
            resolution: default_resolution(),
            checker: None,
            gamma: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Request {
    Hello { schema: String },
    Reset {
        #[serde(default)]
        spec: Option<ResetSpec>,
        #[serde(default)]
        seed: u64,
    },
    Maps,
    Step { o: usize, x: usize, y: usize },
    Close,
}

fn error_reply(kind: &str, message: impl std::fmt::Display) -> Value {
    json!({"type": "error", "kind": kind, "message": message.to_string()})
}

fn send<W: Write>(out: &mut W, value: &Value) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Error::Transport(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Environment server for one agent connection.
#[derive(Default)]
pub struct Server {
    state: Option<EnvState>,
}

impl Server {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    fn reset(&mut self, spec: ResetSpec, seed: u64) -> Result<Value> {
        let grid = GridSpec::new(spec.bin[0], spec.bin[1], spec.bin[2], spec.resolution)?;
        let seq = generate(&SequenceSpec {
            kind: spec.kind,
            seed,
            count: spec.count,
            min: spec.min,
            max: spec.max,
            grid,
        })?;
        let mut config = EnvConfig::default();
        if let Some(mode) = spec.checker {
            config.mode = mode;
        }
        if let Some(gamma) = spec.gamma {
            config.gamma = gamma;
        }
        let state = EnvState::reset(grid, seq, config)?;
        let reply = json!({
            "type": "observation",
            "observation": state.observation().ok().map(|o| observation_json(&o)),
            "done": state.is_done(),
        });
        self.state = Some(state);
        Ok(reply)
    }

    fn live(&mut self) -> std::result::Result<&mut EnvState, Value> {
        self.state
            .as_mut()
            .ok_or_else(|| error_reply("protocol", "no episode; send reset first"))
    }

    /// Reply for one request line; `None` after a close request.
    pub fn handle_line(&mut self, line: &str) -> Option<Value> {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Some(error_reply("protocol", format!("malformed request: {e}"))),
        };
        let reply = match request {
            Request::Hello { schema } if schema == PROTOCOL_SCHEMA => {
                json!({"type": "hello", "schema": PROTOCOL_SCHEMA})
            }
            Request::Hello { schema } => error_reply(
                "protocol",
                format!("unsupported schema '{schema}', expected {PROTOCOL_SCHEMA}"),
            ),
            Request::Reset { spec, seed } => self
                .reset(spec.unwrap_or_default(), seed)
                .unwrap_or_else(|e| error_reply("reset", e)),
            Request::Maps => match self.live() {
                Err(e) => e,
                Ok(state) => json!({
                    "type": "maps",
                    "orientation_mask": state.orientation_mask(),
                    "stable_maps": state.maps().map(maps_json).unwrap_or(Value::Array(Vec::new())),
                    "done": state.is_done(),
                }),
            },
            Request::Step { o, x, y } => match self.live() {
                Err(e) => e,
                Ok(state) => step_reply(state, o, x, y),
            },
            Request::Close => return None,
        };
        Some(reply)
    }

    /// Serves requests until close or end of input.
    pub fn serve<R: BufRead, W: Write>(&mut self, input: R, mut output: W) -> Result<()> {
        send(&mut output, &json!({"type": "hello", "schema": PROTOCOL_SCHEMA}))?;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match self.handle_line(&line) {
                Some(reply) => send(&mut output, &reply)?,
                None => {
                    send(&mut output, &json!({"type": "bye"}))?;
                    break;
                }
            }
        }
        Ok(())
    }
}

fn step_reply(state: &mut EnvState, o: usize, x: usize, y: usize) -> Value {
    if state.is_done() {
        return error_reply("episode_done", Error::EpisodeDone);
    }
    let Some(orientation) = Orientation::new(o) else {
        state.terminate_rejected();
        return json!({
            "type": "error",
            "kind": "rejected_action",
            "message": format!("orientation {o} is not in 0..6"),
            "done": true,
        });
    };
    match state.step(Action::new(orientation, x, y)) {
        Ok((reward, done)) => json!({
            "type": "step",
            "observation": state.observation().ok().map(|o| observation_json(&o)),
            "r_v": reward.r_v::<f64>(),
            "r_waste": reward.r_waste::<f64>(),
            "reward": reward.total::<f64>(),
            "done": done,
            "utilization": state.utilization(),
        }),
        Err(e @ Error::RejectedAction { .. }) => {
            state.terminate_rejected();
            json!({"type": "error", "kind": "rejected_action", "message": e.to_string(), "done": true})
        }
        Err(e) => error_reply("step", e),
    }
}

#[derive(Debug, Deserialize)]
struct AgentReply {
    o: usize,
    x: usize,
    y: usize,
}

/// Policy answered by an agent over a line channel. Replies are validated by
/// the environment, not trusted.
pub struct ExternalAgent<R, W> {
    input: R,
    output: W,
    steps: usize,
    child: Option<Child>,
}

impl<R: BufRead, W: Write> ExternalAgent<R, W> {
    /// Wraps a connected channel and sends the hello line.
    pub fn connect(input: R, mut output: W) -> Result<Self> {
        send(&mut output, &json!({"type": "hello", "schema": PROTOCOL_SCHEMA}))
            .map_err(|e| Error::Transport(format!("agent hello failed: {e}")))?;
        Ok(Self {
            input,
            output,
            steps: 0,
            child: None,
        })
    }

    fn request(&mut self, message: &Value) -> Result<String> {
        send(&mut self.output, message).map_err(|e| Error::Transport(format!("agent write failed: {e}")))?;
        let mut line = String::new();
        let n = self
            .input
            .read_line(&mut line)
            .map_err(|e| Error::Transport(format!("agent read failed: {e}")))?;
        if n == 0 {
            return Err(Error::Transport("agent closed the connection".into()));
        }
        Ok(line)
    }

    /// Tells the agent an episode finished; the agent does not reply.
    pub fn end_episode(&mut self, utilization: f64) -> Result<()> {
        self.steps = 0;
        send(
            &mut self.output,
            &json!({"type": "episode_end", "utilization": utilization}),
        )
        .map_err(|e| Error::Transport(e.to_string()))
    }

    pub fn close(mut self) -> Result<()> {
        let _ = send(&mut self.output, &json!({"type": "close"}));
        drop(self.output);
        if let Some(mut child) = self.child.take() {
            child.wait()?;
        }
        Ok(())
    }
}

impl ExternalAgent<BufReader<ChildStdout>, ChildStdin> {
    /// Runs `command` through the shell with piped standard streams.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Transport(format!("cannot start agent '{command}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut agent = Self::connect(stdout, stdin)?;
        agent.child = Some(child);
        Ok(agent)
    }
}

impl<R: BufRead, W: Write> Policy for ExternalAgent<R, W> {
    fn name(&self) -> &str {
        "external"
    }

    fn act(&mut self, state: &EnvState) -> Result<Action> {
        let obs = state.observation()?;
        let maps = state.maps().ok_or(Error::EpisodeDone)?;
        let message = json!({
            "type": "act",
            "step": self.steps,
            "observation": observation_json(&obs),
            "orientation_mask": state.orientation_mask(),
            "stable_maps": maps_json(maps),
        });
        let line = self.request(&message)?;
        let reply: AgentReply = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("bad agent reply {:?}: {e}", line.trim())))?;
        let orientation = Orientation::new(reply.o).ok_or_else(|| Error::RejectedAction {
            orientation: reply.o,
            x: reply.x,
            y: reply.y,
            reason: "orientation out of range".into(),
        })?;
        self.steps += 1;
        Ok(Action::new(orientation, reply.x, reply.y))
    }
}
