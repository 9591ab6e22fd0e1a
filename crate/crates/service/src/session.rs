//! Per-connection editing session.

use gsdeform::arap::deform_from;
use gsdeform::config::{DEFAULT_ITERATIONS, DEFAULT_SKIN_NEIGHBORS};
use gsdeform::{
    apply_lbs, bind, build_control_graph, ControlGraph, DeformResult, FactorizedSystem, GaussianCloud,
    GraphOptions, HandleSet, LoadOptions, SkinBinding, Vec3, Weighting,
};

use crate::frame::UpdateFrame;
use crate::protocol::{parse_message, ClientMessage, Drag, ErrorCode, ServerMessage, PROTOCOL_VERSION};

/// One outgoing message: JSON text or a binary update frame.
#[derive(Clone, Debug, PartialEq)]
pub enum Reply {
    Text(ServerMessage),
    Binary(Vec<u8>),
}

struct Rig {
    graph: ControlGraph,
    binding: SkinBinding,
}

struct Active {
    handles: HandleSet,
    system: FactorizedSystem,
    last: DeformResult,
}

/// State machine `load → sample → set_handles → drag*`.
///
/// Loading resets everything after it, sampling resets the handles. The
/// revision counter never goes backwards within a session.
pub struct Session {
    cloud: Option<GaussianCloud>,
    rig: Option<Rig>,
    active: Option<Active>,
    posed: Option<GaussianCloud>,
    revision: u64,
    iterations: usize,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

fn bad_state(detail: &str) -> Vec<Reply> {
    vec![Reply::Text(ServerMessage::error(ErrorCode::BadState, detail))]
}

fn invalid(err: impl std::fmt::Display) -> Vec<Reply> {
    vec![Reply::Text(ServerMessage::error(ErrorCode::Invalid, err.to_string()))]
}

fn rows(points: &[Vec3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

impl Session {
    pub fn new() -> Self {
        Self { cloud: None, rig: None, active: None, posed: None, revision: 0, iterations: DEFAULT_ITERATIONS }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn graph(&self) -> Option<&ControlGraph> {
        self.rig.as_ref().map(|r| &r.graph)
    }

    /// Latest deformed control positions, if handles are set.
    pub fn control_positions(&self) -> Option<&[Vec3]> {
        self.active.as_ref().map(|a| a.last.positions.as_slice())
    }

    /// The cloud in its current pose.
    pub fn current_cloud(&self) -> Option<&GaussianCloud> {
        self.posed.as_ref().or(self.cloud.as_ref())
    }

    /// Parses and handles one text message.
    pub fn handle_text(&mut self, text: &str) -> Vec<Reply> {
        match parse_message(text) {
            Ok(msg) => self.handle(msg),
            Err(reply) => vec![Reply::Text(reply)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<Reply> {
        match msg {
            ClientMessage::Hello => vec![Reply::Text(ServerMessage::HelloAck { protocol: PROTOCOL_VERSION })],
            ClientMessage::Load(m) => self.load(&m.path),
            ClientMessage::Sample(m) => self.sample(m.n, m.k, m.seed),
            ClientMessage::SetHandles(m) => self.set_handles(m.indices),
            ClientMessage::Drag(m) => self.drag(m),
            ClientMessage::Save(m) => self.save(m.path),
        }
    }

    fn load(&mut self, path: &str) -> Vec<Reply> {
        let cloud = match GaussianCloud::load(path, LoadOptions::default()) {
            Ok(c) => c,
            Err(e) => return invalid(e),
        };
        let gaussians = cloud.len();
        self.cloud = Some(cloud);
        self.rig = None;
        self.active = None;
        self.posed = None;
        vec![Reply::Text(ServerMessage::Loaded { gaussians })]
    }

    fn sample(&mut self, n: usize, k: usize, seed: u64) -> Vec<Reply> {
        let Some(cloud) = &self.cloud else {
            return bad_state("no cloud loaded");
        };
        let opts = GraphOptions { control_count: n, neighbors: k, seed, weighting: Weighting::Uniform };
        let rig = build_control_graph(cloud, &opts)
            .and_then(|graph| Ok(Rig { binding: bind(cloud, &graph, DEFAULT_SKIN_NEIGHBORS.min(graph.len()))?, graph }));
        match rig {
            Ok(rig) => {
                let controls = rows(rig.graph.rest_positions());
                self.rig = Some(rig);
                self.active = None;
                self.posed = None;
                vec![Reply::Text(ServerMessage::Sampled { controls })]
            }
            Err(e) => invalid(e),
        }
    }

    /// New handles start where their nodes currently are, so changing the
    /// handle set never moves the object.
    fn set_handles(&mut self, indices: Vec<usize>) -> Vec<Reply> {
        let Some(rig) = &self.rig else {
            return bad_state(if self.cloud.is_none() { "no cloud loaded" } else { "no control graph sampled" });
        };
        if indices.is_empty() {
            return invalid("at least one handle is required");
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= rig.graph.len()) {
            return invalid(format!("handle index {bad} out of range for {} nodes", rig.graph.len()));
        }
        let current = self.active.as_ref().map(|a| &a.last.positions[..]).unwrap_or(rig.graph.rest_positions());
        let targets = indices.iter().map(|&i| current[i]).collect();
        let built = HandleSet::new(indices.clone(), targets)
            .and_then(|handles| Ok((FactorizedSystem::assemble(&rig.graph, handles.indices())?, handles)));
        match built {
            Ok((system, handles)) => {
                let last = match self.active.take() {
                    Some(a) => a.last,
                    None => DeformResult::rest(&rig.graph),
                };
                self.active = Some(Active { handles, system, last });
                vec![Reply::Text(ServerMessage::HandlesSet { indices })]
            }
            Err(e) => invalid(e),
        }
    }

    fn drag(&mut self, msg: Drag) -> Vec<Reply> {
        if self.cloud.is_none() {
            return bad_state("no cloud loaded");
        }
        let (Some(rig), Some(active)) = (&self.rig, &mut self.active) else {
            return bad_state("no handles set");
        };
        let targets: Vec<Vec3> = msg.targets.iter().map(|t| Vec3::from(*t)).collect();
        let handles = match active.handles.with_targets(targets) {
            Ok(h) => h,
            Err(e) => return invalid(e),
        };
        // unchanged targets keep the previous solution instead of iterating further
        let unchanged = handles == active.handles && self.posed.is_some();
        if !unchanged {
            let result =
                match deform_from(&active.system, &rig.graph, &handles, &active.last.positions, self.iterations) {
                    Ok(r) => r,
                    Err(e) => return invalid(e),
                };
            let cloud = self.cloud.as_ref().expect("checked above");
            match apply_lbs(cloud, &rig.binding, &rig.graph, &result) {
                Ok(posed) => self.posed = Some(posed),
                Err(e) => return invalid(e),
            }
            active.last = result;
            active.handles = handles;
        }
        self.revision += 1;
        let posed = self.posed.as_ref().expect("set by this or an earlier drag");
        vec![
            Reply::Text(ServerMessage::Update {
                seq: msg.seq,
                revision: self.revision,
                controls: rows(&active.last.positions),
            }),
            Reply::Binary(UpdateFrame::from_cloud(self.revision, posed).encode()),
        ]
    }

    fn save(&mut self, path: String) -> Vec<Reply> {
        let Some(cloud) = self.current_cloud() else {
            return bad_state("no cloud loaded");
        };
        match cloud.save(&path, LoadOptions::default()) {
            Ok(()) => vec![Reply::Text(ServerMessage::Saved { path })],
            Err(e) => invalid(e),
        }
    }
}

/// Drops every drag that is directly followed by another drag, so a backlog
/// of queued drags collapses to the newest one. Other messages keep their order.
pub fn coalesce<E>(batch: Vec<Result<ClientMessage, E>>) -> Vec<Result<ClientMessage, E>> {
    let mut out: Vec<Result<ClientMessage, E>> = Vec::with_capacity(batch.len());
    for msg in batch {
        if matches!(msg, Ok(ClientMessage::Drag(_))) && matches!(out.last(), Some(Ok(ClientMessage::Drag(_)))) {
            out.pop();
        }
        out.push(msg);
    }
    out
}
