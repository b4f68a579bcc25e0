//! The four-layer point/frame-pair flow graph.
//!
//! ```text
//! Source ──(n(n−1)/2, c_c)──▶ Point ──(1, c_s)──▶ FramePair ──(M, c_b)──▶ Sink
//! ```
//!
//! One point vertex per map point seen by at least two keyframes, one
//! frame-pair vertex per covisible keyframe pair. Every point connects to each
//! of the `n(n−1)/2` pairs of keyframes observing it.

mod cost;
pub mod dimacs;

use std::collections::{BTreeMap, HashMap};

use crate::map::{KeyframeId, MapError, PointId, SlamMap};
use crate::mcmf::{Arc, Network, NetworkError};

pub use cost::{
    baseline_cost, connectivity_cost, connectivity_table, point_capacity, spatial_cost,
};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("connectivity cost undefined for n = {n} with m = {m} (requires 2 <= n <= m)")]
    ConnectivityDomain { n: u64, m: u64 },
    #[error("connectivity cost overflows 64-bit integers")]
    CostOverflow,
    #[error("map has no point observed by two or more keyframes")]
    NoEligiblePoints,
    #[error("no observation of point {point} in keyframe {keyframe}")]
    MissingObservation {
        point: PointId,
        keyframe: KeyframeId,
    },
    #[error("invalid graph config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    /// Capacity `M` of every FramePair→Sink edge.
    pub capacity_m: i64,
    pub box_width: f64,
    pub box_height: f64,
    pub enable_cc: bool,
    pub enable_cs: bool,
    pub enable_cb: bool,
    /// Cost used in place of a disabled term.
    pub disabled_cost: i64,
    /// Multiplier turning map units into meters for the baseline cost.
    pub distance_scale: f64,
}

impl GraphConfig {
    pub fn new(capacity_m: i64) -> Self {
        Self {
            capacity_m,
            box_width: 64.0,
            box_height: 48.0,
            enable_cc: true,
            enable_cs: true,
            enable_cb: true,
            disabled_cost: 1,
            distance_scale: 1.0,
        }
    }

    pub fn with_costs(mut self, cc: bool, cs: bool, cb: bool) -> Self {
        self.enable_cc = cc;
        self.enable_cs = cs;
        self.enable_cb = cb;
        self
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.capacity_m < 1 {
            return Err(GraphError::Config("capacity_m must be >= 1"));
        }
        if !(self.box_width >= 1.0 && self.box_height >= 1.0) {
            return Err(GraphError::Config("box dimensions must be >= 1"));
        }
        if self.disabled_cost < 0 {
            return Err(GraphError::Config("disabled cost must be >= 0"));
        }
        if !(self.distance_scale > 0.0 && self.distance_scale.is_finite()) {
            return Err(GraphError::Config("distance scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexId {
    Source,
    Point(PointId),
    /// Ordered `a < b`.
    FramePair(KeyframeId, KeyframeId),
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub capacity: i64,
    pub cost: i64,
}

/// Flow graph built from a map. Vertex 0 is the source, then point vertices
/// by ascending id, frame-pair vertices by ascending `(a, b)`, and the sink
/// last. Edges are Source→Point (by point), then Point→FramePair (by point,
/// then pair), then FramePair→Sink (by pair).
#[derive(Debug, Clone)]
pub struct FlowGraph {
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    edge_lookup: HashMap<(usize, usize), usize>,
    network: Network,
    /// Observing-frame count of each point vertex, parallel to `points()`.
    counts: Vec<u64>,
    max_count: u64,
    excluded: Vec<PointId>,
}

impl FlowGraph {
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex_index(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn num_edges(&self) -> usize {
        self.network.arcs().len()
    }

    pub fn edge(&self, i: usize) -> FlowEdge {
        let a = self.network.arcs()[i];
        FlowEdge {
            from: self.vertices[a.from],
            to: self.vertices[a.to],
            capacity: a.capacity,
            cost: a.cost,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = FlowEdge> + '_ {
        (0..self.num_edges()).map(move |i| self.edge(i))
    }

    pub fn edge_index(&self, from: &VertexId, to: &VertexId) -> Option<usize> {
        let (u, v) = (self.vertex_index(from)?, self.vertex_index(to)?);
        self.edge_lookup.get(&(u, v)).copied()
    }

    /// Point vertices in ascending id order.
    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        self.vertices[1..=self.counts.len()]
            .iter()
            .map(|v| match v {
                VertexId::Point(p) => *p,
                _ => unreachable!("point layer"),
            })
    }

    pub fn num_points(&self) -> usize {
        self.counts.len()
    }

    /// Index of the Source→Point edge of the `i`-th point vertex.
    pub fn source_edge(&self, i: usize) -> usize {
        i
    }

    pub fn observation_counts(&self) -> &[u64] {
        &self.counts
    }

    /// Largest observing-frame count among graph points (the anchor `m`).
    pub fn max_count(&self) -> u64 {
        self.max_count
    }

    /// Points left out because fewer than two keyframes observe them.
    pub fn excluded_points(&self) -> &[PointId] {
        &self.excluded
    }
}

/// Number of other keypoints on `keyframe` inside the closed box of size
/// `box_width × box_height` centered on the keypoint of `point`.
pub fn nearby_count(
    map: &SlamMap,
    point: PointId,
    keyframe: KeyframeId,
    box_width: f64,
    box_height: f64,
) -> Result<u64, GraphError> {
    let reference = map
        .observation(point, keyframe)
        .ok_or(GraphError::MissingObservation { point, keyframe })?;
    let (hw, hh) = (box_width / 2.0, box_height / 2.0);
    Ok(map
        .keyframe_observations(keyframe)
        .filter(|o| o.point_id != point)
        .filter(|o| (o.u - reference.u).abs() <= hw && (o.v - reference.v).abs() <= hh)
        .count() as u64)
}

/// Nearby counts for every observation, indexed like `map.observations()`.
fn all_nearby_counts(map: &SlamMap, box_width: f64, box_height: f64) -> Vec<u64> {
    let obs = map.observations();
    let mut per_frame: BTreeMap<KeyframeId, Vec<usize>> = BTreeMap::new();
    for (i, o) in obs.iter().enumerate() {
        per_frame.entry(o.keyframe_id).or_default().push(i);
    }
    let (hw, hh) = (box_width / 2.0, box_height / 2.0);
    let mut counts = vec![0u64; obs.len()];
    for mut idx in per_frame.into_values() {
        idx.sort_by(|&a, &b| obs[a].u.total_cmp(&obs[b].u));
        let mut lo = 0;
        for &i in &idx {
            let (u, v) = (obs[i].u, obs[i].v);
            while u - obs[idx[lo]].u > hw {
                lo += 1;
            }
            let mut c = 0;
            for &j in &idx[lo..] {
                if obs[j].u - u > hw {
                    break;
                }
                if j != i && (obs[j].v - v).abs() <= hh {
                    c += 1;
                }
            }
            counts[i] = c;
        }
    }
    counts
}

pub fn build_graph(map: &SlamMap, config: &GraphConfig) -> Result<FlowGraph, GraphError> {
    config.check()?;
    let nearby = if config.enable_cs {
        all_nearby_counts(map, config.box_width, config.box_height)
    } else {
        Vec::new()
    };
    // Observation slice offsets per point, for indexing `nearby`.
    let obs_all = map.observations();

    let mut eligible: Vec<(PointId, usize, usize)> = Vec::new(); // (id, start, len)
    let mut excluded = Vec::new();
    let mut start = 0;
    for p in map.points() {
        let len = map.point_observations(p.id).len();
        if len >= 2 {
            eligible.push((p.id, start, len));
        } else {
            excluded.push(p.id);
        }
        start += len;
    }
    debug_assert_eq!(start, obs_all.len());
    if eligible.is_empty() {
        return Err(GraphError::NoEligiblePoints);
    }
    let max_count = eligible.iter().map(|e| e.2 as u64).max().unwrap();
    let cc_table = connectivity_table(max_count)?;

    // Frame-pair vertices in (a, b) order.
    let mut pair_set: BTreeMap<(KeyframeId, KeyframeId), usize> = BTreeMap::new();
    for &(_, s, len) in &eligible {
        let obs = &obs_all[s..s + len];
        for (i, a) in obs.iter().enumerate() {
            for b in &obs[i + 1..] {
                pair_set.insert((a.keyframe_id, b.keyframe_id), 0);
            }
        }
    }
    let num_points = eligible.len();
    let first_pair = 1 + num_points;
    for (k, slot) in pair_set.values_mut().enumerate() {
        *slot = first_pair + k;
    }
    let sink = first_pair + pair_set.len();

    let mut vertices = Vec::with_capacity(sink + 1);
    vertices.push(VertexId::Source);
    vertices.extend(eligible.iter().map(|e| VertexId::Point(e.0)));
    vertices.extend(pair_set.keys().map(|&(a, b)| VertexId::FramePair(a, b)));
    vertices.push(VertexId::Sink);

    let mut arcs = Vec::new();
    let mut counts = Vec::with_capacity(num_points);
    for (i, &(_, _, len)) in eligible.iter().enumerate() {
        let n = len as u64;
        counts.push(n);
        let cost = if config.enable_cc {
            cc_table[(n - 2) as usize]
        } else {
            config.disabled_cost
        };
        arcs.push(Arc {
            from: 0,
            to: 1 + i,
            capacity: point_capacity(n),
            cost,
        });
    }
    for (i, &(_, s, len)) in eligible.iter().enumerate() {
        let obs = &obs_all[s..s + len];
        for j in 0..len {
            for k in j + 1..len {
                let pair = pair_set[&(obs[j].keyframe_id, obs[k].keyframe_id)];
                let cost = if config.enable_cs {
                    spatial_cost(nearby[s + j], nearby[s + k])
                } else {
                    config.disabled_cost
                };
                arcs.push(Arc {
                    from: 1 + i,
                    to: pair,
                    capacity: 1,
                    cost,
                });
            }
        }
    }
    for (&(a, b), &v) in &pair_set {
        let cost = if config.enable_cb {
            let ca = map.keyframe(a).ok_or(MapError::UnknownKeyframe(a))?;
            let cb = map.keyframe(b).ok_or(MapError::UnknownKeyframe(b))?;
            let d = (ca.pose.center() - cb.pose.center()).norm() * config.distance_scale;
            baseline_cost(d)
        } else {
            config.disabled_cost
        };
        arcs.push(Arc {
            from: v,
            to: sink,
            capacity: config.capacity_m,
            cost,
        });
    }

    let index = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let edge_lookup = arcs
        .iter()
        .enumerate()
        .map(|(i, a)| ((a.from, a.to), i))
        .collect();
    let network = Network::new(sink + 1, 0, sink, arcs)?;
    Ok(FlowGraph {
        vertices,
        index,
        edge_lookup,
        network,
        counts,
        max_count,
        excluded,
    })
}
