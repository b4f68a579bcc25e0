//! Flow-based point selection and keyframe culling.
//!
//! [`sparsify`] builds the flow graph, solves it, keeps every point whose
//! source edge carries strictly more than `theta × capacity` units, and culls
//! keyframes left with too few kept observations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::graph::{build_graph, FlowGraph, GraphConfig, GraphError};
use crate::map::{KeyframeId, MapData, PointId, SlamMap};
use crate::mcmf::{solve, FlowResult};

/// Selection threshold as an exact fraction `num / den` of source-edge
/// capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaRatio {
    num: u64,
    den: u64,
}

const THETA_DENOMINATOR: u64 = 1_000_000_000;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ThetaRatio {
    pub const HALF: ThetaRatio = ThetaRatio { num: 1, den: 2 };

    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 || num > den {
            return None;
        }
        let g = gcd(num, den).max(1);
        Some(Self {
            num: num / g,
            den: den / g,
        })
    }

    /// Rounds to nine decimal places; `None` outside `[0, 1]`.
    pub fn from_f64(ratio: f64) -> Option<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return None;
        }
        Self::new(
            (ratio * THETA_DENOMINATOR as f64).round() as u64,
            THETA_DENOMINATOR,
        )
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `flow > ratio × capacity`, exactly.
    pub fn exceeded_by(&self, flow: i64, capacity: i64) -> bool {
        i128::from(flow) * i128::from(self.den) > i128::from(capacity) * i128::from(self.num)
    }
}

impl Default for ThetaRatio {
    fn default() -> Self {
        Self::HALF
    }
}

impl fmt::Display for ThetaRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsifyConfig {
    pub graph: GraphConfig,
    pub theta_ratio: ThetaRatio,
    pub keyframe_min_points: usize,
    /// Drop points seen by fewer than two keyframes (they are never in the
    /// graph). When false they are kept unconditionally.
    pub drop_underviewed: bool,
}

impl SparsifyConfig {
    pub fn new(capacity_m: i64) -> Self {
        Self {
            graph: GraphConfig::new(capacity_m),
            theta_ratio: ThetaRatio::HALF,
            keyframe_min_points: 10,
            drop_underviewed: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointFlow {
    pub flow: i64,
    pub capacity: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub graph_build_ms: f64,
    pub solve_ms: f64,
}

impl Timings {
    pub fn total_ms(&self) -> f64 {
        self.graph_build_ms + self.solve_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub kept_point_ids: BTreeSet<PointId>,
    pub dropped_point_ids: BTreeSet<PointId>,
    pub culled_keyframe_ids: BTreeSet<KeyframeId>,
    /// Source-edge flow and capacity of every point that entered the graph.
    pub point_flows: BTreeMap<PointId, PointFlow>,
    pub total_flow: i64,
    pub total_cost: i64,
    pub timings: Timings,
    pub input_points: usize,
    pub input_keyframes: usize,
}

impl SelectionResult {
    /// Wraps a point set chosen by some other selector, with the same
    /// keyframe culling as flow selection. Flows and totals stay empty.
    pub fn from_points(
        map: &SlamMap,
        kept: BTreeSet<PointId>,
        keyframe_min_points: usize,
        selection_ms: f64,
    ) -> Self {
        let dropped = map
            .points()
            .iter()
            .map(|p| p.id)
            .filter(|p| !kept.contains(p))
            .collect();
        let culled = cull_keyframes(map, &kept, keyframe_min_points);
        Self {
            kept_point_ids: kept,
            dropped_point_ids: dropped,
            culled_keyframe_ids: culled,
            point_flows: BTreeMap::new(),
            total_flow: 0,
            total_cost: 0,
            timings: Timings {
                graph_build_ms: 0.0,
                solve_ms: selection_ms,
            },
            input_points: map.points().len(),
            input_keyframes: map.keyframes().len(),
        }
    }

    /// Percentage of input map points kept.
    pub fn mp_percent(&self) -> f64 {
        percent(self.kept_point_ids.len(), self.input_points)
    }

    /// Percentage of input keyframes kept.
    pub fn kf_percent(&self) -> f64 {
        percent(
            self.input_keyframes - self.culled_keyframe_ids.len(),
            self.input_keyframes,
        )
    }

    /// JSON-serializable summary. Timings are the only non-deterministic
    /// field; leave them out to compare runs byte for byte.
    pub fn to_report(&self, with_timings: bool) -> SelectionReport {
        SelectionReport {
            input_points: self.input_points,
            input_keyframes: self.input_keyframes,
            kept_points: self.kept_point_ids.len(),
            dropped_points: self.dropped_point_ids.len(),
            culled_keyframes: self.culled_keyframe_ids.len(),
            mp_percent: self.mp_percent(),
            kf_percent: self.kf_percent(),
            total_flow: self.total_flow,
            total_cost: self.total_cost,
            timings: with_timings.then_some(self.timings),
            kept_point_ids: self.kept_point_ids.iter().map(|p| p.0).collect(),
            dropped_point_ids: self.dropped_point_ids.iter().map(|p| p.0).collect(),
            culled_keyframe_ids: self.culled_keyframe_ids.iter().map(|k| k.0).collect(),
            point_flows: self
                .point_flows
                .iter()
                .map(|(p, f)| PointFlowRecord {
                    point: p.0,
                    flow: f.flow,
                    capacity: f.capacity,
                })
                .collect(),
        }
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointFlowRecord {
    pub point: u64,
    pub flow: i64,
    pub capacity: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub input_points: usize,
    pub input_keyframes: usize,
    pub kept_points: usize,
    pub dropped_points: usize,
    pub culled_keyframes: usize,
    pub mp_percent: f64,
    pub kf_percent: f64,
    pub total_flow: i64,
    pub total_cost: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    pub kept_point_ids: Vec<u64>,
    pub dropped_point_ids: Vec<u64>,
    pub culled_keyframe_ids: Vec<u64>,
    pub point_flows: Vec<PointFlowRecord>,
}

/// Points whose source-edge flow strictly exceeds `theta × capacity`.
pub fn select_points(
    result: &FlowResult,
    graph: &FlowGraph,
    theta: ThetaRatio,
) -> BTreeSet<PointId> {
    let arcs = graph.network().arcs();
    graph
        .points()
        .enumerate()
        .filter(|&(i, _)| {
            let e = graph.source_edge(i);
            theta.exceeded_by(result.flows[e], arcs[e].capacity)
        })
        .map(|(_, p)| p)
        .collect()
}

/// Keyframes with fewer than `min_points` observations of kept points. The
/// first and last keyframe in temporal order are never culled.
pub fn cull_keyframes(
    map: &SlamMap,
    kept: &BTreeSet<PointId>,
    min_points: usize,
) -> BTreeSet<KeyframeId> {
    let ordered = map.keyframes_by_seq();
    let last = ordered.len().saturating_sub(1);
    ordered
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != 0 && i != last)
        .filter(|(_, kf)| {
            map.keyframe_observations(kf.id)
                .filter(|o| kept.contains(&o.point_id))
                .count()
                < min_points
        })
        .map(|(_, kf)| kf.id)
        .collect()
}

struct FlowSelection {
    kept: BTreeSet<PointId>,
    point_flows: BTreeMap<PointId, PointFlow>,
    total_flow: i64,
    total_cost: i64,
    timings: Timings,
}

fn flow_select(map: &SlamMap, config: &SparsifyConfig) -> Result<FlowSelection, GraphError> {
    let t0 = Instant::now();
    let graph = build_graph(map, &config.graph)?;
    let t1 = Instant::now();
    let flow = solve(graph.network());
    let t2 = Instant::now();

    let arcs = graph.network().arcs();
    let point_flows = graph
        .points()
        .enumerate()
        .map(|(i, p)| {
            let e = graph.source_edge(i);
            (
                p,
                PointFlow {
                    flow: flow.flows[e],
                    capacity: arcs[e].capacity,
                },
            )
        })
        .collect();
    Ok(FlowSelection {
        kept: select_points(&flow, &graph, config.theta_ratio),
        point_flows,
        total_flow: flow.total_flow,
        total_cost: flow.total_cost,
        timings: Timings {
            graph_build_ms: (t1 - t0).as_secs_f64() * 1e3,
            solve_ms: (t2 - t1).as_secs_f64() * 1e3,
        },
    })
}

fn finish(map: &SlamMap, config: &SparsifyConfig, mut sel: FlowSelection) -> SelectionResult {
    if !config.drop_underviewed {
        sel.kept.extend(map.underviewed_points());
    }
    let mut result = SelectionResult::from_points(map, sel.kept, config.keyframe_min_points, 0.0);
    result.point_flows = sel.point_flows;
    result.total_flow = sel.total_flow;
    result.total_cost = sel.total_cost;
    result.timings = sel.timings;
    result
}

pub fn sparsify(map: &SlamMap, config: &SparsifyConfig) -> Result<SelectionResult, GraphError> {
    let sel = flow_select(map, config)?;
    Ok(finish(map, config, sel))
}

/// Sparsifies consecutive windows of `window` keyframes (temporal order)
/// independently, emulating per-local-map invocation. A point is kept if any
/// window keeps it. Per-point flows, totals, and timings are summed over
/// windows; keyframe culling runs once on the union.
pub fn sparsify_windowed(
    map: &SlamMap,
    config: &SparsifyConfig,
    window: usize,
) -> Result<SelectionResult, GraphError> {
    let window = window.max(2);
    let ordered = map.keyframes_by_seq();
    let mut acc = FlowSelection {
        kept: BTreeSet::new(),
        point_flows: BTreeMap::new(),
        total_flow: 0,
        total_cost: 0,
        timings: Timings::default(),
    };
    let mut any = false;
    for chunk in ordered.chunks(window) {
        let frames: BTreeSet<KeyframeId> = chunk.iter().map(|k| k.id).collect();
        let observations: Vec<_> = map
            .observations()
            .iter()
            .filter(|o| frames.contains(&o.keyframe_id))
            .copied()
            .collect();
        let seen: BTreeSet<PointId> = observations.iter().map(|o| o.point_id).collect();
        let local = SlamMap::from_data(MapData {
            keyframes: chunk.iter().map(|k| **k).collect(),
            points: map
                .points()
                .iter()
                .filter(|p| seen.contains(&p.id))
                .copied()
                .collect(),
            observations,
        })?;
        let sel = match flow_select(&local, config) {
            Ok(sel) => sel,
            Err(GraphError::NoEligiblePoints) => continue,
            Err(e) => return Err(e),
        };
        any = true;
        acc.kept.extend(sel.kept);
        for (p, f) in sel.point_flows {
            let entry = acc.point_flows.entry(p).or_insert(PointFlow {
                flow: 0,
                capacity: 0,
            });
            entry.flow += f.flow;
            entry.capacity += f.capacity;
        }
        acc.total_flow += sel.total_flow;
        acc.total_cost += sel.total_cost;
        acc.timings.graph_build_ms += sel.timings.graph_build_ms;
        acc.timings.solve_ms += sel.timings.solve_ms;
    }
    if !any {
        return Err(GraphError::NoEligiblePoints);
    }
    Ok(finish(map, config, acc))
}

/// The map restricted to kept points, surviving keyframes, and observations
/// between them.
pub fn apply_selection(map: &SlamMap, selection: &SelectionResult) -> SlamMap {
    retain(
        map,
        &selection.kept_point_ids,
        &selection.culled_keyframe_ids,
    )
}

/// Same as [`apply_selection`] for an arbitrary point subset.
pub fn retain(
    map: &SlamMap,
    kept_points: &BTreeSet<PointId>,
    culled_keyframes: &BTreeSet<KeyframeId>,
) -> SlamMap {
    let data = MapData {
        keyframes: map
            .keyframes()
            .iter()
            .filter(|k| !culled_keyframes.contains(&k.id))
            .copied()
            .collect(),
        points: map
            .points()
            .iter()
            .filter(|p| kept_points.contains(&p.id))
            .copied()
            .collect(),
        observations: map
            .observations()
            .iter()
            .filter(|o| {
                kept_points.contains(&o.point_id) && !culled_keyframes.contains(&o.keyframe_id)
            })
            .copied()
            .collect(),
    };
    SlamMap::from_data(data).expect("a subset of a valid map is valid")
}
