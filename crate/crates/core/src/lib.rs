//! Map point sparsification for feature-based SLAM.
//!
//! Point selection is posed as a minimum-cost maximum-flow problem on a
//! bipartite graph between map points and covisible keyframe pairs. Edge
//! costs reward points seen by many keyframes, keypoints in sparsely
//! populated image regions, and wide-baseline keyframe pairs; the
//! frame-pair→sink capacity `M` bounds how many points each pair keeps.
//!
//! ```no_run
//! use flowsparse::{map, sparsify::{sparsify, apply_selection, SparsifyConfig}};
//!
//! let slam_map = map::load_map_from_path("map.json")?;
//! let selection = sparsify(&slam_map, &SparsifyConfig::new(100))?;
//! let smaller = apply_selection(&slam_map, &selection);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod baselines;
pub mod graph;
pub mod map;
pub mod mcmf;
pub mod metrics;
pub mod sparsify;
pub mod synth;

pub use graph::{build_graph, FlowGraph, GraphConfig, GraphError, VertexId};
pub use map::{KeyframeId, MapError, PointId, Pose, SlamMap};
pub use mcmf::{solve, FlowResult, Network};
pub use sparsify::{apply_selection, sparsify, SelectionResult, SparsifyConfig};
