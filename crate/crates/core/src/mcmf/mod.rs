//! Integer minimum-cost maximum-flow.
//!
//! [`solve`] is a primal-dual successive-shortest-path solver: each phase runs
//! Dijkstra on reduced costs, updates the vertex potentials, then saturates
//! the zero-reduced-cost subgraph with a blocking flow. All arcs are scanned
//! in arc-index order, so the result depends only on the input.

pub mod oracle;
mod solver;
mod verify;

pub use solver::solve;
pub use verify::{check_feasible, verify_optimality};

/// A directed arc with integer capacity and cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

/// A flow network on vertices `0..num_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    num_nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetworkError {
    #[error("source and sink must be distinct vertices")]
    SourceIsSink,
    #[error("vertex {vertex} out of range (network has {num_nodes} vertices)")]
    VertexOutOfRange { vertex: usize, num_nodes: usize },
    #[error("arc {arc} has negative capacity {capacity}")]
    NegativeCapacity { arc: usize, capacity: i64 },
    #[error("arc {arc} has negative cost {cost}")]
    NegativeCost { arc: usize, cost: i64 },
    #[error("arc {arc} is a self-loop")]
    SelfLoop { arc: usize },
    #[error("capacity/cost magnitudes could overflow 64-bit arithmetic")]
    Overflow,
}

impl Network {
    pub fn new(
        num_nodes: usize,
        source: usize,
        sink: usize,
        arcs: Vec<Arc>,
    ) -> Result<Self, NetworkError> {
        for &vertex in &[source, sink] {
            if vertex >= num_nodes {
                return Err(NetworkError::VertexOutOfRange { vertex, num_nodes });
            }
        }
        if source == sink {
            return Err(NetworkError::SourceIsSink);
        }
        let mut cap_sum: i128 = 0;
        let mut max_cost: i128 = 0;
        for (i, a) in arcs.iter().enumerate() {
            for &vertex in &[a.from, a.to] {
                if vertex >= num_nodes {
                    return Err(NetworkError::VertexOutOfRange { vertex, num_nodes });
                }
            }
            if a.from == a.to {
                return Err(NetworkError::SelfLoop { arc: i });
            }
            if a.capacity < 0 {
                return Err(NetworkError::NegativeCapacity {
                    arc: i,
                    capacity: a.capacity,
                });
            }
            if a.cost < 0 {
                return Err(NetworkError::NegativeCost {
                    arc: i,
                    cost: a.cost,
                });
            }
            cap_sum += i128::from(a.capacity);
            max_cost = max_cost.max(i128::from(a.cost));
        }
        // Path costs are bounded by num_arcs * max_cost and totals by
        // cap_sum * num_arcs * max_cost; keep both well inside i64.
        let bound = cap_sum.max(1) * (arcs.len() as i128).max(1) * max_cost.max(1);
        if bound >= i128::from(i64::MAX / 4) {
            return Err(NetworkError::Overflow);
        }
        Ok(Self {
            num_nodes,
            source,
            sink,
            arcs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Total cost `Σ f(e)·c(e)` of a per-arc flow vector.
    pub fn cost_of(&self, flows: &[i64]) -> i64 {
        self.arcs.iter().zip(flows).map(|(a, f)| a.cost * f).sum()
    }

    /// Net flow leaving the source.
    pub fn value_of(&self, flows: &[i64]) -> i64 {
        self.arcs
            .iter()
            .zip(flows)
            .map(|(a, &f)| {
                if a.from == self.source {
                    f
                } else if a.to == self.source {
                    -f
                } else {
                    0
                }
            })
            .sum()
    }
}

/// Per-arc flow with its value and cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Indexed like [`Network::arcs`].
    pub flows: Vec<i64>,
    pub total_flow: i64,
    pub total_cost: i64,
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random layered DAG: source alone in layer 0, sink alone in the last
    /// layer, arcs only from a layer to a later one, no parallel arcs.
    pub fn random_layered(seed: u64, max_nodes: usize, max_cap: i64, max_cost: i64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=max_nodes);
        let inner = n - 2;
        let layers = if inner == 0 {
            0
        } else {
            rng.random_range(1..=inner.min(4))
        };
        // layer of each inner vertex 1..=layers
        let mut layer = vec![0usize; n];
        for l in layer.iter_mut().take(inner + 1).skip(1) {
            *l = rng.random_range(1..=layers.max(1));
        }
        let sink = n - 1;
        layer[sink] = layers + 1;
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if layer[v] > layer[u] && rng.random_bool(0.45) {
                    arcs.push(Arc {
                        from: u,
                        to: v,
                        capacity: rng.random_range(1..=max_cap),
                        cost: rng.random_range(0..=max_cost),
                    });
                }
            }
        }
        Network::new(n, 0, sink, arcs).unwrap()
    }
}
