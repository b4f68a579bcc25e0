use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{FlowResult, Network};

const INF: i64 = i64::MAX / 4;
const UNREACHED: u32 = u32::MAX;

/// Residual graph. Residual edge `2i` is arc `i` forward, `2i + 1` its reverse.
struct Residual {
    head: Vec<usize>,
    residual: Vec<i64>,
    cost: Vec<i64>,
    // CSR adjacency of residual edges leaving each vertex, ascending edge id.
    offsets: Vec<usize>,
    adj: Vec<usize>,
}

impl Residual {
    fn new(net: &Network) -> Self {
        let m = net.arcs().len();
        let mut head = Vec::with_capacity(2 * m);
        let mut residual = Vec::with_capacity(2 * m);
        let mut cost = Vec::with_capacity(2 * m);
        let mut degree = vec![0usize; net.num_nodes() + 1];
        for a in net.arcs() {
            head.extend([a.to, a.from]);
            residual.extend([a.capacity, 0]);
            cost.extend([a.cost, -a.cost]);
            degree[a.from] += 1;
            degree[a.to] += 1;
        }
        let mut offsets = vec![0usize; net.num_nodes() + 1];
        for v in 0..net.num_nodes() {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0usize; 2 * m];
        for (i, a) in net.arcs().iter().enumerate() {
            // Pushing in arc order keeps each vertex's list sorted by edge id.
            adj[fill[a.from]] = 2 * i;
            fill[a.from] += 1;
            adj[fill[a.to]] = 2 * i + 1;
            fill[a.to] += 1;
        }
        Self {
            head,
            residual,
            cost,
            offsets,
            adj,
        }
    }

    fn out(&self, v: usize) -> &[usize] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }
}

struct PrimalDual<'a> {
    net: &'a Network,
    g: Residual,
    potential: Vec<i64>,
    dist: Vec<i64>,
    level: Vec<u32>,
    current: Vec<usize>,
}

impl<'a> PrimalDual<'a> {
    fn new(net: &'a Network) -> Self {
        let n = net.num_nodes();
        Self {
            net,
            g: Residual::new(net),
            // Costs are non-negative, so zero potentials are feasible.
            potential: vec![0; n],
            dist: vec![INF; n],
            level: vec![UNREACHED; n],
            current: vec![0; n],
        }
    }

    #[inline]
    fn reduced(&self, u: usize, e: usize) -> i64 {
        self.g.cost[e] + self.potential[u] - self.potential[self.g.head[e]]
    }

    /// Shortest reduced-cost distances from the source; returns false when
    /// the sink is unreachable.
    fn dijkstra(&mut self) -> bool {
        self.dist.fill(INF);
        let s = self.net.source();
        self.dist[s] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            for &e in self.g.out(u) {
                if self.g.residual[e] == 0 {
                    continue;
                }
                let v = self.g.head[e];
                let nd = d + self.reduced(u, e);
                debug_assert!(nd >= d, "negative reduced cost");
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        let dt = self.dist[self.net.sink()];
        if dt >= INF {
            return false;
        }
        for (p, &d) in self.potential.iter_mut().zip(&self.dist) {
            *p += d.min(dt);
        }
        true
    }

    #[inline]
    fn admissible(&self, u: usize, e: usize) -> bool {
        self.g.residual[e] > 0 && self.reduced(u, e) == 0
    }

    fn bfs_levels(&mut self) -> bool {
        self.level.fill(UNREACHED);
        let s = self.net.source();
        let t = self.net.sink();
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                continue;
            }
            for &e in self.g.out(u) {
                let v = self.g.head[e];
                if self.level[v] == UNREACHED && self.admissible(u, e) {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != UNREACHED
    }

    /// Blocking flow on the admissible level graph, depth-first in edge order.
    fn blocking_flow(&mut self) -> i64 {
        let s = self.net.source();
        let t = self.net.sink();
        for v in 0..self.net.num_nodes() {
            self.current[v] = self.g.offsets[v];
        }
        let mut pushed = 0;
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let delta = path
                    .iter()
                    .map(|&e| self.g.residual[e])
                    .min()
                    .expect("non-empty path");
                for &e in &path {
                    self.g.residual[e] -= delta;
                    self.g.residual[e ^ 1] += delta;
                }
                pushed += delta;
                path.clear();
                u = s;
                continue;
            }
            let end = self.g.offsets[u + 1];
            let mut next = None;
            while self.current[u] < end {
                let e = self.g.adj[self.current[u]];
                let v = self.g.head[e];
                if self.level[v] == self.level[u].wrapping_add(1) && self.admissible(u, e) {
                    next = Some((e, v));
                    break;
                }
                self.current[u] += 1;
            }
            match next {
                Some((e, v)) => {
                    path.push(e);
                    u = v;
                }
                None => {
                    // Dead end for the rest of this level graph.
                    self.level[u] = UNREACHED;
                    match path.pop() {
                        None => break,
                        Some(e) => {
                            u = self.g.head[e ^ 1];
                            self.current[u] += 1;
                        }
                    }
                }
            }
        }
        pushed
    }

    fn run(mut self) -> FlowResult {
        let mut total_flow = 0;
        while self.dijkstra() {
            while self.bfs_levels() {
                total_flow += self.blocking_flow();
            }
        }
        let flows: Vec<i64> = (0..self.net.arcs().len())
            .map(|i| self.g.residual[2 * i + 1])
            .collect();
        let total_cost = self.net.cost_of(&flows);
        debug_assert_eq!(total_flow, self.net.value_of(&flows));
        FlowResult {
            flows,
            total_flow,
            total_cost,
        }
    }
}

/// Minimum-cost maximum flow from the network's source to its sink.
pub fn solve(network: &Network) -> FlowResult {
    PrimalDual::new(network).run()
}

#[cfg(test)]
mod tests {
    use super::super::testing::random_layered;
    use super::super::{oracle, verify_optimality, Arc};
    use super::*;

    fn arc(from: usize, to: usize, capacity: i64, cost: i64) -> Arc {
        Arc {
            from,
            to,
            capacity,
            cost,
        }
    }

    #[test]
    fn single_path() {
        let net = Network::new(
            4,
            0,
            3,
            vec![arc(0, 1, 1, 6), arc(1, 2, 1, 0), arc(2, 3, 5, 10)],
        )
        .unwrap();
        let r = solve(&net);
        assert_eq!((r.total_flow, r.total_cost), (1, 16));
    }

    #[test]
    fn cheaper_point_wins_shared_pair() {
        // s=0, points 1 (cost 6) and 2 (cost 2), pair 3, sink 4 with M=1.
        let net = Network::new(
            5,
            0,
            4,
            vec![
                arc(0, 1, 1, 6),
                arc(0, 2, 1, 2),
                arc(1, 3, 1, 0),
                arc(2, 3, 1, 0),
                arc(3, 4, 1, 10),
            ],
        )
        .unwrap();
        let r = solve(&net);
        assert_eq!(r.total_flow, 1);
        assert_eq!(r.flows, vec![0, 1, 0, 1, 1]);
        assert_eq!(r.total_cost, 12);
    }

    #[test]
    fn reroutes_through_reverse_edges() {
        // Classic case where the greedy first path must be partially undone.
        let net = Network::new(
            4,
            0,
            3,
            vec![
                arc(0, 1, 1, 1),
                arc(0, 2, 1, 5),
                arc(1, 2, 1, 1),
                arc(1, 3, 1, 5),
                arc(2, 3, 1, 1),
            ],
        )
        .unwrap();
        let r = solve(&net);
        assert_eq!(r.total_flow, 2);
        assert_eq!(r.total_cost, 12);
        assert!(verify_optimality(&net, &r));
    }

    #[test]
    fn empty_network_has_zero_flow() {
        let net = Network::new(3, 0, 2, vec![]).unwrap();
        let r = solve(&net);
        assert_eq!((r.total_flow, r.total_cost), (0, 0));
    }

    #[test]
    fn random_graphs_match_oracle_and_certify() {
        for seed in 0..200 {
            let net = random_layered(seed, 20, 5, 10);
            let r = solve(&net);
            assert_eq!(r.total_flow, oracle::max_flow(&net), "seed {seed}");
            assert!(verify_optimality(&net, &r), "seed {seed}");
        }
    }

    #[test]
    fn cost_scaling_preserves_flows() {
        for seed in 0..50 {
            let net = random_layered(seed, 16, 4, 9);
            let scaled = Network::new(
                net.num_nodes(),
                net.source(),
                net.sink(),
                net.arcs()
                    .iter()
                    .map(|a| Arc {
                        cost: a.cost * 7,
                        ..*a
                    })
                    .collect(),
            )
            .unwrap();
            let (a, b) = (solve(&net), solve(&scaled));
            assert_eq!(a.flows, b.flows);
            assert_eq!(a.total_cost * 7, b.total_cost);
        }
    }
}
