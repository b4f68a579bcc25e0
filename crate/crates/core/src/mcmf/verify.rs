use std::collections::VecDeque;

use super::{FlowResult, Network};

/// Capacity bounds, conservation at inner vertices, and consistency of the
/// reported totals with the per-arc flows.
pub fn check_feasible(net: &Network, result: &FlowResult) -> bool {
    if result.flows.len() != net.arcs().len() {
        return false;
    }
    let mut excess = vec![0i64; net.num_nodes()];
    for (a, &f) in net.arcs().iter().zip(&result.flows) {
        if f < 0 || f > a.capacity {
            return false;
        }
        excess[a.from] -= f;
        excess[a.to] += f;
    }
    let conserved = excess
        .iter()
        .enumerate()
        .all(|(v, &x)| v == net.source() || v == net.sink() || x == 0);
    conserved
        && -excess[net.source()] == result.total_flow
        && excess[net.sink()] == result.total_flow
        && net.cost_of(&result.flows) == result.total_cost
}

/// Optimality certificate for a min-cost max-flow: the flow is feasible, the
/// residual graph has no source→sink path (maximum), and it has no negative
/// cycle (minimum cost among maximum flows).
pub fn verify_optimality(net: &Network, result: &FlowResult) -> bool {
    if !check_feasible(net, result) {
        return false;
    }
    // (from, to, cost) for every residual edge with positive capacity.
    let mut residual = Vec::new();
    for (a, &f) in net.arcs().iter().zip(&result.flows) {
        if f < a.capacity {
            residual.push((a.from, a.to, a.cost));
        }
        if f > 0 {
            residual.push((a.to, a.from, -a.cost));
        }
    }
    !has_augmenting_path(net, &residual) && !has_negative_cycle(net.num_nodes(), &residual)
}

fn has_augmenting_path(net: &Network, residual: &[(usize, usize, i64)]) -> bool {
    let mut adj = vec![Vec::new(); net.num_nodes()];
    for &(u, v, _) in residual {
        adj[u].push(v);
    }
    let mut seen = vec![false; net.num_nodes()];
    seen[net.source()] = true;
    let mut queue = VecDeque::from([net.source()]);
    while let Some(u) = queue.pop_front() {
        if u == net.sink() {
            return true;
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Bellman-Ford from a virtual root connected to every vertex at cost 0.
fn has_negative_cycle(n: usize, edges: &[(usize, usize, i64)]) -> bool {
    let mut dist = vec![0i64; n];
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, c) in edges {
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                changed = true;
            }
        }
        if !changed {
            return false;
        }
    }
    true
}
