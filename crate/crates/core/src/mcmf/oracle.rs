//! Reference maximum flow used to cross-check [`super::solve`].
//!
//! Edmonds-Karp (breadth-first shortest augmenting paths) on its own
//! residual representation; it shares no code with the cost-aware solver.

use std::collections::{HashMap, VecDeque};

use super::Network;

/// Maximum source→sink flow value, ignoring costs.
pub fn max_flow(net: &Network) -> i64 {
    let n = net.num_nodes();
    // Parallel arcs merge; antiparallel arcs share one residual entry pair.
    let mut cap: HashMap<(usize, usize), i64> = HashMap::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in net.arcs() {
        *cap.entry((a.from, a.to)).or_insert(0) += a.capacity;
        cap.entry((a.to, a.from)).or_insert(0);
        adj[a.from].push(a.to);
        adj[a.to].push(a.from);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let (s, t) = (net.source(), net.sink());
    let mut total = 0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &v in &adj[u] {
                if parent[v] == usize::MAX && cap[&(u, v)] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return total;
        }
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let u = parent[v];
            bottleneck = bottleneck.min(cap[&(u, v)]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            *cap.get_mut(&(u, v)).unwrap() -= bottleneck;
            *cap.get_mut(&(v, u)).unwrap() += bottleneck;
            v = u;
        }
        total += bottleneck;
    }
}
