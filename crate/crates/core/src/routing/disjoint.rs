use std::collections::VecDeque;

use super::{Path, PathSet, Scheme};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Residual network with a pair of unit arcs per undirected link.
struct FlowNet {
    head: Vec<usize>,
    cap: Vec<i32>,
    cost: Vec<i32>,
    /// Outgoing arc ids per node, in ascending head order.
    out: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(t: &Topology) -> Self {
        let n = t.switch_count();
        let mut net = FlowNet {
            head: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            out: vec![Vec::new(); n],
        };
        for &(a, b) in t.links() {
            net.arc(a, b);
            net.arc(b, a);
        }
        for u in 0..n {
            let head = &net.head;
            net.out[u].sort_by_key(|&e| (head[e], e));
        }
        net
    }

    /// Forward arc `e` (even) and its residual twin `e ^ 1`.
    fn arc(&mut self, u: usize, v: usize) {
        let e = self.head.len();
        self.head.extend([v, u]);
        self.cap.extend([1, 0]);
        self.cost.extend([1, -1]);
        self.out[u].push(e);
        self.out[v].push(e + 1);
    }

    /// Cheapest augmenting path by Bellman-Ford (SPFA); residual costs may
    /// be negative but the residual graph of a min-cost flow has no
    /// negative cycles.
    fn cheapest_path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let n = self.out.len();
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![usize::MAX; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        queued[src] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &self.out[u] {
                if self.cap[e] == 0 {
                    continue;
                }
                let v = self.head[e];
                let nd = dist[u] + self.cost[e] as i64;
                if nd < dist[v] {
                    dist[v] = nd;
                    via[v] = e;
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        if dist[dst] == i64::MAX {
            return None;
        }
        let mut arcs = Vec::new();
        let mut v = dst;
        while v != src {
            let e = via[v];
            arcs.push(e);
            v = self.head[e ^ 1];
        }
        arcs.reverse();
        Some(arcs)
    }

    fn flow(&self, e: usize) -> bool {
        e.is_multiple_of(2) && self.cap[e] == 0
    }
}

/// `k` pairwise edge-disjoint paths of least total length, by successive
/// cheapest augmentation on unit-capacity arcs (Suurballe / Bhandari
/// generalised to `k`). Returns the max-flow number of paths when fewer than
/// `k` edge-disjoint paths exist.
pub fn k_disjoint_paths(t: &Topology, src: usize, dst: usize, k: usize) -> Result<PathSet> {
    let n = t.switch_count();
    if src >= n || dst >= n {
        return Err(Error::InvalidArgument(format!("switch pair {src}->{dst} out of range")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let set = |paths: Vec<Path>| PathSet {
        src,
        dst,
        scheme: Scheme::KDisjoint(k),
        total: paths.len() as u128,
        paths,
    };
    if src == dst {
        return Ok(set(vec![Path::new(vec![src])]));
    }

    let mut net = FlowNet::new(t);
    let mut found = 0;
    while found < k {
        let Some(arcs) = net.cheapest_path(src, dst) else {
            break;
        };
        for e in arcs {
            net.cap[e] -= 1;
            net.cap[e ^ 1] += 1;
        }
        found += 1;
    }
    if found == 0 {
        return Err(Error::Unreachable { src, dst });
    }

    // opposite unit flows on one link cancel
    for &(a, b) in t.links() {
        let fwd = net.out[a].iter().copied().find(|&e| e % 2 == 0 && net.head[e] == b);
        let back = net.out[b].iter().copied().find(|&e| e % 2 == 0 && net.head[e] == a);
        if let (Some(f), Some(r)) = (fwd, back) {
            if net.flow(f) && net.flow(r) {
                net.cap[f] = 1;
                net.cap[f ^ 1] = 0;
                net.cap[r] = 1;
                net.cap[r ^ 1] = 0;
            }
        }
    }

    let mut used = vec![false; net.head.len()];
    let mut paths = Vec::with_capacity(found);
    for _ in 0..found {
        let mut hops = vec![src];
        let mut u = src;
        while u != dst {
            let e = net.out[u]
                .iter()
                .copied()
                .find(|&e| net.flow(e) && !used[e])
                .expect("flow conservation");
            used[e] = true;
            u = net.head[e];
            // cut any loop so the path stays simple
            if let Some(pos) = hops.iter().position(|&h| h == u) {
                hops.truncate(pos);
            }
            hops.push(u);
        }
        paths.push(Path::new(hops));
    }
    paths.sort_by(|a, b| (a.len(), a.hops()).cmp(&(b.len(), b.hops())));
    Ok(set(paths))
}
