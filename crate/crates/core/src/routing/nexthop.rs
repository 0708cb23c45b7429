use std::collections::VecDeque;

use super::{Path, PathSet, Scheme};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Default cap on enumerated shortest paths.
pub const DEFAULT_PATH_CAP: usize = 64;

const UNREACHABLE: u32 = u32::MAX;

/// BFS hop distances from `src`; `u32::MAX` marks unreachable switches.
pub fn bfs_distances(t: &Topology, src: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; t.switch_count()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs shortest-path distances and ECMP next hops.
#[derive(Debug, Clone)]
pub struct NextHopTable {
    n: usize,
    /// `dist[d * n + u]`: hops from `u` to `d`.
    dist: Vec<u32>,
    /// `hops[d * n + u]`: neighbours of `u` one hop closer to `d`, ascending.
    hops: Vec<Vec<usize>>,
}

/// Builds the per-destination shortest-path DAGs. Fails on a disconnected
/// topology.
pub fn compute_next_hops(t: &Topology) -> Result<NextHopTable> {
    let n = t.switch_count();
    let mut dist = Vec::with_capacity(n * n);
    for d in 0..n {
        let row = bfs_distances(t, d);
        if row.contains(&UNREACHABLE) {
            return Err(Error::Disconnected);
        }
        dist.extend(row);
    }
    let mut hops = Vec::with_capacity(n * n);
    for d in 0..n {
        let row = &dist[d * n..(d + 1) * n];
        for u in 0..n {
            let want = row[u].wrapping_sub(1);
            hops.push(t.neighbors(u).iter().copied().filter(|&v| row[v] == want && u != d).collect());
        }
    }
    Ok(NextHopTable { n, dist, hops })
}

impl NextHopTable {
    pub fn switch_count(&self) -> usize {
        self.n
    }

    pub fn distance(&self, u: usize, d: usize) -> u32 {
        self.dist[d * self.n + u]
    }

    /// Next hops from `u` toward `d`; empty when `u == d`.
    pub fn next_hops(&self, u: usize, d: usize) -> &[usize] {
        &self.hops[d * self.n + u]
    }

    /// Exact number of shortest paths from `src` to `dst` (saturating).
    pub fn path_count(&self, src: usize, dst: usize) -> u128 {
        let n = self.n;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&u| self.distance(u, dst));
        let mut count = vec![0u128; n];
        count[dst] = 1;
        for &u in &order {
            if u == dst {
                continue;
            }
            count[u] = self
                .next_hops(u, dst)
                .iter()
                .fold(0u128, |acc, &v| acc.saturating_add(count[v]));
            if u == src {
                break;
            }
        }
        count[src]
    }

    /// Up to `cap` shortest paths in lexicographic hop order.
    pub fn enumerate(&self, src: usize, dst: usize, cap: usize) -> Vec<Path> {
        let mut out = Vec::new();
        let mut prefix = vec![src];
        self.walk(dst, &mut prefix, cap, &mut out);
        out
    }

    fn walk(&self, dst: usize, prefix: &mut Vec<usize>, cap: usize, out: &mut Vec<Path>) {
        if out.len() >= cap {
            return;
        }
        let u = *prefix.last().unwrap();
        if u == dst {
            out.push(Path::new(prefix.clone()));
            return;
        }
        for &v in self.next_hops(u, dst) {
            prefix.push(v);
            self.walk(dst, prefix, cap, out);
            prefix.pop();
            if out.len() >= cap {
                return;
            }
        }
    }
}

/// All shortest paths between two switches, truncated at `cap` with the
/// exact count kept in [`PathSet::total`].
pub fn shortest_paths(table: &NextHopTable, src: usize, dst: usize, cap: usize) -> Result<PathSet> {
    if src >= table.n || dst >= table.n {
        return Err(Error::InvalidArgument(format!("switch pair {src}->{dst} out of range")));
    }
    Ok(PathSet {
        src,
        dst,
        scheme: Scheme::Ecmp,
        paths: table.enumerate(src, dst, cap),
        total: table.path_count(src, dst),
    })
}
