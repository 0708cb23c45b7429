use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{Path, PathSet, Scheme};
use crate::error::{Error, Result};
use crate::topology::Topology;

/// Lexicographically smallest shortest path from `src` to `dst` avoiding
/// `banned_nodes` and the directed `banned_edges`.
fn masked_shortest(
    t: &Topology,
    src: usize,
    dst: usize,
    banned_nodes: &[bool],
    banned_edges: &HashSet<(usize, usize)>,
) -> Option<Vec<usize>> {
    let n = t.switch_count();
    // distances to dst over reversed usable arcs
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    dist[dst] = 0;
    queue.push_back(dst);
    while let Some(v) = queue.pop_front() {
        for &u in t.neighbors(v) {
            if dist[u] == u32::MAX && !banned_nodes[u] && !banned_edges.contains(&(u, v)) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[src] == u32::MAX {
        return None;
    }
    let mut path = vec![src];
    let mut u = src;
    while u != dst {
        u = t
            .neighbors(u)
            .iter()
            .copied()
            .find(|&v| dist[v] != u32::MAX && dist[v] + 1 == dist[u] && !banned_edges.contains(&(u, v)))?;
        path.push(u);
    }
    Some(path)
}

/// First `k` loop-free paths in (length, lexicographic hop sequence) order,
/// by Yen's deviation algorithm. Returns fewer when fewer exist.
pub fn k_shortest_paths(t: &Topology, src: usize, dst: usize, k: usize) -> Result<PathSet> {
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
        scheme: Scheme::KShortest(k),
        total: paths.len() as u128,
        paths,
    };
    if src == dst {
        return Ok(set(vec![Path::new(vec![src])]));
    }
    let none = vec![false; n];
    let first = masked_shortest(t, src, dst, &none, &HashSet::new()).ok_or(Error::Unreachable { src, dst })?;

    let mut accepted: Vec<Vec<usize>> = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut banned_nodes = vec![false; n];
    while accepted.len() < k {
        let last = accepted.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut banned_edges = HashSet::new();
            for p in &accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    banned_edges.insert((p[i], p[i + 1]));
                }
            }
            banned_nodes.fill(false);
            for &r in &root[..i] {
                banned_nodes[r] = true;
            }
            if let Some(tail) = masked_shortest(t, spur, dst, &banned_nodes, &banned_edges) {
                let mut full = root[..i].to_vec();
                full.extend(tail);
                if !accepted.contains(&full) {
                    candidates.insert((full.len(), full));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => accepted.push(p),
            None => break,
        }
    }
    Ok(set(accepted.into_iter().map(Path::new).collect()))
}
