use super::{Topology, TopologyKind, TopologySpec};
use crate::error::Result;

/// Canonical 3-tier k-ary fat tree.
///
/// Switch numbering: ToRs `0..k²/2` (pod-major), aggregation
/// `k²/2..k²`, core `k²..5k²/4`. Each ToR keeps its `k/2` uplinks and
/// hosts `oversub * k/2` servers on an enlarged port budget.
pub fn build_fat_tree(k: usize, oversub: usize) -> Result<Topology> {
    TopologySpec::FatTree { k, oversub }.validate()?;
    let half = k / 2;
    let pods = k;
    let tors = pods * half;
    let aggs = pods * half;
    let cores = half * half;
    let n = tors + aggs + cores;

    let mut ports = vec![k; n];
    let mut servers = vec![0; n];
    for u in 0..tors {
        ports[u] = half + oversub * half;
        servers[u] = oversub * half;
    }

    let mut links = Vec::with_capacity(tors * half + aggs * half);
    for pod in 0..pods {
        for a in 0..half {
            let agg = tors + pod * half + a;
            for e in 0..half {
                links.push((pod * half + e, agg));
            }
            // aggregation switch `a` of every pod reaches core group `a`
            for c in 0..half {
                links.push((agg, tors + aggs + a * half + c));
            }
        }
    }
    Topology::new(TopologyKind::FatTree { k, oversub }, ports, servers, links)
}

/// Two-tier leaf-spine: `y` spines, `x + y` leaves, `x` servers per leaf,
/// every switch with `x + y` ports. Leaves are `0..x+y`, spines follow.
pub fn build_leaf_spine(x: usize, y: usize) -> Result<Topology> {
    TopologySpec::LeafSpine { x, y }.validate()?;
    let leaves = x + y;
    let n = leaves + y;
    let ports = vec![x + y; n];
    let mut servers = vec![0; n];
    servers[..leaves].fill(x);
    let links = (0..leaves).flat_map(|l| (0..y).map(move |s| (l, leaves + s)));
    Topology::new(TopologyKind::LeafSpine { x, y }, ports, servers, links)
}
