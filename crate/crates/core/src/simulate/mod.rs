//! Flow-level simulation: binding flows to switch paths, max-min fair
//! rates by water-filling, and a fluid event-driven flow-completion-time
//! model.
//!
//! Rates are fractions of the unit link rate; 1.0 corresponds to 1 Gbps.

mod fct;
mod maxmin;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hash::{hash_words, pick};
use crate::routing::{k_disjoint_paths, k_shortest_paths, NextHopTable, Path, Scheme};
use crate::topology::Topology;
use crate::traffic::TrafficPattern;

pub use fct::{fct_simulate, fct_simulate_links, percentile, write_fct_dump, FctResult, BYTES_PER_SECOND};
pub use maxmin::{jain_index, maxmin_allocate, water_fill, write_allocation_dump, Allocation, SATURATION_EPS};

/// A flow bound to one switch path. The server access links at either end
/// are implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRoute {
    pub flow: usize,
    pub src_server: usize,
    pub dst_server: usize,
    pub path: Path,
}

/// Dense ids for directed links: each switch link contributes one id per
/// direction, then every server has an uplink and a downlink.
#[derive(Debug, Clone)]
pub struct LinkMap {
    offset: Vec<usize>,
    adj: Vec<Vec<usize>>,
    servers: usize,
}

impl LinkMap {
    pub fn new(t: &Topology) -> Self {
        let n = t.switch_count();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for u in 0..n {
            offset.push(offset[u] + t.degree(u));
        }
        LinkMap {
            offset,
            adj: (0..n).map(|u| t.neighbors(u).to_vec()).collect(),
            servers: t.total_servers(),
        }
    }

    fn network(&self) -> usize {
        *self.offset.last().unwrap()
    }

    /// Total number of directed links.
    pub fn len(&self) -> usize {
        self.network() + 2 * self.servers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Id of the directed switch link `u -> v`, if it exists.
    pub fn directed(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].binary_search(&v).ok().map(|i| self.offset[u] + i)
    }

    pub fn uplink(&self, server: usize) -> usize {
        self.network() + server
    }

    pub fn downlink(&self, server: usize) -> usize {
        self.network() + self.servers + server
    }

    /// Directed links used by a routed flow, server uplink first.
    pub fn route_links(&self, r: &FlowRoute) -> Vec<usize> {
        let mut out = Vec::with_capacity(r.path.len() + 2);
        out.push(self.uplink(r.src_server));
        out.extend(
            r.path
                .links()
                .map(|(a, b)| self.directed(a, b).expect("route follows topology links")),
        );
        out.push(self.downlink(r.dst_server));
        out
    }

    /// Unit capacity for every directed link.
    pub fn capacities<T: crate::Scalar>(&self) -> Vec<T> {
        vec![T::lit(crate::topology::LINK_CAPACITY); self.len()]
    }
}

/// Next hop chosen by switch `u` for flow `flow`: the ideal per-switch hash
/// over the flow identifier.
pub fn ecmp_next_hop(table: &NextHopTable, seed: u64, flow: usize, u: usize, dst: usize) -> Option<usize> {
    let hops = table.next_hops(u, dst);
    if hops.is_empty() {
        return None;
    }
    let h = hash_words(&[seed, u as u64, flow as u64]);
    Some(hops[pick(h, hops.len())])
}

/// Hop-by-hop ECMP path for one flow.
pub fn ecmp_path(table: &NextHopTable, seed: u64, flow: usize, src: usize, dst: usize) -> Result<Path> {
    if table.distance(src, dst) == u32::MAX {
        return Err(Error::Unreachable { src, dst });
    }
    let mut hops = vec![src];
    let mut u = src;
    while u != dst {
        u = ecmp_next_hop(table, seed, flow, u, dst).ok_or(Error::Unreachable { src, dst })?;
        hops.push(u);
    }
    Ok(Path::new(hops))
}

/// Binds every flow of `p` to a switch path. ECMP hashes per switch;
/// the source-routed schemes pick uniformly among the pair's path set using
/// a hash of the flow id.
pub fn assign_paths(
    t: &Topology,
    table: &NextHopTable,
    p: &TrafficPattern,
    scheme: Scheme,
    seed: u64,
) -> Result<Vec<FlowRoute>> {
    let total = t.total_servers();
    let mut sets: BTreeMap<(usize, usize), Vec<Path>> = BTreeMap::new();
    let mut routes = Vec::with_capacity(p.len());
    for (id, f) in p.flows.iter().enumerate() {
        if f.src >= total || f.dst >= total {
            return Err(Error::InvalidArgument(format!(
                "flow {id} references server outside 0..{total}"
            )));
        }
        let (a, b) = (t.rack_of_server(f.src), t.rack_of_server(f.dst));
        let path = match scheme {
            Scheme::Ecmp => ecmp_path(table, seed, id, a, b)?,
            Scheme::KShortest(k) | Scheme::KDisjoint(k) => {
                let set = match sets.entry((a, b)) {
                    std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::btree_map::Entry::Vacant(e) => {
                        let paths = if matches!(scheme, Scheme::KShortest(_)) {
                            k_shortest_paths(t, a, b, k)?.paths
                        } else {
                            k_disjoint_paths(t, a, b, k)?.paths
                        };
                        if paths.is_empty() {
                            return Err(Error::Unreachable { src: a, dst: b });
                        }
                        e.insert(paths)
                    }
                };
                let h = hash_words(&[seed, 0x5052_4f55_5445, id as u64]);
                set[pick(h, set.len())].clone()
            }
        };
        routes.push(FlowRoute {
            flow: id,
            src_server: f.src,
            dst_server: f.dst,
            path,
        });
    }
    Ok(routes)
}

/// One line per routed flow: `flow_id src_server dst_server path`.
pub fn write_route_dump(routes: &[FlowRoute]) -> String {
    let mut out = String::new();
    for r in routes {
        let _ = writeln!(out, "{} {} {} {}", r.flow, r.src_server, r.dst_server, r.path);
    }
    out
}
