//! Switch-level topologies: fat tree, leaf-spine and equipment-equivalent
//! random regular graphs, plus the NSR / UDF port arithmetic.
//!
//! Servers are numbered contiguously by switch: the servers of switch `u`
//! occupy `server_range(u)`. All links (network and server access) carry
//! the same unit rate.

mod build;
mod io;
mod rrg;

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::Ratio;

pub use build::{build_fat_tree, build_leaf_spine};
pub use io::{export_topology, import_topology};
pub use rrg::{random_graph_with_degrees, random_regular_graph, rewire_to_rrg};

/// Largest per-switch port count accepted by [`TopologySpec`].
pub const MAX_PORTS: usize = 1024;

/// Rate of every link, network or server access.
pub const LINK_CAPACITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    FatTree { k: usize, oversub: usize },
    LeafSpine { x: usize, y: usize },
    Rrg,
    /// Hand-built or imported graph.
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::FatTree { k, oversub } => write!(f, "fattree(k={k},oversub={oversub})"),
            TopologyKind::LeafSpine { x, y } => write!(f, "leafspine(x={x},y={y})"),
            TopologyKind::Rrg => f.write_str("rrg"),
            TopologyKind::Custom => f.write_str("custom"),
        }
    }
}

/// Parameters from which a topology is built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TopologySpec {
    FatTree { k: usize, oversub: usize },
    LeafSpine { x: usize, y: usize },
    Rrg { base: Box<TopologySpec>, seed: u64 },
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TopologySpec::FatTree { k, oversub } => {
                if k < 4 || k % 2 != 0 {
                    return Err(Error::InvalidSpec(format!("fat tree k must be even and >= 4, got {k}")));
                }
                if !matches!(oversub, 1 | 2 | 4) {
                    return Err(Error::InvalidSpec(format!(
                        "fat tree over-subscription must be 1, 2 or 4, got {oversub}"
                    )));
                }
                if k / 2 + oversub * k / 2 > MAX_PORTS {
                    return Err(Error::InvalidSpec(format!("fat tree k={k} exceeds {MAX_PORTS} ports")));
                }
                Ok(())
            }
            TopologySpec::LeafSpine { x, y } => {
                if x == 0 || y == 0 {
                    return Err(Error::InvalidSpec(format!("leaf-spine needs x, y >= 1, got x={x} y={y}")));
                }
                if x + y > MAX_PORTS {
                    return Err(Error::InvalidSpec(format!("leaf-spine x+y exceeds {MAX_PORTS} ports")));
                }
                Ok(())
            }
            TopologySpec::Rrg { ref base, .. } => match **base {
                TopologySpec::Rrg { .. } => Err(Error::InvalidSpec("random graph of a random graph".into())),
                ref b => b.validate(),
            },
        }
    }

    pub fn build(&self) -> Result<Topology> {
        self.validate()?;
        match *self {
            TopologySpec::FatTree { k, oversub } => build_fat_tree(k, oversub),
            TopologySpec::LeafSpine { x, y } => build_leaf_spine(x, y),
            TopologySpec::Rrg { ref base, seed } => rewire_to_rrg(&base.build()?, seed),
        }
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::FatTree { k, oversub } => write!(f, "fattree k={k} oversub={oversub}"),
            TopologySpec::LeafSpine { x, y } => write!(f, "leafspine x={x} y={y}"),
            TopologySpec::Rrg { base, seed } => write!(f, "rrg seed={seed} base=({base})"),
        }
    }
}

/// Immutable switch graph with per-switch port and server counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    ports: Vec<usize>,
    servers: Vec<usize>,
    /// Sorted neighbour lists.
    adj: Vec<Vec<usize>>,
    /// Unordered links as `(a, b)` with `a < b`, sorted.
    links: Vec<(usize, usize)>,
    /// `server_offset[u]..server_offset[u + 1]` are the servers of `u`.
    server_offset: Vec<usize>,
}

impl Topology {
    /// Assembles and validates a topology. Connectivity is not required
    /// here; the builders guarantee it and routing checks it.
    pub fn new(
        kind: TopologyKind,
        ports: Vec<usize>,
        servers: Vec<usize>,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = ports.len();
        if servers.len() != n {
            return Err(Error::InvalidTopology(format!(
                "{} port counts but {} server counts",
                n,
                servers.len()
            )));
        }
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (a, b) in links {
            if a >= n || b >= n {
                return Err(Error::InvalidTopology(format!("link {a}-{b} references a missing switch")));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at switch {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology(format!("parallel link {}-{}", w[0].0, w[0].1)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &norm {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        for u in 0..n {
            if servers[u] + adj[u].len() > ports[u] {
                return Err(Error::InvalidTopology(format!(
                    "switch {u} uses {} server + {} network ports but has {}",
                    servers[u],
                    adj[u].len(),
                    ports[u]
                )));
            }
        }
        let mut server_offset = Vec::with_capacity(n + 1);
        let mut acc = 0;
        server_offset.push(0);
        for &s in &servers {
            acc += s;
            server_offset.push(acc);
        }
        Ok(Topology {
            kind,
            ports,
            servers,
            adj,
            links: norm,
            server_offset,
        })
    }

    /// Graph with one unit of ports per link and no servers; handy for
    /// pure graph algorithms and tests.
    pub fn from_links(n: usize, links: &[(usize, usize)]) -> Result<Self> {
        let mut deg = vec![0; n];
        for &(a, b) in links {
            if a < n && b < n {
                deg[a] += 1;
                deg[b] += 1;
            }
        }
        Topology::new(TopologyKind::Custom, deg, vec![0; n], links.iter().copied())
    }

    /// Like [`Topology::from_links`] with the given servers per switch.
    pub fn from_links_with_servers(servers: &[usize], links: &[(usize, usize)]) -> Result<Self> {
        let n = servers.len();
        let mut ports = servers.to_vec();
        for &(a, b) in links {
            if a < n && b < n {
                ports[a] += 1;
                ports[b] += 1;
            }
        }
        Topology::new(TopologyKind::Custom, ports, servers.to_vec(), links.iter().copied())
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn switch_count(&self) -> usize {
        self.ports.len()
    }

    pub fn ports(&self, u: usize) -> usize {
        self.ports[u]
    }

    pub fn servers_at(&self, u: usize) -> usize {
        self.servers[u]
    }

    pub fn server_counts(&self) -> &[usize] {
        &self.servers
    }

    pub fn port_counts(&self) -> &[usize] {
        &self.ports
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Network ports of `u`: physical ports not attached to servers.
    pub fn network_ports(&self, u: usize) -> usize {
        self.ports[u] - self.servers[u]
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn has_link(&self, a: usize, b: usize) -> bool {
        a < self.adj.len() && self.adj[a].binary_search(&b).is_ok()
    }

    /// Position of `b` in the neighbour list of `a`.
    pub fn neighbor_index(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].binary_search(&b).ok()
    }

    pub fn total_servers(&self) -> usize {
        *self.server_offset.last().unwrap_or(&0)
    }

    pub fn total_ports(&self) -> usize {
        self.ports.iter().sum()
    }

    pub fn server_range(&self, u: usize) -> Range<usize> {
        self.server_offset[u]..self.server_offset[u + 1]
    }

    /// Switch (rack) hosting `server`.
    pub fn rack_of_server(&self, server: usize) -> usize {
        debug_assert!(server < self.total_servers());
        self.server_offset.partition_point(|&o| o <= server) - 1
    }

    /// Switches hosting at least one server, in index order.
    pub fn racks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.switch_count()).filter(move |&u| self.servers[u] > 0)
    }

    /// Whether the switches that have network links form one component.
    pub fn is_connected(&self) -> bool {
        let n = self.switch_count();
        let Some(start) = (0..n).find(|&u| !self.adj[u].is_empty()) else {
            return n <= 1;
        };
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        let with_links = self.adj.iter().filter(|l| !l.is_empty()).count();
        let isolated_with_servers = (0..n).any(|u| self.adj[u].is_empty() && self.servers[u] > 0);
        count == with_links && !(isolated_with_servers && with_links > 0)
    }

    /// Tier of a fat-tree switch: 0 for ToR, 1 for aggregation, 2 for core.
    /// `None` for other kinds.
    pub fn fat_tree_tier(&self, u: usize) -> Option<u8> {
        match self.kind {
            TopologyKind::FatTree { k, .. } => {
                let edge = k * k / 2;
                Some(if u < edge {
                    0
                } else if u < 2 * edge {
                    1
                } else {
                    2
                })
            }
            _ => None,
        }
    }

    pub(crate) fn with_kind(mut self, kind: TopologyKind) -> Self {
        self.kind = kind;
        self
    }
}

/// Network-to-server port ratio over server-hosting switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nsr {
    /// Smallest ratio across racks.
    pub min: Ratio,
    /// Mean ratio across racks.
    pub mean: f64,
}

pub fn nsr(t: &Topology) -> Result<Nsr> {
    let mut min: Option<Ratio> = None;
    let mut sum = 0.0;
    let mut racks = 0usize;
    for u in t.racks() {
        let r = Ratio::new(t.network_ports(u) as u64, t.servers_at(u) as u64);
        min = Some(min.map_or(r, |m| m.min(r)));
        sum += t.network_ports(u) as f64 / t.servers_at(u) as f64;
        racks += 1;
    }
    let min = min.ok_or(Error::NoServers)?;
    Ok(Nsr {
        min,
        mean: sum / racks as f64,
    })
}

/// NSR of the ideal equipment-equivalent random graph: the pooled network
/// ports divided by the pooled servers, without per-switch rounding.
pub fn ideal_rrg_nsr(base: &Topology) -> Result<Ratio> {
    let servers = base.total_servers() as u64;
    if servers == 0 {
        return Err(Error::NoServers);
    }
    Ok(Ratio::new(base.total_ports() as u64 - servers, servers))
}

/// Uplink-to-downlink factor with ideal (non-rounded) port arithmetic.
pub fn udf(spec: &TopologySpec) -> Result<Ratio> {
    match spec {
        TopologySpec::Rrg { base, .. } => {
            base.validate()?;
            Ok(Ratio::from_integer(1))
        }
        _ => {
            let base = spec.build()?;
            Ok(ideal_rrg_nsr(&base)? / nsr(&base)?.min)
        }
    }
}

/// Uplink-to-downlink factor measured on an actual rewired graph.
pub fn udf_empirical(spec: &TopologySpec, seed: u64) -> Result<Ratio> {
    match spec {
        TopologySpec::Rrg { .. } => {
            spec.validate()?;
            Ok(Ratio::from_integer(1))
        }
        _ => {
            let base = spec.build()?;
            let rrg = rewire_to_rrg(&base, seed)?;
            Ok(nsr(&rrg)?.min / nsr(&base)?.min)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_links() {
        assert!(Topology::from_links(3, &[(0, 0)]).is_err());
        assert!(Topology::from_links(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Topology::from_links(3, &[(0, 5)]).is_err());
    }

    #[test]
    fn rejects_port_overflow() {
        let err = Topology::new(TopologyKind::Custom, vec![1, 1], vec![1, 0], [(0, 1)]);
        assert!(err.is_err());
    }

    #[test]
    fn rack_lookup() {
        let t = Topology::from_links_with_servers(&[2, 0, 3], &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(t.total_servers(), 5);
        assert_eq!(t.rack_of_server(0), 0);
        assert_eq!(t.rack_of_server(1), 0);
        assert_eq!(t.rack_of_server(2), 2);
        assert_eq!(t.rack_of_server(4), 2);
        assert_eq!(t.racks().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(t.server_range(2), 2..5);
    }

    #[test]
    fn connectivity() {
        assert!(Topology::from_links(4, &[(0, 1), (1, 2), (2, 3)]).unwrap().is_connected());
        assert!(!Topology::from_links(4, &[(0, 1), (2, 3)]).unwrap().is_connected());
    }

    #[test]
    fn nsr_requires_servers() {
        let t = Topology::from_links(2, &[(0, 1)]).unwrap();
        assert!(matches!(nsr(&t), Err(Error::NoServers)));
    }

    #[test]
    fn spec_validation() {
        assert!(TopologySpec::FatTree { k: 5, oversub: 1 }.validate().is_err());
        assert!(TopologySpec::FatTree { k: 2, oversub: 1 }.validate().is_err());
        assert!(TopologySpec::FatTree { k: 4, oversub: 3 }.validate().is_err());
        assert!(TopologySpec::LeafSpine { x: 0, y: 2 }.validate().is_err());
        assert!(TopologySpec::LeafSpine { x: 1000, y: 100 }.validate().is_err());
        let nested = TopologySpec::Rrg {
            base: Box::new(TopologySpec::Rrg {
                base: Box::new(TopologySpec::LeafSpine { x: 2, y: 2 }),
                seed: 1,
            }),
            seed: 2,
        };
        assert!(nested.validate().is_err());
    }
}
